// src/eval.cc

// Copyright 2026  The emorec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "emorec/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "emorec/error.h"
#include "emorec/vtlp.h"

namespace emorec {

void ConfusionMatrix::merge(const ConfusionMatrix &other) {
  for (std::size_t i = 0; i < kNumEmotions; ++i)
    for (std::size_t j = 0; j < kNumEmotions; ++j) counts[i][j] += other.counts[i][j];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto &row : counts) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < kNumEmotions; ++i) n += counts[i][i];
  return n;
}

std::uint64_t ConfusionMatrix::support(Emotion e) const {
  const auto &row = counts[index_of(e)];
  return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
}

ConfusionMatrix confusion_from_pairs(std::span<const Emotion> truth,
                                     std::span<const Emotion> predicted) {
  if (truth.size() != predicted.size()) throw DataError("truth and prediction counts differ");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truth.size(); ++i) m.add(truth[i], predicted[i]);
  return m;
}

double weighted_accuracy(const ConfusionMatrix &m) {
  const auto total = m.total();
  if (total == 0) throw DataError("weighted accuracy of an empty confusion matrix");
  return static_cast<double>(m.trace()) / static_cast<double>(total);
}

double unweighted_accuracy(const ConfusionMatrix &m) {
  double sum = 0.0;
  int supported = 0;
  for (Emotion e : kAllEmotions) {
    const auto n = m.support(e);
    if (n == 0) continue;
    sum += static_cast<double>(m.counts[index_of(e)][index_of(e)]) / static_cast<double>(n);
    ++supported;
  }
  if (supported == 0) throw DataError("unweighted accuracy needs at least one supported class");
  return sum / supported;
}

Metrics score(const ConfusionMatrix &m) { return {weighted_accuracy(m), unweighted_accuracy(m), m}; }

Emotion decide_vote(std::span<const std::array<double, kNumEmotions>> copy_probs) {
  std::array<int, kNumEmotions> votes{};
  std::array<double, kNumEmotions> mass{};
  for (const auto &p : copy_probs) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumEmotions; ++c)
      if (p[c] > p[best]) best = c;
    ++votes[best];
    for (std::size_t c = 0; c < kNumEmotions; ++c) mass[c] += p[c];
  }
  std::size_t winner = 0;
  for (std::size_t c = 1; c < kNumEmotions; ++c) {
    if (votes[c] > votes[winner] || (votes[c] == votes[winner] && mass[c] > mass[winner]))
      winner = c;
  }
  return kAllEmotions[winner];
}

namespace {

std::vector<std::array<double, kNumEmotions>> eval_probs(const TrainedModel &model,
                                                         std::span<const Spectrogram> copies,
                                                         kernels::Backend backend) {
  std::vector<Spectrogram> normalized;
  std::vector<Emotion> dummy(copies.size(), Emotion::kNeutral);
  for (const auto &c : copies) normalized.push_back(normalize(c, model.stats));
  PaddedBatch batch = pad_batch(normalized, dummy);
  ForwardResult r = forward(batch, model.params, {Mode::kEval, backend});
  std::vector<std::array<double, kNumEmotions>> out(copies.size());
  for (std::size_t b = 0; b < copies.size(); ++b)
    for (std::size_t c = 0; c < kNumEmotions; ++c) out[b][c] = r.probs.data[b * kNumEmotions + c];
  return out;
}

}  // namespace

Emotion tta_predict(const TrainedModel &model, const Spectrogram &raw, kernels::Backend backend) {
  std::vector<Spectrogram> copies;
  for (double alpha : tta_alphas()) copies.push_back(warp_spectrogram(raw, alpha));
  return decide_vote(eval_probs(model, copies, backend));
}

Emotion predict(const TrainedModel &model, const Spectrogram &raw, kernels::Backend backend) {
  return decide_vote(eval_probs(model, std::span<const Spectrogram>(&raw, 1), backend));
}

AggregateReport aggregate(std::span<const FoldResult> results) {
  if (results.empty()) throw DataError("nothing to aggregate");
  AggregateReport r;
  r.folds.assign(results.begin(), results.end());
  std::stable_sort(r.folds.begin(), r.folds.end(),
                   [](const FoldResult &a, const FoldResult &b) { return a.fold_id < b.fold_id; });
  for (std::size_t i = 1; i < r.folds.size(); ++i)
    if (r.folds[i].fold_id == r.folds[i - 1].fold_id)
      throw DataError("fold " + std::to_string(r.folds[i].fold_id) + " appears more than once");
  // Sums run in fold-id order so the result does not depend on input order.
  for (const auto &f : r.folds) {
    r.mean_wa += f.metrics.wa;
    r.mean_ua += f.metrics.ua;
  }
  r.mean_wa /= static_cast<double>(r.folds.size());
  r.mean_ua /= static_cast<double>(r.folds.size());

  std::vector<FoldResult> ranked = r.folds;
  std::stable_sort(ranked.begin(), ranked.end(), [](const FoldResult &a, const FoldResult &b) {
    return a.metrics.ua > b.metrics.ua;
  });
  ranked.resize(std::min<std::size_t>(5, ranked.size()));
  std::sort(ranked.begin(), ranked.end(),
            [](const FoldResult &a, const FoldResult &b) { return a.fold_id < b.fold_id; });
  for (const auto &f : ranked) {
    r.best5_wa += f.metrics.wa;
    r.best5_ua += f.metrics.ua;
    r.best5_folds.push_back(f.fold_id);
  }
  r.best5_wa /= static_cast<double>(ranked.size());
  r.best5_ua /= static_cast<double>(ranked.size());
  return r;
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

void write_results_csv(std::ostream &os, std::span<const FoldResult> results) {
  os << "fold,session,gender,wa,ua,best_epoch\n";
  char buf[128];
  for (const auto &f : results) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%c,%.4f,%.4f,%d\n", f.fold_id, f.test_speaker.session,
                  gender_code(f.test_speaker.gender), 100.0 * f.metrics.wa, 100.0 * f.metrics.ua,
                  f.best_epoch);
    os << buf;
  }
}

std::vector<FoldResult> parse_results_csv(const std::string &text) {
  std::vector<FoldResult> out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "fold,session,gender,wa,ua,best_epoch")
        throw DataError("results CSV: expected header fold,session,gender,wa,ua,best_epoch");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    auto fail = [&](const std::string &why) {
      throw DataError("results CSV row " + std::to_string(line_no) + ": " + why);
    };
    if (f.size() != 6) fail("expected 6 columns");
    FoldResult r;
    try {
      r.fold_id = std::stoi(f[0]);
      r.test_speaker.session = std::stoi(f[1]);
      r.metrics.wa = std::stod(f[3]) / 100.0;
      r.metrics.ua = std::stod(f[4]) / 100.0;
      r.best_epoch = std::stoi(f[5]);
    } catch (const std::exception &) {
      fail("malformed number");
    }
    if (f[2] == "F") r.test_speaker.gender = Gender::kFemale;
    else if (f[2] == "M") r.test_speaker.gender = Gender::kMale;
    else fail("gender must be F or M");
    if (r.fold_id < 1 || r.fold_id > kNumFolds) fail("fold outside [1, 10]");
    const FoldSplit expected = fold_split(r.fold_id);
    if (expected.test != r.test_speaker) fail("session/gender do not match fold " + f[0]);
    out.push_back(r);
  }
  if (out.empty()) throw DataError("results CSV has no rows");
  return out;
}

std::vector<FoldResult> read_results_csv(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open results " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_results_csv(ss.str());
}

void write_aggregate(std::ostream &os, const AggregateReport &r) {
  char buf[64];
  auto pct = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.1f", round_half_up(100.0 * v, 1));
    return std::string(buf);
  };
  os << "folds: " << r.folds.size() << '\n';
  os << "mean_wa: " << pct(r.mean_wa) << '\n';
  os << "mean_ua: " << pct(r.mean_ua) << '\n';
  os << "best5_wa: " << pct(r.best5_wa) << '\n';
  os << "best5_ua: " << pct(r.best5_ua) << '\n';
  os << "best5_folds:";
  for (int f : r.best5_folds) os << ' ' << f;
  os << '\n';
}

void write_confusion_csv(std::ostream &os, const ConfusionMatrix &m) {
  os << "true\\predicted";
  for (Emotion e : kAllEmotions) os << ',' << emotion_name(e);
  os << '\n';
  for (Emotion t : kAllEmotions) {
    os << emotion_name(t);
    for (Emotion p : kAllEmotions) os << ',' << m.counts[index_of(t)][index_of(p)];
    os << '\n';
  }
}

}  // namespace emorec
