// tests/acceptance.cc

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

// Acceptance checks for the emorec toolkit. Prints one PASS/FAIL line per
// criterion and exits nonzero if any fails. Criterion numbers given on the
// command line restrict the run to those criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "emorec/cli.h"
#include "emorec/eval.h"
#include "emorec/gradcheck.h"
#include "emorec/net.h"
#include "emorec/optim.h"
#include "emorec/synth.h"
#include "emorec/train.h"
#include "emorec/vtlp.h"

namespace emorec {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. Finite-difference gradient check on a 2-conv, 1-Bi-LSTM network with
// sequence batch norm, hidden size 8, batch 3, mixed lengths.
Outcome gradient_oracle() {
  GradcheckConfig gc;
  gc.hidden_size = 8;
  gc.batch = 3;
  gc.seq_batchnorm = true;
  gc.tolerance = 1e-4;
  const GradcheckReport r = run_gradcheck(gc, GradcheckFault::kNone);
  const bool ok = r.passed() && r.max_rel_error <= 1e-4 && r.seconds < 60.0;
  return {ok, fmt("max relative error %.3g over %g tensors in %.2f s", r.max_rel_error,
                  static_cast<double>(r.tensors.size()), r.seconds)};
}

PaddedBatch random_batch(std::size_t bins, const std::vector<std::size_t> &lengths, Rng &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Spectrogram> specs;
  std::vector<Emotion> labels;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    Spectrogram s;
    s.frames = lengths[i];
    s.bins = bins;
    s.values.resize(s.frames * s.bins);
    for (auto &v : s.values) v = g(rng);
    specs.push_back(std::move(s));
    labels.push_back(kAllEmotions[i % kNumEmotions]);
  }
  return pad_batch(specs, labels);
}

// 2. Rewriting padded cells with garbage changes no logit by more than 1e-12.
Outcome mask_neutrality() {
  NetworkConfig c;
  c.conv_layers = {{4, 3, 3, 1, 2}, {4, 3, 3, 2, 2}, {5, 3, 3, 2, 1}};
  c.bilstm_layers = 2;
  c.hidden_size = 6;
  c.use_seq_batchnorm = true;
  c.input_bins = 17;
  Rng rng(2);
  std::uniform_int_distribution<std::size_t> batch_size(2, 5), len(c.min_frames(), 40);
  std::uniform_real_distribution<double> garbage(-1e4, 1e4);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const NetworkParams p = init_params(c, 1000 + trial);
    std::vector<std::size_t> lengths(batch_size(rng));
    for (auto &l : lengths) l = len(rng);
    lengths[trial % lengths.size()] = 40;
    if (trial % 3 == 0) lengths[(trial + 1) % lengths.size()] = c.min_frames();
    const PaddedBatch clean = random_batch(c.input_bins, lengths, rng);
    PaddedBatch dirty = clean;
    for (std::size_t b = 0; b < dirty.batch; ++b)
      for (std::size_t t = dirty.lengths[b]; t < dirty.max_frames; ++t)
        for (std::size_t f = 0; f < dirty.bins; ++f) dirty.at(b, t, f) = garbage(rng);
    const Mode mode = trial % 2 == 0 ? Mode::kTrain : Mode::kEval;
    const auto backend = trial % 4 < 2 ? kernels::Backend::kSerial : kernels::Backend::kParallel;
    const ForwardResult a = forward(clean, p, {mode, backend});
    const ForwardResult d = forward(dirty, p, {mode, backend});
    for (std::size_t i = 0; i < a.logits.size(); ++i)
      worst = std::max(worst, std::abs(a.logits.data[i] - d.logits.data[i]));
  }
  return {worst <= 1e-12, fmt("100 trials, largest logit change %.3g", worst)};
}

// Piecewise-linear warp evaluated directly in extended precision.
long double warp_oracle(long double f, long double alpha, long double f0, long double f_max) {
  if (f <= f0) return alpha * f;
  return f_max - (f_max - alpha * f0) / (f_max - f0) * (f_max - f);
}

// 3. Identity at alpha = 1 and warp geometry on random (alpha, f) samples.
Outcome vtlp_geometry() {
  Rng rng(3);
  std::normal_distribution<double> g(-4.0, 2.0);
  double identity_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Spectrogram s;
    s.frames = 5 + trial;
    s.bins = trial % 2 == 0 ? 129 : 257;
    s.fft_size = 2 * (s.bins - 1);
    s.sample_rate = trial % 2 == 0 ? 8000 : 16000;
    s.values.resize(s.frames * s.bins);
    for (auto &v : s.values) v = g(rng);
    const Spectrogram w = warp_spectrogram(s, 1.0);
    for (std::size_t i = 0; i < s.values.size(); ++i)
      identity_err = std::max(identity_err, std::abs(w.values[i] - s.values[i]));
  }

  std::uniform_real_distribution<double> alpha_dist(0.9, 1.1), ratio_dist(0.5, 0.9),
      fmax_dist(2000.0, 8000.0), unit(0.0, 1.0);
  double endpoint_err = 0.0, continuity_err = 0.0, oracle_err = 0.0;
  bool monotone = true;
  for (int trial = 0; trial < 1000; ++trial) {
    WarpParams p;
    p.alpha = alpha_dist(rng);
    p.f0_ratio = trial % 2 == 0 ? 0.9 : ratio_dist(rng);
    p.f_max = trial % 3 == 0 ? 4000.0 : fmax_dist(rng);
    const double f0 = p.f0();
    const double f = unit(rng) * p.f_max;
    endpoint_err = std::max({endpoint_err, std::abs(warp_frequency(0.0, p)),
                             std::abs(warp_frequency(p.f_max, p) - p.f_max)});
    const double above = std::nextafter(f0, p.f_max);
    continuity_err = std::max({continuity_err, std::abs(warp_frequency(f0, p) - p.alpha * f0),
                               std::abs(warp_frequency(above, p) - warp_frequency(f0, p))});
    oracle_err = std::max(
        oracle_err, static_cast<double>(std::fabs(warp_oracle(f, p.alpha, f0, p.f_max) -
                                                  static_cast<long double>(warp_frequency(f, p)))));
    const double g_lo = warp_frequency(std::max(0.0, f - 1.0), p);
    monotone = monotone && g_lo <= warp_frequency(f, p);
  }
  const bool ok = identity_err <= 1e-9 && endpoint_err <= 1e-9 && continuity_err <= 1e-9 &&
                  oracle_err <= 1e-9 && monotone;
  return {ok, fmt("identity %.3g, endpoints %.3g, knee %.3g", identity_err, endpoint_err,
                  continuity_err) +
                  fmt(", formula %.3g over 1000 samples", oracle_err)};
}

// 4. Sequence batch-norm statistics against a brute-force recount.
Outcome batchnorm_oracle() {
  Rng rng(4);
  std::uniform_int_distribution<std::size_t> batch_dist(1, 6), steps_dist(1, 30), feat_dist(1, 24);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-5.0, 5.0), junk(-1e6, 1e6);
  double worst = 0.0;
  bool counts_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t B = batch_dist(rng), T = steps_dist(rng), F = feat_dist(rng);
    std::vector<std::size_t> lengths(B);
    std::uniform_int_distribution<std::size_t> len(1, T);
    for (auto &l : lengths) l = len(rng);
    const double s = scale(rng), m = shift(rng);
    std::vector<Real> z(B * T * F);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < F; ++f)
          z[(b * T + t) * F + f] = t < lengths[b] ? m + s * g(rng) : junk(rng);

    long double sum = 0.0L;
    std::size_t n = 0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < lengths[b]; ++t)
        for (std::size_t f = 0; f < F; ++f) {
          sum += z[(b * T + t) * F + f];
          ++n;
        }
    const long double mean = sum / n;
    long double sq = 0.0L;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < lengths[b]; ++t)
        for (std::size_t f = 0; f < F; ++f) {
          const long double d = z[(b * T + t) * F + f] - mean;
          sq += d * d;
        }
    const long double var = sq / n;

    const SeqNormStats st = seq_batchnorm_stats(z, B, T, F, lengths);
    counts_ok = counts_ok && st.count == n;
    worst = std::max({worst, static_cast<double>(std::fabs(st.mean - mean)),
                      static_cast<double>(std::fabs(st.var - var))});
  }
  return {worst <= 1e-12 && counts_ok, fmt("100 batches, largest deviation %.3g", worst)};
}

NetworkConfig tiny_net(std::size_t bins) {
  NetworkConfig c;
  c.conv_layers = {{3, 3, 3, 1, 2}, {4, 3, 3, 2, 2}};
  c.hidden_size = 5;
  c.use_seq_batchnorm = true;
  c.input_bins = bins;
  return c;
}

// 5. beta = 1 equals classical momentum bit for bit; (eta, beta) and
// (c * eta, beta / c) trajectories coincide.
Outcome optimizer_reductions() {
  const NetworkConfig c = tiny_net(9);
  Rng rng(5);
  const PaddedBatch batch = random_batch(c.input_bins, {12, 9, 15}, rng);
  NetworkParams net = init_params(c, 5);
  TensorSet ref_w = net.weights;
  TensorSet ref_v = net.weights.zeros_like();
  OptimState state = OptimState::zeros_like(net.weights);
  const OptimConfig classical{0.05, 0.9, 1.0, 1e-4};
  const std::vector<OptimConfig> resolved(net.weights.size(), classical);
  bool bitwise = true;
  for (int s = 0; s < 100 && bitwise; ++s) {
    const ForwardResult fr = forward(batch, net, {Mode::kTrain, kernels::Backend::kSerial});
    const BackwardResult br = backward(*fr.cache, net, batch.labels);
    step(net.weights, br.grads, state, resolved);
    for (std::size_t t = 0; t < ref_w.size(); ++t) {
      auto &w = ref_w.tensor(t).data;
      auto &v = ref_v.tensor(t).data;
      const auto &g = br.grads.tensor(t).data;
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double grad = g[j] + classical.lambda * w[j];
        const double scaled = classical.eta * grad;
        v[j] = classical.gamma * v[j] + scaled;
        w[j] = w[j] - v[j];
      }
      bitwise = bitwise && w == net.weights.tensor(t).data;
    }
  }

  const TensorSet start = init_params(c, 6).weights;
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<TensorSet> grads;
  for (int s = 0; s < 100; ++s) {
    TensorSet gs = start.zeros_like();
    for (std::size_t t = 0; t < gs.size(); ++t)
      for (auto &v : gs.tensor(t).data) v = g(rng);
    grads.push_back(std::move(gs));
  }
  double worst = 0.0;
  for (double scale : {0.5, 2.0, 10.0}) {
    TensorSet a = start, b = start;
    OptimState sa = OptimState::zeros_like(a), sb = OptimState::zeros_like(b);
    const std::vector<OptimConfig> ca(a.size(), OptimConfig{0.01, 0.9, 0.8, 0.0});
    const std::vector<OptimConfig> cb(a.size(), OptimConfig{0.01 * scale, 0.9, 0.8 / scale, 0.0});
    for (const auto &gs : grads) {
      step(a, gs, sa, ca);
      step(b, gs, sb, cb);
      for (std::size_t t = 0; t < a.size(); ++t)
        for (std::size_t j = 0; j < a.tensor(t).size(); ++j)
          worst = std::max(worst, std::abs(a.tensor(t).data[j] - b.tensor(t).data[j]));
    }
  }
  return {bitwise && worst <= 1e-12,
          std::string(bitwise ? "beta=1 bit-identical over 100 steps" : "beta=1 trajectory diverged") +
              fmt(", scaled trajectories within %.3g", worst)};
}

// A hand-built corpus with every speaker present and a learnable class cue.
struct TinyCorpus {
  Manifest manifest;
  std::vector<Spectrogram> specs;
};

TinyCorpus tiny_corpus(std::size_t bins) {
  Rng rng(6);
  std::normal_distribution<double> g(0.0, 0.3);
  std::uniform_int_distribution<std::size_t> len(10, 16);
  TinyCorpus c;
  int n = 0;
  for (int s = 1; s <= 5; ++s)
    for (Gender gen : {Gender::kFemale, Gender::kMale})
      for (Emotion e : kAllEmotions)
        for (int k = 0; k < 2; ++k) {
          Utterance u;
          u.id = "u" + std::to_string(n++);
          u.path = u.id + ".wav";
          u.label = e;
          u.session = s;
          u.gender = gen;
          c.manifest.utterances.push_back(u);
          Spectrogram sp;
          sp.frames = len(rng);
          sp.bins = bins;
          sp.fft_size = 2 * (bins - 1);
          sp.sample_rate = 8000;
          sp.values.resize(sp.frames * bins);
          for (std::size_t t = 0; t < sp.frames; ++t)
            for (std::size_t f = 0; f < bins; ++f)
              sp.at(t, f) = -2.0 + g(rng) + (f * kNumEmotions / bins == static_cast<std::size_t>(index_of(e)));
          c.specs.push_back(std::move(sp));
        }
  return c;
}

class BatchAudit : public TrainingObserver {
 public:
  void on_train_batch(int, std::span<const std::size_t> items) override {
    trained.insert(items.begin(), items.end());
  }
  void on_evaluate(std::string_view split, int) override { splits.emplace_back(split); }

  std::set<std::size_t> trained;
  std::vector<std::string> splits;
};

// 6. Fold construction and the training loop respect speaker independence.
Outcome protocol_audit() {
  const TinyCorpus corpus = tiny_corpus(17);
  const Manifest &m = corpus.manifest;
  const std::vector<FoldSplit> folds = make_folds(m);
  std::string problem;
  std::set<Speaker> tested;
  if (folds.size() != static_cast<std::size_t>(kNumFolds)) problem = "expected 10 folds";
  TrainOptions options;
  options.max_epochs = 1;
  options.batch_size = 8;
  for (const FoldSplit &fold : folds) {
    const FoldPartition part = partition(m, fold);
    const std::string tag = "fold " + std::to_string(fold.fold_id) + ": ";
    if (!tested.insert(fold.test).second) problem = tag + "test speaker repeated";
    if (fold.val.session != fold.test.session || fold.val.gender == fold.test.gender)
      problem = tag + "validation speaker is not the test speaker's session partner";
    if (std::count(fold.train_sessions.begin(), fold.train_sessions.end(), fold.test.session) != 0)
      problem = tag + "test session among training sessions";
    std::vector<int> seen(m.size(), 0);
    for (std::size_t i : part.train) {
      ++seen[i];
      if (m.utterances[i].session == fold.test.session) problem = tag + "test session in training";
    }
    for (std::size_t i : part.val) {
      ++seen[i];
      if (m.utterances[i].speaker() != fold.val) problem = tag + "foreign utterance in validation";
    }
    for (std::size_t i : part.test) {
      ++seen[i];
      if (m.utterances[i].speaker() != fold.test) problem = tag + "foreign utterance in test";
    }
    if (std::any_of(seen.begin(), seen.end(), [](int s) { return s != 1; }))
      problem = tag + "partitions overlap or miss utterances";

    BatchAudit audit;
    run_fold(fold, m, corpus.specs, tiny_net(17), {LayerGroup::catch_all({})}, options, &audit);
    const std::set<std::size_t> allowed(part.train.begin(), part.train.end());
    if (audit.trained != allowed) problem = tag + "training touched utterances outside the train partition";
    if (audit.splits.empty() || audit.splits.back() != "test" ||
        std::count(audit.splits.begin(), audit.splits.end(), "test") != 1)
      problem = tag + "test set not scored exactly once after validation";
  }
  if (problem.empty() && tested.size() != 10) problem = "not every speaker is tested";
  return {problem.empty(), problem.empty() ? "10 folds speaker-disjoint, each speaker tested once" : problem};
}

// 7. WA and UA against brute-force recounts, plus the majority-class example.
Outcome metrics_oracle() {
  Rng rng(7);
  std::uniform_int_distribution<int> cls(0, kNumEmotions - 1);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  std::uniform_real_distribution<double> bias(0.0, 1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = size(rng);
    const double skew = bias(rng);
    std::vector<Emotion> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = bias(rng) < skew ? Emotion::kNeutral : kAllEmotions[cls(rng)];
      pred[i] = bias(rng) < 0.5 ? truth[i] : kAllEmotions[cls(rng)];
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += truth[i] == pred[i];
    double recall_sum = 0.0;
    int present = 0;
    for (Emotion e : kAllEmotions) {
      std::size_t support = 0, correct = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (truth[i] == e) {
          ++support;
          correct += pred[i] == e;
        }
      if (support == 0) continue;
      recall_sum += static_cast<double>(correct) / support;
      ++present;
    }
    const ConfusionMatrix cm = confusion_from_pairs(truth, pred);
    if (weighted_accuracy(cm) != static_cast<double>(hits) / n ||
        unweighted_accuracy(cm) != recall_sum / present)
      ++mismatches;
  }
  ConfusionMatrix skewed;
  skewed.counts[0][0] = 97;
  skewed.counts[1][0] = 1;
  skewed.counts[2][0] = 1;
  skewed.counts[3][0] = 1;
  const double wa = weighted_accuracy(skewed), ua = unweighted_accuracy(skewed);
  return {mismatches == 0 && wa == 0.97 && ua == 0.25,
          fmt("%g mismatches in 1000 sets, 97/1/1/1 gives WA %.17g UA %.17g", mismatches, wa, ua)};
}

// 8. Aggregating the published per-fold rows reproduces the headline means.
Outcome published_aggregate() {
  const std::vector<FoldResult> rows =
      read_results_csv(std::string(EMOREC_TEST_DATA) + "/published_folds.csv");
  const AggregateReport r = aggregate(rows);
  const double wa = round_half_up(100.0 * r.mean_wa, 1), ua = round_half_up(100.0 * r.mean_ua, 1);
  return {rows.size() == 10 && wa == 64.5 && ua == 61.7,
          fmt("%g folds, mean WA %.1f, mean UA %.1f", static_cast<double>(rows.size()), wa, ua)};
}

struct Split {
  std::vector<Spectrogram> specs;
  std::vector<Emotion> labels;
  Manifest manifest;
  std::vector<std::size_t> train, test;
};

// 200 training utterances from sessions 1-4 and 40 test utterances from session 5.
Split learnability_corpus() {
  SynthOptions so;
  so.seed = 3;
  so.n_per_class = 125;
  so.imbalanced = true;
  const SynthCorpus corpus = synth_corpus(so);
  Split s;
  for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
    const Utterance &u = corpus.manifest.utterances[i];
    const bool is_test = u.session == 5;
    if (is_test ? s.test.size() >= 40 : s.train.size() >= 200) continue;
    (is_test ? s.test : s.train).push_back(s.specs.size());
    s.specs.push_back(stft_log_magnitude(corpus.clips[i], SpectrogramConfig{}));
    s.labels.push_back(u.label);
    s.manifest.utterances.push_back(u);
  }
  return s;
}

double test_ua(const Trainer &trainer, const Split &s, bool tta) {
  ConfusionMatrix m;
  for (std::size_t i : s.test)
    m.add(s.labels[i], tta ? tta_predict(trainer.model(), s.specs[i]) : predict(trainer.model(), s.specs[i]));
  return unweighted_accuracy(m);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 9. The default network fits the synthetic training set, and VTLP with
// oversampling does not lower the median test UA across five seeds.
Outcome learnability() {
  const Split s = learnability_corpus();
  if (s.train.size() != 200 || s.test.size() != 40)
    return {false, "synthetic corpus does not yield 200 train / 40 test utterances"};
  std::vector<const Spectrogram *> train_ptrs;
  for (std::size_t i : s.train) train_ptrs.push_back(&s.specs[i]);
  const DatasetStats stats = compute_stats(std::span<const Spectrogram *const>(train_ptrs));
  const std::vector<LayerGroup> groups = {LayerGroup::catch_all({})};
  const NetworkConfig net = NetworkConfig::default_preset(s.specs.front().bins);

  const auto t0 = Clock::now();
  TrainOptions plain;
  plain.augment.mode = AugmentMode::kNone;
  plain.oversample_factor = 1;
  plain.tta = false;
  Trainer fit(init_params(net, derive_seed(1, 0)), groups, stats, plain, 1);
  double train_acc = 0.0;
  int epochs = 0;
  while (epochs < 300 && train_acc < 0.95 && seconds_since(t0) < 600.0) {
    fit.train_epoch(s.specs, s.labels, s.train, ++epochs);
    train_acc = weighted_accuracy(fit.evaluate(s.specs, s.labels, s.train, EvalKind::kPlain));
  }
  const double fit_seconds = seconds_since(t0);
  const bool fits = train_acc >= 0.95 && fit_seconds < 600.0;
  std::printf("  fit: training accuracy %.3f after %d epochs in %.0f s\n", train_acc, epochs, fit_seconds);
  std::fflush(stdout);

  constexpr int kEpochs = 12;
  std::vector<double> base_ua, aug_ua;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainOptions base = plain;
    base.seed = seed;
    Trainer b(init_params(net, derive_seed(seed, 0)), groups, stats, base, seed);
    for (int e = 1; e <= kEpochs; ++e) b.train_epoch(s.specs, s.labels, s.train, e);
    base_ua.push_back(test_ua(b, s, false));

    TrainOptions aug;
    aug.augment.mode = AugmentMode::kPerSample;
    aug.seed = seed;
    const std::vector<std::size_t> items = oversample_indices(
        s.train, s.manifest.utterances, aug.oversample_classes, aug.oversample_factor);
    Trainer a(init_params(net, derive_seed(seed, 0)), groups, stats, aug, seed);
    for (int e = 1; e <= kEpochs; ++e) a.train_epoch(s.specs, s.labels, items, e);
    aug_ua.push_back(test_ua(a, s, true));
    std::printf("  seed %d: test UA %.3f without, %.3f with augmentation\n", static_cast<int>(seed),
                base_ua.back(), aug_ua.back());
    std::fflush(stdout);
  }
  const double mb = median(base_ua), ma = median(aug_ua);
  return {fits && ma >= mb,
          fmt("train acc %.3f; median test UA %.3f with augmentation vs %.3f without", train_acc, ma, mb)};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 10. Two cross-validation runs with one configuration write identical CSVs.
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "emorec_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ostringstream sink, err;
  if (run_cli({"gen-corpus", "--out", (dir / "corpus").string(), "--seed", "10", "--per-class", "20"},
              sink, err) != kExitOk)
    return {false, "gen-corpus failed: " + err.str()};
  {
    std::ofstream ini(dir / "run.ini");
    ini << "[paths]\nmanifest = corpus/manifest.csv\n[train]\nmax_epochs = 2\nseed = 5\n";
  }
  for (const char *run : {"a", "b"}) {
    const int code = run_cli({"cv", "--config", (dir / "run.ini").string(), "--out",
                              (dir / run).string(), "--folds", "1,2"},
                             sink, err);
    if (code != kExitOk) return {false, std::string("cv run ") + run + " failed: " + err.str()};
  }
  std::vector<std::string> files = {"results.csv"};
  for (const char *f : {"metrics.csv", "confusion.csv", "val_ua.csv", "gradnorms.csv"})
    for (const char *fold : {"fold_1/", "fold_2/"}) files.push_back(std::string(fold) + f);
  std::string differing;
  for (const auto &f : files) {
    const std::string a = slurp(dir / "a" / f), b = slurp(dir / "b" / f);
    if (a.empty() || a != b) differing += " " + f;
  }
  fs::remove_all(dir);
  return {differing.empty(), differing.empty()
                                 ? std::to_string(files.size()) + " CSV files byte-identical"
                                 : "differing or empty:" + differing};
}

}  // namespace
}  // namespace emorec

int main(int argc, char **argv) {
  using emorec::Outcome;
  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria = {
      {"gradient oracle", emorec::gradient_oracle},
      {"mask neutrality", emorec::mask_neutrality},
      {"VTLP identity and geometry", emorec::vtlp_geometry},
      {"sequence batch-norm statistics", emorec::batchnorm_oracle},
      {"optimizer reductions", emorec::optimizer_reductions},
      {"protocol audit", emorec::protocol_audit},
      {"metrics oracle", emorec::metrics_oracle},
      {"published aggregate", emorec::published_aggregate},
      {"end-to-end learnability", emorec::learnability},
      {"determinism", emorec::determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && selected.count(id) == 0) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
