// tests/test_train.cc

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

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "emorec/error.h"
#include "emorec/train.h"

namespace emorec {
namespace {

constexpr std::size_t kBins = 17;

// Two utterances per class per speaker; the class shows up as a bump in one
// frequency band so that a few epochs suffice to learn something.
struct TinyCorpus {
  Manifest manifest;
  std::vector<Spectrogram> specs;
};

TinyCorpus tiny_corpus(std::uint64_t seed, int per_class = 2) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  std::uniform_int_distribution<std::size_t> len(10, 16);
  TinyCorpus c;
  int n = 0;
  for (int s = 1; s <= 5; ++s)
    for (Gender gen : {Gender::kFemale, Gender::kMale})
      for (Emotion e : kAllEmotions)
        for (int k = 0; k < per_class; ++k) {
          Utterance u;
          u.id = "u" + std::to_string(n++);
          u.path = u.id + ".wav";
          u.label = e;
          u.session = s;
          u.gender = gen;
          c.manifest.utterances.push_back(u);
          Spectrogram sp;
          sp.frames = len(rng);
          sp.bins = kBins;
          sp.fft_size = 32;
          sp.sample_rate = 8000;
          sp.values.resize(sp.frames * sp.bins);
          for (std::size_t t = 0; t < sp.frames; ++t)
            for (std::size_t f = 0; f < kBins; ++f)
              sp.at(t, f) = -2.0 + g(rng) + (f / 4 == static_cast<std::size_t>(index_of(e)) ? 2.0 : 0.0);
          c.specs.push_back(std::move(sp));
        }
  return c;
}

NetworkConfig tiny_net() {
  NetworkConfig c;
  c.conv_layers = {{3, 3, 3, 1, 1}, {4, 3, 3, 2, 2}};
  c.hidden_size = 6;
  c.input_bins = kBins;
  return c;
}

TrainOptions quick_options(int epochs = 3) {
  TrainOptions o;
  o.batch_size = 8;
  o.max_epochs = epochs;
  o.patience = 100;
  o.seed = 11;
  return o;
}

std::vector<LayerGroup> groups() {
  OptimConfig c;
  c.eta = 0.05;
  return {LayerGroup::catch_all(c)};
}

class Recorder : public TrainingObserver {
 public:
  void on_train_batch(int epoch, std::span<const std::size_t> items) override {
    events.push_back("batch");
    for (std::size_t i : items) {
      trained.insert(i);
      ++per_epoch[epoch][i];
    }
  }
  void on_evaluate(std::string_view split, int epoch) override {
    events.push_back(std::string(split) + ":" + std::to_string(epoch));
  }
  void on_epoch(int, double loss, double, double) override { losses.push_back(loss); }

  std::vector<std::string> events;
  std::set<std::size_t> trained;
  std::map<int, std::map<std::size_t, int>> per_epoch;
  std::vector<double> losses;
};

TEST(TrainOptions, Validation) {
  TrainOptions o;
  EXPECT_NO_THROW(o.validate());
  o.batch_size = 0;
  EXPECT_THROW(o.validate(), ConfigError);
  o = TrainOptions{};
  o.oversample_factor = 0;
  EXPECT_THROW(o.validate(), ConfigError);
  o = TrainOptions{};
  o.max_epochs = 0;
  EXPECT_THROW(o.validate(), ConfigError);
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 50; ++s) seen.insert(derive_seed(1, s));
  EXPECT_EQ(seen.size(), 50u);
  EXPECT_EQ(derive_seed(3, 4), derive_seed(3, 4));
  EXPECT_NE(derive_seed(3, 4), derive_seed(4, 3));
}

TEST(RunFold, TestAndValidationSpeakersNeverTrained) {
  const TinyCorpus c = tiny_corpus(1);
  for (int fold_id : {1, 6, 10}) {
    const FoldSplit fold = fold_split(fold_id);
    Recorder rec;
    run_fold(fold, c.manifest, c.specs, tiny_net(), groups(), quick_options(2), &rec);
    const FoldPartition part = partition(c.manifest, fold);
    ASSERT_FALSE(rec.trained.empty());
    for (std::size_t i : rec.trained) {
      const Utterance &u = c.manifest.utterances[i];
      EXPECT_NE(u.session, fold.test.session) << u.id;
      EXPECT_TRUE(fold.in_train(u));
    }
    EXPECT_EQ(rec.trained, std::set<std::size_t>(part.train.begin(), part.train.end()));
  }
}

TEST(RunFold, TestSetScoredOnceAfterAllValidation) {
  const TinyCorpus c = tiny_corpus(2);
  Recorder rec;
  const FoldRun run = run_fold(fold_split(3), c.manifest, c.specs, tiny_net(), groups(),
                               quick_options(3), &rec);
  const auto test_events = std::count_if(rec.events.begin(), rec.events.end(), [](const auto &e) {
    return e.rfind("test:", 0) == 0;
  });
  EXPECT_EQ(test_events, 1);
  EXPECT_EQ(rec.events.back(), "test:" + std::to_string(run.result.best_epoch));
  EXPECT_EQ(std::count_if(rec.events.begin(), rec.events.end(),
                          [](const auto &e) { return e.rfind("val:", 0) == 0; }),
            3);
}

TEST(RunFold, OversamplesRareClassesEveryEpoch) {
  const TinyCorpus c = tiny_corpus(3);
  Recorder rec;
  run_fold(fold_split(2), c.manifest, c.specs, tiny_net(), groups(), quick_options(2), &rec);
  ASSERT_EQ(rec.per_epoch.size(), 2u);
  for (const auto &[epoch, counts] : rec.per_epoch)
    for (const auto &[i, n] : counts) {
      const Emotion e = c.manifest.utterances[i].label;
      const int expected = (e == Emotion::kHappiness || e == Emotion::kAnger) ? 2 : 1;
      EXPECT_EQ(n, expected) << "epoch " << epoch << " item " << i;
    }
}

TEST(RunFold, StatsComeFromTrainingSessionsOnly) {
  TinyCorpus c = tiny_corpus(4);
  const FoldSplit fold = fold_split(5);
  const FoldPartition part = partition(c.manifest, fold);
  const FoldRun a = run_fold(fold, c.manifest, c.specs, tiny_net(), groups(), quick_options(1));
  std::vector<Spectrogram> train;
  for (std::size_t i : part.train) train.push_back(c.specs[i]);
  const DatasetStats ref = compute_stats(train);
  EXPECT_DOUBLE_EQ(a.best_model.stats.mean, ref.mean);
  EXPECT_DOUBLE_EQ(a.best_model.stats.std, ref.std);

  for (std::size_t i : part.test)
    for (auto &v : c.specs[i].values) v += 100.0;
  for (std::size_t i : part.val)
    for (auto &v : c.specs[i].values) v -= 50.0;
  const FoldRun b = run_fold(fold, c.manifest, c.specs, tiny_net(), groups(), quick_options(1));
  EXPECT_EQ(a.best_model.stats.mean, b.best_model.stats.mean);
  EXPECT_EQ(a.best_model.stats.std, b.best_model.stats.std);
}

TEST(RunFold, DeterministicForFixedSeed) {
  const TinyCorpus c = tiny_corpus(5);
  const FoldRun a = run_fold(fold_split(7), c.manifest, c.specs, tiny_net(), groups(), quick_options(3));
  const FoldRun b = run_fold(fold_split(7), c.manifest, c.specs, tiny_net(), groups(), quick_options(3));
  EXPECT_EQ(a.val_ua_history, b.val_ua_history);
  EXPECT_EQ(a.result.metrics.wa, b.result.metrics.wa);
  EXPECT_EQ(a.result.metrics.ua, b.result.metrics.ua);
  EXPECT_EQ(a.result.best_epoch, b.result.best_epoch);
  for (std::size_t i = 0; i < a.best_model.params.weights.size(); ++i)
    EXPECT_EQ(a.best_model.params.weights.tensor(i).data, b.best_model.params.weights.tensor(i).data);

  TrainOptions other = quick_options(3);
  other.seed = 12;
  const FoldRun d = run_fold(fold_split(7), c.manifest, c.specs, tiny_net(), groups(), other);
  EXPECT_NE(a.best_model.params.weights.at("dense.weight").data,
            d.best_model.params.weights.at("dense.weight").data);
}

TEST(RunFold, EarlyStoppingRespectsPatience) {
  const TinyCorpus c = tiny_corpus(6);
  TrainOptions o = quick_options(30);
  o.patience = 2;
  const FoldRun run = run_fold(fold_split(4), c.manifest, c.specs, tiny_net(), groups(), o);
  EXPECT_LE(run.result.epochs_trained - run.result.best_epoch, 2);
  EXPECT_EQ(static_cast<int>(run.val_ua_history.size()), run.result.epochs_trained);
  const double best = *std::max_element(run.val_ua_history.begin(), run.val_ua_history.end());
  EXPECT_EQ(run.val_ua_history[run.result.best_epoch - 1], best);
  // The first epoch reaching the maximum is the one kept.
  for (int e = 1; e < run.result.best_epoch; ++e) EXPECT_LT(run.val_ua_history[e - 1], best);
}

TEST(RunFold, RejectsEmptyPartition) {
  TinyCorpus c = tiny_corpus(7);
  std::vector<Utterance> kept;
  std::vector<Spectrogram> specs;
  for (std::size_t i = 0; i < c.manifest.size(); ++i)
    if (c.manifest.utterances[i].session != 1) {
      kept.push_back(c.manifest.utterances[i]);
      specs.push_back(c.specs[i]);
    }
  c.manifest.utterances = kept;
  EXPECT_THROW(run_fold(fold_split(1), c.manifest, specs, tiny_net(), groups(), quick_options(1)),
               DataError);
}

TEST(Trainer, LossDecreasesOnLearnableData) {
  const TinyCorpus c = tiny_corpus(8, 3);
  std::vector<Emotion> labels;
  for (const auto &u : c.manifest.utterances) labels.push_back(u.label);
  std::vector<std::size_t> items(c.specs.size());
  std::iota(items.begin(), items.end(), 0);
  TrainOptions o = quick_options();
  o.augment.mode = AugmentMode::kNone;
  Trainer t(init_params(tiny_net(), 1), groups(), compute_stats(c.specs), o, 2);
  std::ostringstream sink;
  GradLog log(&sink);
  t.set_grad_log(&log);
  const double first = t.train_epoch(c.specs, labels, items, 1).loss;
  double last = first;
  for (int e = 2; e <= 8; ++e) last = t.train_epoch(c.specs, labels, items, e).loss;
  EXPECT_LT(last, 0.7 * first);
  EXPECT_GT(unweighted_accuracy(t.evaluate(c.specs, labels, items, EvalKind::kPlain)), 0.6);
  EXPECT_EQ(log.pending(), 0u);
  EXPECT_EQ(log.written(), t.params().weights.size() * t.optim_state().step);
  EXPECT_EQ(sink.str().rfind("step,layer,grad_norm,param_norm\n", 0), 0u);
}

TEST(Trainer, EvaluationLeavesParametersUntouched) {
  const TinyCorpus c = tiny_corpus(9);
  std::vector<Emotion> labels;
  for (const auto &u : c.manifest.utterances) labels.push_back(u.label);
  std::vector<std::size_t> items(c.specs.size());
  std::iota(items.begin(), items.end(), 0);
  Trainer t(init_params(tiny_net(), 3), groups(), compute_stats(c.specs), quick_options(), 4);
  const NetworkParams before = t.params();
  for (EvalKind k : {EvalKind::kPlain, EvalKind::kRandomAlpha, EvalKind::kTta})
    EXPECT_EQ(t.evaluate(c.specs, labels, items, k).total(), items.size());
  for (std::size_t i = 0; i < before.weights.size(); ++i)
    EXPECT_EQ(before.weights.tensor(i).data, t.params().weights.tensor(i).data);
  for (std::size_t i = 0; i < before.buffers.size(); ++i)
    EXPECT_EQ(before.buffers.tensor(i).data, t.params().buffers.tensor(i).data);
}

}  // namespace
}  // namespace emorec
