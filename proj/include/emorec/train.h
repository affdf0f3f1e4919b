// include/emorec/train.h

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

#ifndef EMOREC_TRAIN_H_
#define EMOREC_TRAIN_H_

#include <cstdint>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "emorec/corpus.h"
#include "emorec/eval.h"
#include "emorec/kernels.h"
#include "emorec/net.h"
#include "emorec/optim.h"
#include "emorec/vtlp.h"

namespace emorec {

struct TrainOptions {
  std::size_t batch_size = 16;
  int max_epochs = 300;
  int patience = 20;  // epochs without a validation-UA improvement
  AugmentStrategy augment;
  double f0_ratio = 0.9;
  bool tta = true;  // eleven-copy majority vote on the test set
  std::set<Emotion> oversample_classes = {Emotion::kHappiness, Emotion::kAnger};
  int oversample_factor = 2;
  std::uint64_t seed = 1;
  kernels::Backend backend = kernels::Backend::kParallel;

  void validate() const;
};

// Hooks for protocol audits in tests and progress output in the CLI.
class TrainingObserver {
 public:
  virtual ~TrainingObserver() = default;
  virtual void on_train_batch(int /*epoch*/, std::span<const std::size_t> /*items*/) {}
  virtual void on_evaluate(std::string_view /*split*/, int /*epoch*/) {}
  virtual void on_epoch(int /*epoch*/, double /*loss*/, double /*train_acc*/, double /*val_ua*/) {}
};

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;  // train-mode predictions on the (augmented) batches
  std::size_t samples = 0;
};

enum class EvalKind {
  kPlain,        // spectrograms as given
  kRandomAlpha,  // one validation alpha per sample from the augmentation strategy
  kTta,          // eleven-copy vote
};

// Owns parameters and optimizer state for one training run. `specs` are raw
// log-magnitude spectrograms; augmentation and normalisation happen per batch.
class Trainer {
 public:
  Trainer(NetworkParams init, std::vector<LayerGroup> groups, DatasetStats stats,
          TrainOptions options, std::uint64_t stream_seed);

  // One shuffled pass over `items` (indices into specs/labels).
  EpochStats train_epoch(std::span<const Spectrogram> specs, std::span<const Emotion> labels,
                         std::span<const std::size_t> items, int epoch = 0);

  ConfusionMatrix evaluate(std::span<const Spectrogram> specs, std::span<const Emotion> labels,
                           std::span<const std::size_t> items, EvalKind kind);

  void set_observer(TrainingObserver *observer) { observer_ = observer; }
  void set_grad_log(GradLog *log) { grad_log_ = log; }

  const NetworkParams &params() const { return params_; }
  const DatasetStats &stats() const { return stats_; }
  const OptimState &optim_state() const { return state_; }
  TrainedModel model() const { return {params_, stats_}; }

 private:
  NetworkParams params_;
  std::vector<OptimConfig> resolved_;
  OptimState state_;
  DatasetStats stats_;
  TrainOptions options_;
  AlphaSampler sampler_;
  Rng train_rng_;
  Rng val_rng_;
  TrainingObserver *observer_ = nullptr;
  GradLog *grad_log_ = nullptr;
};

struct FoldRun {
  FoldResult result;
  TrainedModel best_model;
  std::vector<double> val_ua_history;
};

// Trains on the fold's training sessions (with oversampling and the chosen
// augmentation), keeps the epoch with the best validation UA, stops after
// `patience` epochs without improvement, and scores the kept model on the
// test speaker. `specs` is parallel to manifest.utterances.
FoldRun run_fold(const FoldSplit &fold, const Manifest &manifest,
                 std::span<const Spectrogram> specs, const NetworkConfig &net_config,
                 const std::vector<LayerGroup> &groups, const TrainOptions &options,
                 TrainingObserver *observer = nullptr, GradLog *grad_log = nullptr);

// Seed for an independent random stream derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace emorec

#endif  // EMOREC_TRAIN_H_
