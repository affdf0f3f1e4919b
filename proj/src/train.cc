// src/train.cc

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

#include "emorec/train.h"

#include <algorithm>
#include <numeric>

#include "emorec/error.h"

namespace emorec {

void TrainOptions::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (max_epochs < 1) throw ConfigError("max_epochs must be positive");
  if (patience < 1) throw ConfigError("patience must be positive");
  if (oversample_factor < 1) throw ConfigError("oversampling factor must be >= 1");
  if (!(f0_ratio > 0.0 && f0_ratio < 1.0)) throw ConfigError("f0_ratio must lie in (0, 1)");
  if (augment.mode != AugmentMode::kNone) augment.validate();
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Trainer::Trainer(NetworkParams init, std::vector<LayerGroup> groups, DatasetStats stats,
                 TrainOptions options, std::uint64_t stream_seed)
    : params_(std::move(init)),
      resolved_(resolve_groups(params_.weights.names(), groups)),
      state_(OptimState::zeros_like(params_.weights)),
      stats_(stats),
      options_(std::move(options)),
      sampler_(options_.augment),
      train_rng_(derive_seed(stream_seed, 1)),
      val_rng_(derive_seed(stream_seed, 2)) {
  options_.validate();
}

EpochStats Trainer::train_epoch(std::span<const Spectrogram> specs, std::span<const Emotion> labels,
                                std::span<const std::size_t> items, int epoch) {
  std::vector<std::size_t> order(items.begin(), items.end());
  std::shuffle(order.begin(), order.end(), train_rng_);
  sampler_.begin_epoch(train_rng_);

  EpochStats stats;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < order.size(); start += options_.batch_size) {
    const std::size_t end = std::min(order.size(), start + options_.batch_size);
    std::span<const std::size_t> chunk(order.data() + start, end - start);
    if (observer_) observer_->on_train_batch(epoch, chunk);
    std::vector<Spectrogram> batch_specs;
    std::vector<Emotion> batch_labels;
    for (std::size_t i : chunk) {
      const double alpha = sampler_.training_alpha(train_rng_);
      Spectrogram s = alpha == 1.0 ? specs[i] : warp_spectrogram(specs[i], alpha, options_.f0_ratio);
      normalize_in_place(s, stats_);
      batch_specs.push_back(std::move(s));
      batch_labels.push_back(labels[i]);
    }
    PaddedBatch batch = pad_batch(batch_specs, batch_labels);
    ForwardResult fr = forward(batch, params_, {Mode::kTrain, options_.backend});
    BackwardResult br = backward(*fr.cache, params_, batch_labels);
    update_running_stats(params_, *fr.cache);
    step(params_.weights, br.grads, state_, resolved_);
    if (grad_log_) grad_log_->append(log_grad_norms(br.grads, params_.weights, state_.step));

    loss_sum += br.loss * static_cast<double>(chunk.size());
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      const Real *p = fr.probs.data.data() + b * kNumEmotions;
      const auto best = static_cast<std::size_t>(std::max_element(p, p + kNumEmotions) - p);
      if (static_cast<int>(best) == index_of(batch_labels[b])) ++correct;
    }
    stats.samples += chunk.size();
  }
  if (grad_log_) grad_log_->flush();
  if (stats.samples > 0) {
    stats.loss = loss_sum / static_cast<double>(stats.samples);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(stats.samples);
  }
  return stats;
}

ConfusionMatrix Trainer::evaluate(std::span<const Spectrogram> specs, std::span<const Emotion> labels,
                                  std::span<const std::size_t> items, EvalKind kind) {
  ConfusionMatrix m;
  const TrainedModel model = this->model();
  if (kind == EvalKind::kTta) {
    for (std::size_t i : items) m.add(labels[i], tta_predict(model, specs[i], options_.backend));
    return m;
  }
  for (std::size_t start = 0; start < items.size(); start += options_.batch_size) {
    const std::size_t end = std::min(items.size(), start + options_.batch_size);
    std::vector<Spectrogram> batch_specs;
    std::vector<Emotion> batch_labels;
    for (std::size_t j = start; j < end; ++j) {
      const std::size_t i = items[j];
      const double alpha = kind == EvalKind::kRandomAlpha ? sampler_.validation_alpha(val_rng_) : 1.0;
      Spectrogram s = alpha == 1.0 ? specs[i] : warp_spectrogram(specs[i], alpha, options_.f0_ratio);
      normalize_in_place(s, stats_);
      batch_specs.push_back(std::move(s));
      batch_labels.push_back(labels[i]);
    }
    PaddedBatch batch = pad_batch(batch_specs, batch_labels);
    ForwardResult fr = forward(batch, params_, {Mode::kEval, options_.backend});
    for (std::size_t b = 0; b < batch_labels.size(); ++b) {
      std::array<double, kNumEmotions> p{};
      for (std::size_t c = 0; c < kNumEmotions; ++c) p[c] = fr.probs.data[b * kNumEmotions + c];
      m.add(batch_labels[b], decide_vote(std::span(&p, 1)));
    }
  }
  return m;
}

FoldRun run_fold(const FoldSplit &fold, const Manifest &manifest,
                 std::span<const Spectrogram> specs, const NetworkConfig &net_config,
                 const std::vector<LayerGroup> &groups, const TrainOptions &options,
                 TrainingObserver *observer, GradLog *grad_log) {
  options.validate();
  net_config.validate();
  if (specs.size() != manifest.utterances.size())
    throw DataError("spectrogram count does not match the manifest");
  const FoldPartition part = partition(manifest, fold);
  if (part.train.empty() || part.val.empty() || part.test.empty())
    throw DataError("fold " + std::to_string(fold.fold_id) + " has an empty train/val/test partition");

  std::vector<Emotion> labels;
  for (const auto &u : manifest.utterances) labels.push_back(u.label);

  std::vector<const Spectrogram *> train_specs;
  for (std::size_t i : part.train) train_specs.push_back(&specs[i]);
  const DatasetStats stats = compute_stats(std::span<const Spectrogram *const>(train_specs));

  const std::vector<std::size_t> train_items =
      oversample_indices(part.train, manifest.utterances, options.oversample_classes,
                         options.oversample_factor);

  const std::uint64_t fold_seed = derive_seed(options.seed, static_cast<std::uint64_t>(fold.fold_id));
  Trainer trainer(init_params(net_config, derive_seed(fold_seed, 0)), groups, stats, options,
                  fold_seed);
  trainer.set_observer(observer);
  trainer.set_grad_log(grad_log);

  const EvalKind val_kind =
      options.augment.mode == AugmentMode::kPerSample ? EvalKind::kRandomAlpha : EvalKind::kPlain;

  FoldRun run;
  run.result.fold_id = fold.fold_id;
  run.result.test_speaker = fold.test;
  double best_ua = -1.0;
  int best_epoch = 0;
  int epoch = 0;
  run.best_model = trainer.model();
  for (epoch = 1; epoch <= options.max_epochs; ++epoch) {
    const EpochStats es = trainer.train_epoch(specs, labels, train_items, epoch);
    if (observer) observer->on_evaluate("val", epoch);
    const double ua = unweighted_accuracy(trainer.evaluate(specs, labels, part.val, val_kind));
    run.val_ua_history.push_back(ua);
    if (observer) observer->on_epoch(epoch, es.loss, es.accuracy, ua);
    if (ua > best_ua) {
      best_ua = ua;
      best_epoch = epoch;
      run.best_model = trainer.model();
    } else if (epoch - best_epoch >= options.patience) {
      break;
    }
  }
  run.result.epochs_trained = std::min(epoch, options.max_epochs);
  run.result.best_epoch = best_epoch;

  if (observer) observer->on_evaluate("test", best_epoch);
  ConfusionMatrix test;
  for (std::size_t i : part.test) {
    const Emotion pred = options.tta ? tta_predict(run.best_model, specs[i], options.backend)
                                     : predict(run.best_model, specs[i], options.backend);
    test.add(labels[i], pred);
  }
  run.result.metrics = score(test);
  return run;
}

}  // namespace emorec
