// include/emorec/net.h

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

#ifndef EMOREC_NET_H_
#define EMOREC_NET_H_

// Convolutional front end -> masked bidirectional LSTM -> dense softmax.
//
// Parameter naming (also used by optimizer groups and checkpoints):
//   conv.<i>.kernel [out, in, k_t, k_f]     conv.<i>.bias [out]
//   bilstm.<l>.<fwd|bwd>.W_x [4H, D]        bilstm.<l>.<fwd|bwd>.W_h [4H, H]
//   bilstm.<l>.<fwd|bwd>.bias [4H]          gate order i, f, g, o
//   bilstm.<l>.bn.gamma [8H]                bilstm.<l>.bn.beta [8H]
//   dense.weight [classes, 2H]              dense.bias [classes]
// Buffers (not trained): bilstm.<l>.bn.running_mean [1], .running_var [1].
//
// Sequence batch norm normalises the input contribution W_x x_t of both
// directions of a layer with one scalar mean and variance taken over every
// valid (sample, step, feature) element; the recurrent term is untouched.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emorec/corpus.h"
#include "emorec/kernels.h"
#include "emorec/tensor.h"

namespace emorec {

struct ConvLayerSpec {
  std::size_t out_channels = 16;
  std::size_t kernel_t = 3, kernel_f = 3;
  std::size_t stride_t = 1, stride_f = 1;

  bool operator==(const ConvLayerSpec &) const = default;
};

enum class Activation { kLeakyRelu, kRelu, kTanh };
const char *activation_name(Activation a);
Activation parse_activation(const std::string &s);

struct NetworkConfig {
  std::vector<ConvLayerSpec> conv_layers;
  std::size_t bilstm_layers = 1;
  std::size_t hidden_size = 128;
  bool use_seq_batchnorm = false;
  std::size_t num_classes = kNumEmotions;
  std::size_t input_bins = 257;
  Activation activation = Activation::kLeakyRelu;
  double leaky_slope = 0.01;
  double bn_epsilon = 1e-5;
  double bn_momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch

  // 4 conv (16/32/64/64 channels, 5x5 then 3x3, time strides 1,2,2,2,
  // frequency strides 2) + 1 Bi-LSTM of 128 units per direction.
  static NetworkConfig default_preset(std::size_t input_bins = 257);

  void validate() const;
  // Frequency extent after each conv layer.
  std::vector<std::size_t> freq_extents() const;
  std::size_t recurrent_input_dim() const;
  // Shortest input that survives every conv layer.
  std::size_t min_frames() const;

  bool operator==(const NetworkConfig &) const = default;
};

struct NetworkParams {
  NetworkConfig config;
  TensorSet weights;
  TensorSet buffers;
};

NetworkParams init_params(const NetworkConfig &config, std::uint64_t seed);

// Valid length after one conv layer / after the whole stack. Throws
// DataError("sample too short for architecture") if any stage drops below 1.
std::size_t mask_propagate(std::size_t length, std::span<const ConvLayerSpec> conv_layers);

// Per-sample valid lengths after each conv layer: stages[0] is the input.
struct Mask {
  std::vector<std::vector<std::size_t>> stages;
  const std::vector<std::size_t> &recurrent() const { return stages.back(); }
};
Mask build_mask(std::span<const std::size_t> lengths, std::span<const ConvLayerSpec> conv_layers);

struct SeqNormStats {
  double mean = 0.0;
  double var = 0.0;
  std::size_t count = 0;  // b_tf
};

// Scalar mean / biased variance over rows [0, lengths[b]) of each sample of a
// [batch x max_steps x features] tensor; padded steps are skipped.
SeqNormStats seq_batchnorm_stats(std::span<const Real> values, std::size_t batch,
                                 std::size_t max_steps, std::size_t features,
                                 std::span<const std::size_t> lengths);
// gamma[j] * (z - mean) / sqrt(var + eps) + beta[j] on rows of `features`
// values; j indexes the feature within a row.
void seq_batchnorm_apply(std::span<Real> z, std::size_t features, const SeqNormStats &stats,
                         std::span<const Real> gamma, std::span<const Real> beta, double eps);

enum class Mode { kTrain, kEval };

struct ForwardCache;

struct ForwardResult {
  Tensor logits;  // [batch x classes]
  Tensor probs;   // [batch x classes]
  std::shared_ptr<ForwardCache> cache;  // set in train mode only
};

struct ForwardOptions {
  Mode mode = Mode::kEval;
  kernels::Backend backend = kernels::Backend::kParallel;
};

ForwardResult forward(const PaddedBatch &batch, const NetworkParams &params,
                      const ForwardOptions &options);

struct BackwardResult {
  double loss = 0.0;  // mean cross-entropy
  TensorSet grads;    // same names and shapes as params.weights
};

// Exact gradients of the mean cross-entropy of the cached forward pass.
BackwardResult backward(const ForwardCache &cache, const NetworkParams &params,
                        std::span<const Emotion> labels);

double cross_entropy(const Tensor &probs, std::span<const Emotion> labels);

// Folds the batch statistics of a train-mode pass into the running averages.
void update_running_stats(NetworkParams &params, const ForwardCache &cache);

// Batch-norm statistics each Bi-LSTM layer used in a train-mode pass.
std::vector<SeqNormStats> batchnorm_stats(const ForwardCache &cache);

// "EMCK" u32 version, config block, u32 tensor count, then per tensor:
// u32 name length, UTF-8 name, u32 rank, u32 dims..., f32 values row-major.
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;
void save_checkpoint(const std::string &path, const NetworkParams &params);
NetworkParams load_checkpoint(const std::string &path);

}  // namespace emorec

#endif  // EMOREC_NET_H_
