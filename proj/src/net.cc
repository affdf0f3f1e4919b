// src/net.cc

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

#include "emorec/net.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "emorec/error.h"

namespace emorec {

namespace detail {

struct ConvStage {
  kernels::ConvGeometry geom;
  std::vector<std::size_t> valid_out;
  std::vector<Real> input;  // [batch x in_size]
  std::vector<Real> pre;    // [batch x out_size], zero beyond valid rows
};

struct LstmDirection {
  std::vector<Real> z;       // W_x x, [rows x 4H]
  std::vector<Real> zhat;    // (z - mean) / sqrt(var + eps), batch norm only
  std::vector<Real> gates;   // i, f, g, o after their nonlinearities
  std::vector<Real> c, tanh_c, h;  // [rows x H]
};

struct LstmStage {
  std::size_t input_dim = 0;
  std::vector<Real> x;  // [rows x input_dim]
  LstmDirection dir[2];
  SeqNormStats bn;
  double bn_inv_std = 1.0;
};

}  // namespace detail

struct ForwardCache {
  std::size_t batch = 0;
  Mode mode = Mode::kTrain;
  kernels::Backend backend = kernels::Backend::kParallel;
  std::vector<std::size_t> steps;    // recurrent length per sample
  std::vector<std::size_t> offsets;  // packed row offset per sample, size batch + 1
  std::vector<detail::ConvStage> conv;
  std::vector<detail::LstmStage> lstm;
  std::vector<Real> summary;  // [batch x 2H]
  Tensor probs;
};

namespace {

using detail::ConvStage;
using detail::LstmDirection;
using detail::LstmStage;

struct KernelOps {
  decltype(&kernels::serial::gemm_nn) gemm_nn;
  decltype(&kernels::serial::gemm_nt) gemm_nt;
  decltype(&kernels::serial::gemm_tn) gemm_tn;
  decltype(&kernels::serial::conv2d_forward) conv_forward;
  decltype(&kernels::serial::conv2d_backward) conv_backward;
};

const KernelOps &ops_for(kernels::Backend backend) {
  static const KernelOps serial{kernels::serial::gemm_nn, kernels::serial::gemm_nt,
                                kernels::serial::gemm_tn, kernels::serial::conv2d_forward,
                                kernels::serial::conv2d_backward};
  static const KernelOps parallel{kernels::parallel::gemm_nn, kernels::parallel::gemm_nt,
                                  kernels::parallel::gemm_tn, kernels::parallel::conv2d_forward,
                                  kernels::parallel::conv2d_backward};
  return backend == kernels::Backend::kSerial ? serial : parallel;
}

inline Real sigmoid(Real x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Real activate(Real x, Activation a, double slope) {
  switch (a) {
    case Activation::kLeakyRelu: return x > 0.0 ? x : slope * x;
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kTanh: return std::tanh(x);
  }
  return x;
}

inline Real activate_grad(Real pre, Activation a, double slope) {
  switch (a) {
    case Activation::kLeakyRelu: return pre > 0.0 ? 1.0 : slope;
    case Activation::kRelu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const Real t = std::tanh(pre);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

void check_finite(std::span<const Real> v, const std::string &layer) {
  for (Real x : v)
    if (!std::isfinite(x)) throw DataError("non-finite activation in layer " + layer);
}

std::string conv_name(std::size_t i) { return "conv." + std::to_string(i); }
std::string lstm_name(std::size_t l) { return "bilstm." + std::to_string(l); }
const char *kDirName[2] = {"fwd", "bwd"};

// Row index of processing step s for direction d of a sample.
inline std::size_t step_row(std::size_t offset, std::size_t length, int d, std::size_t s) {
  return d == 0 ? offset + s : offset + length - 1 - s;
}

}  // namespace

const char *activation_name(Activation a) {
  switch (a) {
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "?";
}

Activation parse_activation(const std::string &s) {
  if (s == "leaky_relu") return Activation::kLeakyRelu;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + s + "' (leaky_relu|relu|tanh)");
}

NetworkConfig NetworkConfig::default_preset(std::size_t input_bins) {
  NetworkConfig c;
  c.conv_layers = {{16, 5, 5, 1, 2}, {32, 3, 3, 2, 2}, {64, 3, 3, 2, 2}, {64, 3, 3, 2, 2}};
  c.bilstm_layers = 1;
  c.hidden_size = 128;
  c.input_bins = input_bins;
  return c;
}

void NetworkConfig::validate() const {
  if (conv_layers.empty() || conv_layers.size() > 6)
    throw ConfigError("conv layer count must lie in [1, 6]");
  if (bilstm_layers < 1 || bilstm_layers > 4)
    throw ConfigError("Bi-LSTM layer count must lie in [1, 4]");
  if (hidden_size < 1) throw ConfigError("hidden size must be positive");
  if (num_classes != kNumEmotions) throw ConfigError("num_classes must be 4");
  if (input_bins < 1) throw ConfigError("input_bins must be positive");
  for (std::size_t i = 0; i < conv_layers.size(); ++i) {
    const auto &l = conv_layers[i];
    if (l.out_channels < 1 || l.kernel_t < 1 || l.kernel_f < 1 || l.stride_t < 1 || l.stride_f < 1)
      throw ConfigError("conv layer " + std::to_string(i) + " has a zero dimension");
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must lie in [0, 1)");
  if (!(bn_epsilon > 0.0)) throw ConfigError("bn_epsilon must be positive");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) throw ConfigError("bn_momentum must lie in [0, 1)");
  auto f = freq_extents();
  if (f.back() < 1)
    throw ConfigError("conv stack reduces " + std::to_string(input_bins) +
                      " frequency bins to nothing");
}

std::vector<std::size_t> NetworkConfig::freq_extents() const {
  std::vector<std::size_t> out;
  std::size_t f = input_bins;
  for (const auto &l : conv_layers) {
    f = kernels::conv_out_extent(f, l.kernel_f, l.stride_f);
    out.push_back(f);
  }
  return out;
}

std::size_t NetworkConfig::recurrent_input_dim() const {
  return conv_layers.back().out_channels * freq_extents().back();
}

std::size_t NetworkConfig::min_frames() const {
  std::size_t need = 1;
  for (auto it = conv_layers.rbegin(); it != conv_layers.rend(); ++it)
    need = (need - 1) * it->stride_t + it->kernel_t;
  return need;
}

std::size_t mask_propagate(std::size_t length, std::span<const ConvLayerSpec> conv_layers) {
  for (const auto &l : conv_layers) {
    length = kernels::conv_out_extent(length, l.kernel_t, l.stride_t);
    if (length < 1) throw DataError("sample too short for architecture");
  }
  return length;
}

Mask build_mask(std::span<const std::size_t> lengths, std::span<const ConvLayerSpec> conv_layers) {
  Mask m;
  m.stages.emplace_back(lengths.begin(), lengths.end());
  for (const auto &l : conv_layers) {
    std::vector<std::size_t> next;
    for (std::size_t len : m.stages.back()) {
      const std::size_t out = kernels::conv_out_extent(len, l.kernel_t, l.stride_t);
      if (out < 1)
        throw DataError("sample too short for architecture (length " + std::to_string(lengths[next.size()]) + ")");
      next.push_back(out);
    }
    m.stages.push_back(std::move(next));
  }
  return m;
}

NetworkParams init_params(const NetworkConfig &config, std::uint64_t seed) {
  config.validate();
  NetworkParams p;
  p.config = config;
  std::mt19937_64 rng(seed);
  auto fill_uniform = [&](Tensor &t, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Real &v : t.data) v = u(rng);
  };

  std::size_t in_ch = 1;
  for (std::size_t i = 0; i < config.conv_layers.size(); ++i) {
    const auto &l = config.conv_layers[i];
    Tensor &k = p.weights.add(conv_name(i) + ".kernel", {l.out_channels, in_ch, l.kernel_t, l.kernel_f});
    p.weights.add(conv_name(i) + ".bias", {l.out_channels});
    // He-uniform for rectifier-like units.
    fill_uniform(k, std::sqrt(6.0 / static_cast<double>(in_ch * l.kernel_t * l.kernel_f)));
    in_ch = l.out_channels;
  }

  const std::size_t h = config.hidden_size;
  std::size_t in_dim = config.recurrent_input_dim();
  for (std::size_t l = 0; l < config.bilstm_layers; ++l) {
    for (int d = 0; d < 2; ++d) {
      const std::string base = lstm_name(l) + "." + kDirName[d];
      Tensor &wx = p.weights.add(base + ".W_x", {4 * h, in_dim});
      Tensor &wh = p.weights.add(base + ".W_h", {4 * h, h});
      Tensor &b = p.weights.add(base + ".bias", {4 * h});
      fill_uniform(wx, std::sqrt(3.0 / static_cast<double>(in_dim)));
      // Each gate block of W_h starts as an orthonormal H x H matrix
      // (Gram-Schmidt on Gaussian rows).
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (std::size_t g = 0; g < 4; ++g) {
        Real *block = wh.data.data() + g * h * h;
        for (std::size_t r = 0; r < h; ++r) {
          Real *row = block + r * h;
          for (int attempt = 0; attempt < 8; ++attempt) {
            for (std::size_t c = 0; c < h; ++c) row[c] = gauss(rng);
            for (std::size_t q = 0; q < r; ++q) {
              const Real *prev = block + q * h;
              Real dot = 0.0;
              for (std::size_t c = 0; c < h; ++c) dot += row[c] * prev[c];
              for (std::size_t c = 0; c < h; ++c) row[c] -= dot * prev[c];
            }
            Real norm = 0.0;
            for (std::size_t c = 0; c < h; ++c) norm += row[c] * row[c];
            norm = std::sqrt(norm);
            if (norm > 1e-6) {
              for (std::size_t c = 0; c < h; ++c) row[c] /= norm;
              break;
            }
          }
        }
      }
      for (std::size_t j = h; j < 2 * h; ++j) b.data[j] = 1.0;  // forget gate
    }
    if (config.use_seq_batchnorm) {
      p.weights.add(lstm_name(l) + ".bn.gamma", {8 * h}, 1.0);
      p.weights.add(lstm_name(l) + ".bn.beta", {8 * h}, 0.0);
      p.buffers.add(lstm_name(l) + ".bn.running_mean", {1}, 0.0);
      p.buffers.add(lstm_name(l) + ".bn.running_var", {1}, 1.0);
    }
    in_dim = 2 * h;
  }

  Tensor &w = p.weights.add("dense.weight", {config.num_classes, 2 * h});
  p.weights.add("dense.bias", {config.num_classes});
  fill_uniform(w, std::sqrt(3.0 / static_cast<double>(2 * h)));
  return p;
}

SeqNormStats seq_batchnorm_stats(std::span<const Real> values, std::size_t batch,
                                 std::size_t max_steps, std::size_t features,
                                 std::span<const std::size_t> lengths) {
  SeqNormStats s;
  double sum = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    if (lengths[b] > max_steps) throw DataError("sequence length exceeds padded extent");
    const Real *row = values.data() + b * max_steps * features;
    for (std::size_t i = 0; i < lengths[b] * features; ++i) sum += row[i];
    s.count += lengths[b] * features;
  }
  if (s.count == 0) throw DataError("batch norm over zero valid elements");
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const Real *row = values.data() + b * max_steps * features;
    for (std::size_t i = 0; i < lengths[b] * features; ++i) {
      const double d = row[i] - s.mean;
      ss += d * d;
    }
  }
  s.var = ss / static_cast<double>(s.count);
  return s;
}

void seq_batchnorm_apply(std::span<Real> z, std::size_t features, const SeqNormStats &stats,
                         std::span<const Real> gamma, std::span<const Real> beta, double eps) {
  const double inv = 1.0 / std::sqrt(stats.var + eps);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const std::size_t j = i % features;
    z[i] = gamma[j] * ((z[i] - stats.mean) * inv) + beta[j];
  }
}

namespace {

// Mean and biased variance over the packed fwd/bwd contributions, visiting
// each row as [fwd | bwd] so the order matches seq_batchnorm_stats on the
// equivalent padded tensor.
SeqNormStats packed_stats(const std::vector<Real> &zf, const std::vector<Real> &zb,
                          std::size_t rows, std::size_t width) {
  SeqNormStats s;
  s.count = rows * 2 * width;
  if (s.count == 0) throw DataError("batch norm over zero valid elements");
  double sum = 0.0;
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t j = 0; j < width; ++j) sum += zf[n * width + j];
    for (std::size_t j = 0; j < width; ++j) sum += zb[n * width + j];
  }
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t j = 0; j < width; ++j) {
      const double d = zf[n * width + j] - s.mean;
      ss += d * d;
    }
    for (std::size_t j = 0; j < width; ++j) {
      const double d = zb[n * width + j] - s.mean;
      ss += d * d;
    }
  }
  s.var = ss / static_cast<double>(s.count);
  return s;
}

void lstm_direction_forward(const std::vector<Real> &input_contrib, const Tensor &w_h,
                            const Tensor &bias, std::size_t h, int d,
                            const std::vector<std::size_t> &offsets,
                            const std::vector<std::size_t> &steps, bool parallel,
                            LstmDirection &out) {
  const std::size_t g4 = 4 * h;
  const std::size_t rows = offsets.back();
  out.gates.assign(rows * g4, 0.0);
  out.c.assign(rows * h, 0.0);
  out.tanh_c.assign(rows * h, 0.0);
  out.h.assign(rows * h, 0.0);
  const auto samples = static_cast<std::ptrdiff_t>(steps.size());
  const Real *wh = w_h.data.data();
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t b = 0; b < samples; ++b) {
    std::vector<Real> a(g4);
    const Real *h_prev = nullptr;
    const Real *c_prev = nullptr;
    for (std::size_t s = 0; s < steps[b]; ++s) {
      const std::size_t n = step_row(offsets[b], steps[b], d, s);
      const Real *y = input_contrib.data() + n * g4;
      for (std::size_t g = 0; g < g4; ++g) {
        Real acc = y[g] + bias.data[g];
        if (h_prev)
          for (std::size_t j = 0; j < h; ++j) acc += wh[g * h + j] * h_prev[j];
        a[g] = acc;
      }
      Real *gate = out.gates.data() + n * g4;
      Real *c = out.c.data() + n * h;
      Real *tc = out.tanh_c.data() + n * h;
      Real *hh = out.h.data() + n * h;
      for (std::size_t j = 0; j < h; ++j) {
        const Real i_g = sigmoid(a[j]);
        const Real f_g = sigmoid(a[h + j]);
        const Real g_g = std::tanh(a[2 * h + j]);
        const Real o_g = sigmoid(a[3 * h + j]);
        gate[j] = i_g;
        gate[h + j] = f_g;
        gate[2 * h + j] = g_g;
        gate[3 * h + j] = o_g;
        c[j] = (c_prev ? f_g * c_prev[j] : 0.0) + i_g * g_g;
        tc[j] = std::tanh(c[j]);
        hh[j] = o_g * tc[j];
      }
      h_prev = hh;
      c_prev = c;
    }
  }
}

// Backpropagates through one direction's recurrence. d_h holds the gradient
// flowing into each step's hidden output from above. Produces gate
// preactivation gradients d_a [rows x 4H] and the matching previous hidden
// states h_prev [rows x H].
void lstm_direction_backward(const LstmDirection &cache, const Tensor &w_h, std::size_t h, int d,
                             const std::vector<std::size_t> &offsets,
                             const std::vector<std::size_t> &steps, const std::vector<Real> &d_h,
                             bool parallel, std::vector<Real> &d_a, std::vector<Real> &h_prev) {
  const std::size_t g4 = 4 * h;
  const std::size_t rows = offsets.back();
  d_a.assign(rows * g4, 0.0);
  h_prev.assign(rows * h, 0.0);
  const auto samples = static_cast<std::ptrdiff_t>(steps.size());
  const Real *wh = w_h.data.data();
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t b = 0; b < samples; ++b) {
    std::vector<Real> dh_next(h, 0.0), dc_next(h, 0.0), dh(h);
    for (std::size_t s = steps[b]; s-- > 0;) {
      const std::size_t n = step_row(offsets[b], steps[b], d, s);
      const Real *gate = cache.gates.data() + n * g4;
      const Real *tc = cache.tanh_c.data() + n * h;
      const Real *c_prev = s > 0 ? cache.c.data() + step_row(offsets[b], steps[b], d, s - 1) * h : nullptr;
      if (s > 0)
        std::copy_n(cache.h.data() + step_row(offsets[b], steps[b], d, s - 1) * h, h,
                    h_prev.data() + n * h);
      Real *da = d_a.data() + n * g4;
      for (std::size_t j = 0; j < h; ++j) dh[j] = d_h[n * h + j] + dh_next[j];
      for (std::size_t j = 0; j < h; ++j) {
        const Real i_g = gate[j], f_g = gate[h + j], g_g = gate[2 * h + j], o_g = gate[3 * h + j];
        const Real d_o = dh[j] * tc[j];
        const Real d_c = dh[j] * o_g * (1.0 - tc[j] * tc[j]) + dc_next[j];
        const Real d_i = d_c * g_g;
        const Real d_g = d_c * i_g;
        const Real d_f = c_prev ? d_c * c_prev[j] : 0.0;
        dc_next[j] = d_c * f_g;
        da[j] = d_i * i_g * (1.0 - i_g);
        da[h + j] = d_f * f_g * (1.0 - f_g);
        da[2 * h + j] = d_g * (1.0 - g_g * g_g);
        da[3 * h + j] = d_o * o_g * (1.0 - o_g);
      }
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      for (std::size_t g = 0; g < g4; ++g) {
        const Real a = da[g];
        const Real *wrow = wh + g * h;
        for (std::size_t j = 0; j < h; ++j) dh_next[j] += a * wrow[j];
      }
    }
  }
}

void column_sums(const std::vector<Real> &m, std::size_t rows, std::size_t cols, Real *out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c] += m[r * cols + c];
}

}  // namespace

ForwardResult forward(const PaddedBatch &batch, const NetworkParams &params,
                      const ForwardOptions &options) {
  const NetworkConfig &cfg = params.config;
  if (batch.batch == 0) throw DataError("empty batch");
  if (batch.bins != cfg.input_bins)
    throw DataError("batch has " + std::to_string(batch.bins) + " frequency bins, network expects " +
                    std::to_string(cfg.input_bins));
  const KernelOps &k = ops_for(options.backend);
  const bool parallel = options.backend == kernels::Backend::kParallel;
  const std::size_t nb = batch.batch;

  auto cache = std::make_shared<ForwardCache>();
  cache->batch = nb;
  cache->mode = options.mode;
  cache->backend = options.backend;
  Mask mask = build_mask(batch.lengths, cfg.conv_layers);

  // Convolutional stack.
  std::vector<Real> current = batch.values;
  std::size_t channels = 1, t_extent = batch.max_frames, f_extent = batch.bins;
  for (std::size_t i = 0; i < cfg.conv_layers.size(); ++i) {
    const ConvLayerSpec &spec = cfg.conv_layers[i];
    ConvStage st;
    st.geom = {channels, spec.out_channels, spec.kernel_t, spec.kernel_f, spec.stride_t, spec.stride_f,
               t_extent, f_extent, kernels::conv_out_extent(t_extent, spec.kernel_t, spec.stride_t),
               kernels::conv_out_extent(f_extent, spec.kernel_f, spec.stride_f)};
    st.valid_out = mask.stages[i + 1];
    st.pre.assign(nb * st.geom.out_size(), 0.0);
    k.conv_forward(st.geom, nb, current.data(), st.valid_out,
                   params.weights.at(conv_name(i) + ".kernel").data.data(),
                   params.weights.at(conv_name(i) + ".bias").data.data(), st.pre.data());
    check_finite(st.pre, conv_name(i));
    std::vector<Real> activated(st.pre.size());
    for (std::size_t j = 0; j < st.pre.size(); ++j)
      activated[j] = activate(st.pre[j], cfg.activation, cfg.leaky_slope);
    st.input = std::move(current);
    current = std::move(activated);
    channels = st.geom.out_channels;
    t_extent = st.geom.out_t;
    f_extent = st.geom.out_f;
    cache->conv.push_back(std::move(st));
  }

  // Pack valid steps of every sample into rows for the recurrent stack.
  cache->steps = mask.recurrent();
  cache->offsets.assign(nb + 1, 0);
  for (std::size_t b = 0; b < nb; ++b) cache->offsets[b + 1] = cache->offsets[b] + cache->steps[b];
  const std::size_t rows = cache->offsets.back();
  const std::size_t h = cfg.hidden_size, g4 = 4 * h;

  std::vector<Real> x(rows * channels * f_extent);
  {
    const std::size_t dim = channels * f_extent;
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t t = 0; t < cache->steps[b]; ++t)
        for (std::size_t c = 0; c < channels; ++c)
          std::copy_n(current.data() + ((b * channels + c) * t_extent + t) * f_extent, f_extent,
                      x.data() + (cache->offsets[b] + t) * dim + c * f_extent);
  }

  for (std::size_t l = 0; l < cfg.bilstm_layers; ++l) {
    LstmStage st;
    st.input_dim = x.size() / std::max<std::size_t>(rows, 1);
    st.x = std::move(x);
    const std::string base = lstm_name(l);
    for (int d = 0; d < 2; ++d) {
      const Tensor &wx = params.weights.at(base + "." + kDirName[d] + ".W_x");
      st.dir[d].z.assign(rows * g4, 0.0);
      k.gemm_nt(rows, g4, st.input_dim, st.x.data(), wx.data.data(), st.dir[d].z.data(), false);
    }
    std::vector<Real> contrib[2];
    if (cfg.use_seq_batchnorm) {
      if (options.mode == Mode::kTrain) {
        st.bn = packed_stats(st.dir[0].z, st.dir[1].z, rows, g4);
      } else {
        st.bn.mean = params.buffers.at(base + ".bn.running_mean").data[0];
        st.bn.var = params.buffers.at(base + ".bn.running_var").data[0];
        st.bn.count = rows * 2 * g4;
      }
      st.bn_inv_std = 1.0 / std::sqrt(st.bn.var + cfg.bn_epsilon);
      const Tensor &gamma = params.weights.at(base + ".bn.gamma");
      const Tensor &beta = params.weights.at(base + ".bn.beta");
      for (int d = 0; d < 2; ++d) {
        st.dir[d].zhat.resize(rows * g4);
        contrib[d].resize(rows * g4);
        for (std::size_t n = 0; n < rows; ++n)
          for (std::size_t g = 0; g < g4; ++g) {
            const Real zh = (st.dir[d].z[n * g4 + g] - st.bn.mean) * st.bn_inv_std;
            st.dir[d].zhat[n * g4 + g] = zh;
            contrib[d][n * g4 + g] = gamma.data[d * g4 + g] * zh + beta.data[d * g4 + g];
          }
      }
    } else {
      contrib[0] = st.dir[0].z;
      contrib[1] = st.dir[1].z;
    }
    for (int d = 0; d < 2; ++d)
      lstm_direction_forward(contrib[d], params.weights.at(base + "." + kDirName[d] + ".W_h"),
                             params.weights.at(base + "." + kDirName[d] + ".bias"), h, d,
                             cache->offsets, cache->steps, parallel, st.dir[d]);
    check_finite(st.dir[0].h, base + ".fwd");
    check_finite(st.dir[1].h, base + ".bwd");
    x.assign(rows * 2 * h, 0.0);
    for (std::size_t n = 0; n < rows; ++n) {
      std::copy_n(st.dir[0].h.data() + n * h, h, x.data() + n * 2 * h);
      std::copy_n(st.dir[1].h.data() + n * h, h, x.data() + n * 2 * h + h);
    }
    cache->lstm.push_back(std::move(st));
  }

  // Summary: forward state at the last valid step, backward state at step 0.
  const LstmStage &top = cache->lstm.back();
  cache->summary.assign(nb * 2 * h, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t last = cache->offsets[b] + cache->steps[b] - 1;
    std::copy_n(top.dir[0].h.data() + last * h, h, cache->summary.data() + b * 2 * h);
    std::copy_n(top.dir[1].h.data() + cache->offsets[b] * h, h, cache->summary.data() + b * 2 * h + h);
  }

  const std::size_t nc = cfg.num_classes;
  ForwardResult result;
  result.logits = Tensor({nb, nc});
  result.probs = Tensor({nb, nc});
  const Tensor &wd = params.weights.at("dense.weight");
  const Tensor &bd = params.weights.at("dense.bias");
  k.gemm_nt(nb, nc, 2 * h, cache->summary.data(), wd.data.data(), result.logits.data.data(), false);
  for (std::size_t b = 0; b < nb; ++b) {
    Real *z = result.logits.data.data() + b * nc;
    for (std::size_t c = 0; c < nc; ++c) z[c] += bd.data[c];
    const Real zmax = *std::max_element(z, z + nc);
    Real denom = 0.0;
    for (std::size_t c = 0; c < nc; ++c) denom += std::exp(z[c] - zmax);
    for (std::size_t c = 0; c < nc; ++c) result.probs.data[b * nc + c] = std::exp(z[c] - zmax) / denom;
  }
  check_finite(result.logits.data, "dense");
  if (options.mode == Mode::kTrain) {
    cache->probs = result.probs;
    result.cache = std::move(cache);
  }
  return result;
}

double cross_entropy(const Tensor &probs, std::span<const Emotion> labels) {
  const std::size_t nb = probs.dim(0), nc = probs.dim(1);
  if (labels.size() != nb) throw DataError("label count does not match batch");
  double loss = 0.0;
  for (std::size_t b = 0; b < nb; ++b) loss -= std::log(probs.data[b * nc + index_of(labels[b])]);
  return loss / static_cast<double>(nb);
}

BackwardResult backward(const ForwardCache &cache, const NetworkParams &params,
                        std::span<const Emotion> labels) {
  if (cache.mode != Mode::kTrain) throw DataError("backward requires a train-mode forward pass");
  const NetworkConfig &cfg = params.config;
  const KernelOps &k = ops_for(cache.backend);
  const bool parallel = cache.backend == kernels::Backend::kParallel;
  const std::size_t nb = cache.batch, nc = cfg.num_classes, h = cfg.hidden_size, g4 = 4 * h;
  const std::size_t rows = cache.offsets.back();

  BackwardResult out;
  out.grads = params.weights.zeros_like();
  out.loss = cross_entropy(cache.probs, labels);

  // Dense + softmax cross-entropy.
  std::vector<Real> d_logits(nb * nc);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t c = 0; c < nc; ++c)
      d_logits[b * nc + c] = (cache.probs.data[b * nc + c] - (index_of(labels[b]) == static_cast<int>(c) ? 1.0 : 0.0)) /
                             static_cast<double>(nb);
  k.gemm_tn(nc, 2 * h, nb, d_logits.data(), cache.summary.data(),
            out.grads.at("dense.weight").data.data(), false);
  column_sums(d_logits, nb, nc, out.grads.at("dense.bias").data.data());
  std::vector<Real> d_summary(nb * 2 * h, 0.0);
  k.gemm_nn(nb, 2 * h, nc, d_logits.data(), params.weights.at("dense.weight").data.data(),
            d_summary.data(), false);

  std::vector<Real> d_h[2];
  d_h[0].assign(rows * h, 0.0);
  d_h[1].assign(rows * h, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t last = cache.offsets[b] + cache.steps[b] - 1;
    for (std::size_t j = 0; j < h; ++j) {
      d_h[0][last * h + j] += d_summary[b * 2 * h + j];
      d_h[1][cache.offsets[b] * h + j] += d_summary[b * 2 * h + h + j];
    }
  }

  std::vector<Real> d_x;
  for (std::size_t l = cfg.bilstm_layers; l-- > 0;) {
    const LstmStage &st = cache.lstm[l];
    const std::string base = lstm_name(l);
    std::vector<Real> d_a[2], h_prev[2];
    for (int d = 0; d < 2; ++d) {
      const std::string dn = base + "." + kDirName[d];
      lstm_direction_backward(st.dir[d], params.weights.at(dn + ".W_h"), h, d, cache.offsets,
                              cache.steps, d_h[d], parallel, d_a[d], h_prev[d]);
      k.gemm_tn(g4, h, rows, d_a[d].data(), h_prev[d].data(), out.grads.at(dn + ".W_h").data.data(),
                false);
      column_sums(d_a[d], rows, g4, out.grads.at(dn + ".bias").data.data());
    }
    // d_a is now the gradient w.r.t. the (possibly normalised) input contribution.
    std::vector<Real> d_z[2];
    if (cfg.use_seq_batchnorm) {
      const Tensor &gamma = params.weights.at(base + ".bn.gamma");
      Real *d_gamma = out.grads.at(base + ".bn.gamma").data.data();
      Real *d_beta = out.grads.at(base + ".bn.beta").data.data();
      double mean_dzh = 0.0, mean_dzh_zh = 0.0;
      for (int d = 0; d < 2; ++d) {
        d_z[d].resize(rows * g4);
        for (std::size_t n = 0; n < rows; ++n)
          for (std::size_t g = 0; g < g4; ++g) {
            const Real dy = d_a[d][n * g4 + g];
            const Real zh = st.dir[d].zhat[n * g4 + g];
            d_gamma[d * g4 + g] += dy * zh;
            d_beta[d * g4 + g] += dy;
            const Real dzh = dy * gamma.data[d * g4 + g];
            d_z[d][n * g4 + g] = dzh;
            mean_dzh += dzh;
            mean_dzh_zh += dzh * zh;
          }
      }
      const double count = static_cast<double>(st.bn.count);
      mean_dzh /= count;
      mean_dzh_zh /= count;
      for (int d = 0; d < 2; ++d)
        for (std::size_t i = 0; i < rows * g4; ++i)
          d_z[d][i] = st.bn_inv_std * (d_z[d][i] - mean_dzh - st.dir[d].zhat[i] * mean_dzh_zh);
    } else {
      d_z[0] = std::move(d_a[0]);
      d_z[1] = std::move(d_a[1]);
    }
    d_x.assign(rows * st.input_dim, 0.0);
    for (int d = 0; d < 2; ++d) {
      const std::string dn = base + "." + kDirName[d];
      k.gemm_tn(g4, st.input_dim, rows, d_z[d].data(), st.x.data(),
                out.grads.at(dn + ".W_x").data.data(), false);
      k.gemm_nn(rows, st.input_dim, g4, d_z[d].data(), params.weights.at(dn + ".W_x").data.data(),
                d_x.data(), true);
    }
    if (l > 0) {
      for (std::size_t n = 0; n < rows; ++n) {
        std::copy_n(d_x.data() + n * 2 * h, h, d_h[0].data() + n * h);
        std::copy_n(d_x.data() + n * 2 * h + h, h, d_h[1].data() + n * h);
      }
    }
  }

  // Scatter the recurrent input gradient back onto the last conv map.
  const ConvStage &last = cache.conv.back();
  std::vector<Real> d_out(nb * last.geom.out_size(), 0.0);
  {
    const std::size_t ch = last.geom.out_channels, te = last.geom.out_t, fe = last.geom.out_f;
    const std::size_t dim = ch * fe;
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t t = 0; t < cache.steps[b]; ++t)
        for (std::size_t c = 0; c < ch; ++c)
          std::copy_n(d_x.data() + (cache.offsets[b] + t) * dim + c * fe, fe,
                      d_out.data() + ((b * ch + c) * te + t) * fe);
  }

  for (std::size_t i = cfg.conv_layers.size(); i-- > 0;) {
    const ConvStage &st = cache.conv[i];
    for (std::size_t j = 0; j < d_out.size(); ++j)
      d_out[j] *= activate_grad(st.pre[j], cfg.activation, cfg.leaky_slope);
    std::vector<Real> d_in(nb * st.geom.in_size(), 0.0);
    k.conv_backward(st.geom, nb, st.input.data(), st.valid_out,
                    params.weights.at(conv_name(i) + ".kernel").data.data(), d_out.data(),
                    out.grads.at(conv_name(i) + ".kernel").data.data(),
                    out.grads.at(conv_name(i) + ".bias").data.data(), d_in.data());
    d_out = std::move(d_in);
  }
  return out;
}

void update_running_stats(NetworkParams &params, const ForwardCache &cache) {
  if (!params.config.use_seq_batchnorm || cache.mode != Mode::kTrain) return;
  const double m = params.config.bn_momentum;
  for (std::size_t l = 0; l < cache.lstm.size(); ++l) {
    Real &rm = params.buffers.at(lstm_name(l) + ".bn.running_mean").data[0];
    Real &rv = params.buffers.at(lstm_name(l) + ".bn.running_var").data[0];
    rm = m * rm + (1.0 - m) * cache.lstm[l].bn.mean;
    rv = m * rv + (1.0 - m) * cache.lstm[l].bn.var;
  }
}

std::vector<SeqNormStats> batchnorm_stats(const ForwardCache &cache) {
  std::vector<SeqNormStats> out;
  for (const auto &st : cache.lstm) out.push_back(st.bn);
  return out;
}

}  // namespace emorec
