// src/gradcheck.cc

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

#include "emorec/gradcheck.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "emorec/vtlp.h"

namespace emorec {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

NetworkConfig gradcheck_network(const GradcheckConfig &config) {
  config.validate();
  NetworkConfig net;
  net.conv_layers = {{2, 3, 3, 1, 1}, {3, 3, 3, 2, 2}};
  net.bilstm_layers = 1;
  net.hidden_size = config.hidden_size;
  net.use_seq_batchnorm = config.seq_batchnorm;
  net.input_bins = config.input_bins;
  net.validate();
  return net;
}

GradcheckReport run_gradcheck(const GradcheckConfig &config, GradcheckFault fault) {
  return run_gradcheck(gradcheck_network(config), config, fault);
}

GradcheckReport run_gradcheck(const NetworkConfig &net, const GradcheckConfig &config,
                              GradcheckFault fault, std::size_t max_per_tensor) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  net.validate();
  NetworkParams params = init_params(net, config.seed);

  Rng rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> label_dist(0, kNumEmotions - 1);
  const std::size_t min_frames = net.min_frames();
  std::vector<Spectrogram> specs;
  std::vector<Emotion> labels;
  for (std::size_t b = 0; b < config.batch; ++b) {
    Spectrogram s;
    s.frames = min_frames + 2 + 3 * ((config.batch - b) % 4);
    s.bins = net.input_bins;
    s.values.resize(s.frames * s.bins);
    for (auto &v : s.values) v = gauss(rng);
    specs.push_back(std::move(s));
    labels.push_back(kAllEmotions[label_dist(rng)]);
  }
  // Small random biases and BN affine terms so no gradient is trivially zero.
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    const std::string &name = params.weights.name(i);
    if (name.ends_with("bias") || name.ends_with("beta") || name.ends_with("gamma"))
      for (auto &v : params.weights.tensor(i).data) v += 0.1 * gauss(rng);
  }
  const PaddedBatch batch = pad_batch(specs, labels);
  const ForwardOptions train{Mode::kTrain, kernels::Backend::kSerial};

  auto loss_at = [&]() { return cross_entropy(forward(batch, params, train).probs, labels); };

  ForwardResult fr = forward(batch, params, train);
  BackwardResult br = backward(*fr.cache, params, labels);
  if (fault == GradcheckFault::kScaleRecurrent)
    for (auto &v : br.grads.at("bilstm.0.fwd.W_h").data) v *= 1.01;
  if (fault == GradcheckFault::kDropBias) br.grads.at("dense.bias").fill(0.0);

  GradcheckReport report;
  report.tolerance = config.tolerance;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    Tensor &w = params.weights.tensor(i);
    const Tensor &g = br.grads.tensor(i);
    TensorCheck check;
    check.name = params.weights.name(i);
    check.elements = w.size();
    const std::size_t stride =
        max_per_tensor == 0 || w.size() <= max_per_tensor ? 1 : w.size() / max_per_tensor;
    for (std::size_t j = 0; j < w.size(); j += stride) {
      const Real saved = w.data[j];
      w.data[j] = saved + config.step;
      const double plus = loss_at();
      w.data[j] = saved - config.step;
      const double minus = loss_at();
      w.data[j] = saved;
      const double numeric = (plus - minus) / (2.0 * config.step);
      const double err = relative_error(g.data[j], numeric);
      if (err > check.max_rel_error) {
        check.max_rel_error = err;
        check.worst_index = j;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.tensors.push_back(check);
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace emorec
