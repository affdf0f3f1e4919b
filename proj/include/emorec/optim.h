// include/emorec/optim.h

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

#ifndef EMOREC_OPTIM_H_
#define EMOREC_OPTIM_H_

// Momentum SGD with a separate update scale:
//   g = dJ/dw + lambda * w
//   v = gamma * v + eta * g
//   w = w - beta * v
// beta = 1 is classical momentum. Hyperparameters are chosen per tensor
// through an ordered list of name-pattern groups.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "emorec/tensor.h"

namespace emorec {

struct OptimConfig {
  double eta = 0.01;     // learning rate
  double gamma = 0.9;    // momentum
  double beta = 1.0;     // update scale
  double lambda = 1e-4;  // L2 coefficient

  void validate() const;
  bool operator==(const OptimConfig &) const = default;
};

// Glob patterns ('*' and '?') over parameter names. First matching group wins.
struct LayerGroup {
  std::string name;
  std::vector<std::string> patterns;
  OptimConfig config;

  bool matches(const std::string &param_name) const;
  static LayerGroup catch_all(OptimConfig config) { return {"default", {"*"}, config}; }
};

// One config per parameter name, in the order given. Throws ConfigError if a
// name is matched by no group.
std::vector<OptimConfig> resolve_groups(const std::vector<std::string> &param_names,
                                        const std::vector<LayerGroup> &groups);

struct OptimState {
  TensorSet velocity;  // mirrors the parameter set, zero-initialised
  std::uint64_t step = 0;

  static OptimState zeros_like(const TensorSet &params);
};

// Applies one update to every tensor. grads must have the same names and
// shapes as params; a non-finite gradient aborts before anything is changed.
void step(TensorSet &params, const TensorSet &grads, OptimState &state,
          const std::vector<OptimConfig> &resolved);
void step(TensorSet &params, const TensorSet &grads, OptimState &state,
          const std::vector<LayerGroup> &groups);

struct GradLogRecord {
  std::uint64_t step = 0;
  std::string layer;
  double grad_norm = 0.0;
  double param_norm = 0.0;
};

double l2_norm(const Tensor &t);

// One record per named tensor.
std::vector<GradLogRecord> log_grad_norms(const TensorSet &grads, const TensorSet &params,
                                          std::uint64_t step);

// Buffers records and writes them as CSV ("step,layer,grad_norm,param_norm")
// whenever flush() is called.
class GradLog {
 public:
  explicit GradLog(std::ostream *sink = nullptr);

  void append(const std::vector<GradLogRecord> &records);
  void flush();
  std::size_t pending() const { return pending_.size(); }
  std::size_t written() const { return written_; }

 private:
  std::ostream *sink_;
  std::vector<GradLogRecord> pending_;
  std::size_t written_ = 0;
  bool header_written_ = false;
};

}  // namespace emorec

#endif  // EMOREC_OPTIM_H_
