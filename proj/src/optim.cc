// src/optim.cc

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

#include "emorec/optim.h"

#include <fnmatch.h>

#include <cmath>
#include <cstdio>

#include "emorec/error.h"

namespace emorec {

void OptimConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be non-negative");
}

bool LayerGroup::matches(const std::string &param_name) const {
  for (const auto &p : patterns)
    if (::fnmatch(p.c_str(), param_name.c_str(), 0) == 0) return true;
  return false;
}

std::vector<OptimConfig> resolve_groups(const std::vector<std::string> &param_names,
                                        const std::vector<LayerGroup> &groups) {
  for (const auto &g : groups) g.config.validate();
  std::vector<OptimConfig> out;
  out.reserve(param_names.size());
  for (const auto &name : param_names) {
    const LayerGroup *hit = nullptr;
    for (const auto &g : groups)
      if (g.matches(name)) {
        hit = &g;
        break;
      }
    if (hit == nullptr)
      throw ConfigError("parameter " + name + " matches no optimizer group (add a default group)");
    out.push_back(hit->config);
  }
  return out;
}

OptimState OptimState::zeros_like(const TensorSet &params) {
  OptimState s;
  s.velocity = params.zeros_like();
  return s;
}

void step(TensorSet &params, const TensorSet &grads, OptimState &state,
          const std::vector<OptimConfig> &resolved) {
  if (grads.size() != params.size() || resolved.size() != params.size())
    throw DataError("optimizer step: parameter, gradient and group counts differ");
  if (state.velocity.empty()) state.velocity = params.zeros_like();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads.name(i) != params.name(i) || !grads.tensor(i).same_shape(params.tensor(i)) ||
        !state.velocity.tensor(i).same_shape(params.tensor(i)))
      throw DataError("optimizer step: gradient " + grads.name(i) + " does not match parameter " +
                      params.name(i));
    for (Real g : grads.tensor(i).data)
      if (!std::isfinite(g)) throw DataError("non-finite gradient in " + grads.name(i));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const OptimConfig &c = resolved[i];
    Real *w = params.tensor(i).data.data();
    Real *v = state.velocity.tensor(i).data.data();
    const Real *g = grads.tensor(i).data.data();
    const std::size_t n = params.tensor(i).size();
    for (std::size_t j = 0; j < n; ++j) {
      const Real grad = c.lambda == 0.0 ? g[j] : g[j] + c.lambda * w[j];
      v[j] = c.gamma * v[j] + c.eta * grad;
      w[j] -= c.beta * v[j];
    }
  }
  ++state.step;
}

void step(TensorSet &params, const TensorSet &grads, OptimState &state,
          const std::vector<LayerGroup> &groups) {
  step(params, grads, state, resolve_groups(params.names(), groups));
}

double l2_norm(const Tensor &t) {
  double s = 0.0;
  for (Real v : t.data) s += v * v;
  return std::sqrt(s);
}

std::vector<GradLogRecord> log_grad_norms(const TensorSet &grads, const TensorSet &params,
                                          std::uint64_t step) {
  std::vector<GradLogRecord> out;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    GradLogRecord r;
    r.step = step;
    r.layer = grads.name(i);
    r.grad_norm = l2_norm(grads.tensor(i));
    r.param_norm = params.contains(r.layer) ? l2_norm(params.at(r.layer)) : 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

GradLog::GradLog(std::ostream *sink) : sink_(sink) {}

void GradLog::append(const std::vector<GradLogRecord> &records) {
  pending_.insert(pending_.end(), records.begin(), records.end());
}

void GradLog::flush() {
  if (sink_ != nullptr) {
    if (!header_written_) {
      *sink_ << "step,layer,grad_norm,param_norm\n";
      header_written_ = true;
    }
    char buf[64];
    for (const auto &r : pending_) {
      *sink_ << r.step << ',' << r.layer << ',';
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", r.grad_norm, r.param_norm);
      *sink_ << buf;
    }
    sink_->flush();
  }
  written_ += pending_.size();
  pending_.clear();
}

}  // namespace emorec
