// tests/test_optim.cc

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

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "emorec/error.h"
#include "emorec/gradcheck.h"
#include "emorec/net.h"
#include "emorec/optim.h"
#include "emorec/vtlp.h"

namespace emorec {
namespace {

TensorSet two_tensors(Real a, Real b) {
  TensorSet s;
  s.add("conv.0.kernel", {2, 2}, a);
  s.add("bilstm.0.fwd.W_x", {3}, b);
  return s;
}

// Random gradient stream shared by trajectories under comparison.
std::vector<TensorSet> gradient_stream(const TensorSet &like, int steps, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<TensorSet> out;
  for (int i = 0; i < steps; ++i) {
    TensorSet s = like.zeros_like();
    for (std::size_t t = 0; t < s.size(); ++t)
      for (auto &v : s.tensor(t).data) v = g(rng);
    out.push_back(std::move(s));
  }
  return out;
}

TEST(OptimConfig, ValidatesRanges) {
  EXPECT_NO_THROW(OptimConfig{}.validate());
  EXPECT_THROW((OptimConfig{0.0, 0.9, 1.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((OptimConfig{0.1, 1.0, 1.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((OptimConfig{0.1, -0.1, 1.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((OptimConfig{0.1, 0.5, 0.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((OptimConfig{0.1, 0.5, 1.0, -1e-3}.validate()), ConfigError);
}

TEST(Step, ZeroMomentumIsPlainSgd) {
  TensorSet w = two_tensors(1.0, -2.0);
  TensorSet g = two_tensors(0.5, 4.0);
  OptimState st = OptimState::zeros_like(w);
  step(w, g, st, std::vector<OptimConfig>(2, {0.1, 0.0, 1.0, 0.0}));
  for (Real v : w.at("conv.0.kernel").data) EXPECT_DOUBLE_EQ(v, 1.0 - 0.05);
  for (Real v : w.at("bilstm.0.fwd.W_x").data) EXPECT_DOUBLE_EQ(v, -2.0 - 0.4);
  EXPECT_EQ(st.step, 1u);
}

TEST(Step, ScalarHandIteration) {
  TensorSet w;
  w.add("w", {1}, 1.0);
  TensorSet g;
  g.add("w", {1}, 1.0);
  OptimState st = OptimState::zeros_like(w);
  const std::vector<OptimConfig> cfg = {{0.1, 0.5, 2.0, 0.0}};
  step(w, g, st, cfg);
  EXPECT_DOUBLE_EQ(st.velocity.at("w").data[0], 0.1);
  step(w, g, st, cfg);
  EXPECT_DOUBLE_EQ(st.velocity.at("w").data[0], 0.15);
  EXPECT_NEAR(w.at("w").data[0], 0.5, 1e-15);
}

TEST(Step, UnitBetaIsClassicalMomentumBitForBit) {
  TensorSet w = two_tensors(0.3, -0.7);
  const auto grads = gradient_stream(w, 100, 1);
  OptimState st = OptimState::zeros_like(w);
  const OptimConfig cfg{0.01, 0.9, 1.0, 1e-4};
  std::vector<std::vector<Real>> ref_w, ref_v;
  for (std::size_t t = 0; t < w.size(); ++t) {
    ref_w.push_back(w.tensor(t).data);
    ref_v.push_back(std::vector<Real>(w.tensor(t).size(), 0.0));
  }
  for (const auto &g : grads) {
    step(w, g, st, std::vector<OptimConfig>(2, cfg));
    for (std::size_t t = 0; t < w.size(); ++t)
      for (std::size_t j = 0; j < ref_w[t].size(); ++j) {
        ref_v[t][j] = cfg.gamma * ref_v[t][j] + cfg.eta * (g.tensor(t).data[j] + cfg.lambda * ref_w[t][j]);
        ref_w[t][j] = ref_w[t][j] - ref_v[t][j];
      }
    for (std::size_t t = 0; t < w.size(); ++t) ASSERT_EQ(w.tensor(t).data, ref_w[t]);
  }
}

TEST(Step, ScaleEquivalence) {
  for (double c : {0.5, 2.0, 10.0}) {
    TensorSet a = two_tensors(0.3, -0.7), b = a;
    const auto grads = gradient_stream(a, 100, 2);
    OptimState sa = OptimState::zeros_like(a), sb = OptimState::zeros_like(b);
    const OptimConfig ca{0.01, 0.9, 0.8, 0.0}, cb{0.01 * c, 0.9, 0.8 / c, 0.0};
    for (const auto &g : grads) {
      step(a, g, sa, std::vector<OptimConfig>(2, ca));
      step(b, g, sb, std::vector<OptimConfig>(2, cb));
      for (std::size_t t = 0; t < a.size(); ++t)
        for (std::size_t j = 0; j < a.tensor(t).size(); ++j)
          ASSERT_NEAR(a.tensor(t).data[j], b.tensor(t).data[j], 1e-12) << "c=" << c;
    }
  }
}

TEST(Step, ZeroGradientFixedPoint) {
  TensorSet w = two_tensors(0.3, -0.7);
  const TensorSet zero = w.zeros_like();
  OptimState st = OptimState::zeros_like(w);
  step(w, zero, st, std::vector<OptimConfig>(2, {0.1, 0.0, 1.0, 0.0}));
  EXPECT_EQ(w.at("conv.0.kernel").data[0], 0.3);
  EXPECT_EQ(w.at("bilstm.0.fwd.W_x").data[0], -0.7);
}

TEST(Step, L2TermEqualsGradientOfPenalty) {
  TensorSet a = two_tensors(0.3, -0.7), b = a;
  const auto grads = gradient_stream(a, 1, 3);
  OptimState sa = OptimState::zeros_like(a), sb = OptimState::zeros_like(b);
  const double lambda = 0.05;
  TensorSet augmented = grads[0];
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t j = 0; j < a.tensor(t).size(); ++j)
      augmented.tensor(t).data[j] += lambda * a.tensor(t).data[j];
  step(a, grads[0], sa, std::vector<OptimConfig>(2, {0.1, 0.9, 1.0, lambda}));
  step(b, augmented, sb, std::vector<OptimConfig>(2, {0.1, 0.9, 1.0, 0.0}));
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_EQ(a.tensor(t).data, b.tensor(t).data);
}

// The penalised gradient dJ/dw + lambda * w agrees with central differences of
// J + lambda / 2 * |w|^2 on the gradient-check network.
TEST(Step, L2TermMatchesFiniteDifferencesOfPenalisedLoss) {
  GradcheckConfig gc;
  const NetworkConfig net = gradcheck_network(gc);
  NetworkParams p = init_params(net, 3);
  Rng rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Spectrogram> specs;
  std::vector<Emotion> labels;
  for (std::size_t i = 0; i < 3; ++i) {
    Spectrogram s;
    s.frames = 8 + 2 * i;
    s.bins = net.input_bins;
    s.values.resize(s.frames * s.bins);
    for (auto &v : s.values) v = g(rng);
    specs.push_back(s);
    labels.push_back(kAllEmotions[i]);
  }
  const PaddedBatch batch = pad_batch(specs, labels);
  const double lambda = 0.3;
  auto penalised = [&]() {
    double sq = 0.0;
    for (std::size_t t = 0; t < p.weights.size(); ++t)
      for (Real v : p.weights.tensor(t).data) sq += v * v;
    return cross_entropy(forward(batch, p, {Mode::kTrain, kernels::Backend::kSerial}).probs, labels) +
           0.5 * lambda * sq;
  };
  const ForwardResult fr = forward(batch, p, {Mode::kTrain, kernels::Backend::kSerial});
  const BackwardResult br = backward(*fr.cache, p, labels);
  for (const char *name : {"conv.0.kernel", "bilstm.0.fwd.W_h", "dense.weight"}) {
    Tensor &w = p.weights.at(name);
    for (std::size_t j = 0; j < w.size(); j += 7) {
      const double analytic = br.grads.at(name).data[j] + lambda * w.data[j];
      const Real saved = w.data[j];
      w.data[j] = saved + 1e-5;
      const double plus = penalised();
      w.data[j] = saved - 1e-5;
      const double minus = penalised();
      w.data[j] = saved;
      EXPECT_LE(relative_error(analytic, (plus - minus) / 2e-5), 1e-4) << name << "[" << j << "]";
    }
  }
}

TEST(Step, GroupsDoNotShareVelocity) {
  TensorSet w = two_tensors(0.3, -0.7);
  TensorSet g = w.zeros_like();
  g.at("conv.0.kernel").fill(1.0);
  OptimState st = OptimState::zeros_like(w);
  const std::vector<LayerGroup> groups = {{"conv", {"conv.*"}, {0.1, 0.9, 1.0, 0.0}},
                                          LayerGroup::catch_all({0.2, 0.5, 1.0, 0.0})};
  step(w, g, st, groups);
  for (Real v : st.velocity.at("bilstm.0.fwd.W_x").data) EXPECT_EQ(v, 0.0);
  for (Real v : st.velocity.at("conv.0.kernel").data) EXPECT_DOUBLE_EQ(v, 0.1);
}

TEST(Step, RejectsNonFiniteGradientBeforeAnyUpdate) {
  TensorSet w = two_tensors(0.3, -0.7);
  TensorSet g = two_tensors(1.0, 1.0);
  g.at("bilstm.0.fwd.W_x").data[1] = std::numeric_limits<double>::infinity();
  OptimState st = OptimState::zeros_like(w);
  try {
    step(w, g, st, std::vector<OptimConfig>(2, OptimConfig{}));
    FAIL() << "expected DataError";
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find("bilstm.0.fwd.W_x"), std::string::npos);
  }
  EXPECT_EQ(w.at("conv.0.kernel").data[0], 0.3);
  EXPECT_EQ(st.step, 0u);
}

TEST(Groups, FirstMatchWinsWithTrailingDefault) {
  const std::vector<std::string> names = {"conv.3.kernel", "bilstm.0.W_x", "dense.bias"};
  const std::vector<LayerGroup> groups = {{"conv", {"conv.*"}, {0.01, 0.9, 1.0, 0.0}},
                                          {"other", {"conv.3.*", "dense.*"}, {0.5, 0.9, 1.0, 0.0}},
                                          LayerGroup::catch_all({0.1, 0.9, 1.0, 0.0})};
  const auto resolved = resolve_groups(names, groups);
  EXPECT_EQ(resolved[0].eta, 0.01);
  EXPECT_EQ(resolved[1].eta, 0.1);
  EXPECT_EQ(resolved[2].eta, 0.5);
}

TEST(Groups, SingleDefaultCoversEverything) {
  const auto resolved = resolve_groups({"a", "b.c"}, {LayerGroup::catch_all({0.3, 0.1, 2.0, 0.0})});
  for (const auto &c : resolved) EXPECT_EQ(c, (OptimConfig{0.3, 0.1, 2.0, 0.0}));
}

TEST(Groups, UnmatchedNameIsConfigError) {
  EXPECT_THROW(resolve_groups({"dense.bias"}, {{"conv", {"conv.*"}, {}}}), ConfigError);
}

TEST(GradNorms, RecordsPerTensor) {
  TensorSet g;
  g.add("zero", {3}, 0.0);
  Tensor &u = g.add("unit", {4}, 0.0);
  u.data[2] = 3.0;
  const TensorSet w = g.zeros_like();
  const auto records = log_grad_norms(g, w, 7);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].grad_norm, 0.0);
  EXPECT_EQ(records[1].grad_norm, 3.0);
  EXPECT_EQ(records[1].step, 7u);
  EXPECT_EQ(records[1].layer, "unit");
}

TEST(GradLog, WritesCsvOnFlush) {
  std::ostringstream os;
  GradLog log(&os);
  log.append({{1, "a", 0.5, 2.0}, {1, "b", 0.25, 1.0}});
  EXPECT_EQ(os.str(), "");
  EXPECT_EQ(log.pending(), 2u);
  log.flush();
  log.append({{2, "a", 1.0, 2.0}});
  log.flush();
  EXPECT_EQ(log.written(), 3u);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,layer,grad_norm,param_norm");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

}  // namespace
}  // namespace emorec
