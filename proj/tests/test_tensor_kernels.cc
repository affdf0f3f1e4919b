// tests/test_tensor_kernels.cc

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
#include <random>
#include <vector>

#include "emorec/error.h"
#include "emorec/kernels.h"
#include "emorec/tensor.h"

namespace emorec {
namespace {

std::vector<Real> random_vector(std::size_t n, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Real> v(n);
  for (auto &x : v) x = g(rng);
  return v;
}

void expect_close(const std::vector<Real> &a, const std::vector<Real> &b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    ASSERT_NEAR(a[i], b[i], tol * (1.0 + std::abs(b[i]))) << "index " << i;
}

TEST(Tensor, ShapeAndFill) {
  Tensor t({2, 3, 4}, 1.5);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t.dim(1), 3u);
  EXPECT_EQ(shape_string(t.shape), "[2 x 3 x 4]");
  t.fill(-2.0);
  for (Real v : t.data) EXPECT_EQ(v, -2.0);
}

TEST(TensorSet, KeepsInsertionOrderAndZerosLike) {
  TensorSet s;
  s.add("b", {2});
  s.add("a", {3, 1}, 4.0);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.name(0), "b");
  EXPECT_EQ(s.name(1), "a");
  EXPECT_TRUE(s.contains("a"));
  EXPECT_FALSE(s.contains("c"));
  const TensorSet z = s.zeros_like();
  EXPECT_EQ(z.names(), s.names());
  EXPECT_TRUE(z.at("a").same_shape(s.at("a")));
  for (Real v : z.at("a").data) EXPECT_EQ(v, 0.0);
}

TEST(Gemm, SerialMatchesHandComputedProduct) {
  const std::vector<Real> a = {1, 2, 3, 4, 5, 6};     // 2x3
  const std::vector<Real> b = {7, 8, 9, 10, 11, 12};  // 3x2
  std::vector<Real> c(4, 0.0);
  kernels::serial::gemm_nn(2, 2, 3, a.data(), b.data(), c.data(), false);
  EXPECT_EQ(c, (std::vector<Real>{58, 64, 139, 154}));
  kernels::serial::gemm_nn(2, 2, 3, a.data(), b.data(), c.data(), true);
  EXPECT_EQ(c, (std::vector<Real>{116, 128, 278, 308}));
}

class GemmShapes : public ::testing::TestWithParam<std::tuple<int, int, int>> {};

TEST_P(GemmShapes, ParallelMatchesSerial) {
  const auto [m, n, k] = GetParam();
  std::mt19937_64 rng(m * 1000 + n * 10 + k);
  const auto a = random_vector(m * k, rng);
  const auto b_nn = random_vector(k * n, rng);
  const auto b_nt = random_vector(n * k, rng);
  const auto a_tn = random_vector(k * m, rng);
  const auto init = random_vector(m * n, rng);
  for (bool acc : {false, true}) {
    std::vector<Real> s = init, p = init;
    kernels::serial::gemm_nn(m, n, k, a.data(), b_nn.data(), s.data(), acc);
    kernels::parallel::gemm_nn(m, n, k, a.data(), b_nn.data(), p.data(), acc);
    expect_close(p, s, 1e-12);
    s = init;
    p = init;
    kernels::serial::gemm_nt(m, n, k, a.data(), b_nt.data(), s.data(), acc);
    kernels::parallel::gemm_nt(m, n, k, a.data(), b_nt.data(), p.data(), acc);
    expect_close(p, s, 1e-12);
    s = init;
    p = init;
    kernels::serial::gemm_tn(m, n, k, a_tn.data(), b_nn.data(), s.data(), acc);
    kernels::parallel::gemm_tn(m, n, k, a_tn.data(), b_nn.data(), p.data(), acc);
    expect_close(p, s, 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Sizes, GemmShapes,
                         ::testing::Values(std::make_tuple(1, 1, 1), std::make_tuple(3, 5, 7),
                                           std::make_tuple(17, 300, 9),
                                           std::make_tuple(64, 33, 129),
                                           std::make_tuple(2, 513, 260)));

kernels::ConvGeometry geometry(std::size_t cin, std::size_t cout, std::size_t kt, std::size_t kf,
                               std::size_t st, std::size_t sf, std::size_t t, std::size_t f) {
  kernels::ConvGeometry g;
  g.in_channels = cin;
  g.out_channels = cout;
  g.kernel_t = kt;
  g.kernel_f = kf;
  g.stride_t = st;
  g.stride_f = sf;
  g.in_t = t;
  g.in_f = f;
  g.out_t = kernels::conv_out_extent(t, kt, st);
  g.out_f = kernels::conv_out_extent(f, kf, sf);
  return g;
}

TEST(Conv, ExtentArithmetic) {
  EXPECT_EQ(kernels::conv_out_extent(10, 3, 1), 8u);
  EXPECT_EQ(kernels::conv_out_extent(10, 3, 2), 4u);
  EXPECT_EQ(kernels::conv_out_extent(2, 3, 1), 0u);
}

TEST(Conv, SingleChannelIdentityKernelCopiesInput) {
  const auto g = geometry(1, 1, 1, 1, 1, 1, 3, 4);
  std::vector<Real> in = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::vector<Real> out(12, -1.0);
  const Real k = 1.0, bias = 0.5;
  const std::vector<std::size_t> valid = {2};
  kernels::serial::conv2d_forward(g, 1, in.data(), valid, &k, &bias, out.data());
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(out[i], in[i] + 0.5);
  for (std::size_t i = 8; i < 12; ++i) EXPECT_EQ(out[i], -1.0);  // beyond the valid rows
}

struct ConvCase {
  std::size_t cin, cout, kt, kf, st, sf, t, f;
};

class ConvShapes : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvShapes, ParallelMatchesSerialForwardAndBackward) {
  const ConvCase c = GetParam();
  const auto g = geometry(c.cin, c.cout, c.kt, c.kf, c.st, c.sf, c.t, c.f);
  const std::size_t batch = 3;
  std::mt19937_64 rng(c.t * 31 + c.f);
  const auto in = random_vector(batch * g.in_size(), rng);
  const auto kernel = random_vector(g.kernel_size(), rng);
  const auto bias = random_vector(c.cout, rng);
  const auto dout = random_vector(batch * g.out_size(), rng);
  const std::vector<std::size_t> valid = {g.out_t, g.out_t > 1 ? g.out_t - 1 : 1, 1};

  std::vector<Real> out_s(batch * g.out_size(), 0.0), out_p = out_s;
  kernels::serial::conv2d_forward(g, batch, in.data(), valid, kernel.data(), bias.data(),
                                  out_s.data());
  kernels::parallel::conv2d_forward(g, batch, in.data(), valid, kernel.data(), bias.data(),
                                    out_p.data());
  expect_close(out_p, out_s, 1e-12);

  std::vector<Real> dk_s(g.kernel_size(), 0.25), db_s(c.cout, 0.5), di_s(batch * g.in_size(), 1.0);
  auto dk_p = dk_s, db_p = db_s, di_p = di_s;
  kernels::serial::conv2d_backward(g, batch, in.data(), valid, kernel.data(), dout.data(),
                                   dk_s.data(), db_s.data(), di_s.data());
  kernels::parallel::conv2d_backward(g, batch, in.data(), valid, kernel.data(), dout.data(),
                                     dk_p.data(), db_p.data(), di_p.data());
  expect_close(dk_p, dk_s, 1e-12);
  expect_close(db_p, db_s, 1e-12);
  expect_close(di_p, di_s, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Geometries, ConvShapes,
                         ::testing::Values(ConvCase{1, 2, 3, 3, 1, 1, 7, 9},
                                           ConvCase{2, 3, 3, 3, 2, 2, 11, 9},
                                           ConvCase{1, 16, 5, 5, 1, 2, 24, 257},
                                           ConvCase{16, 8, 3, 3, 2, 2, 20, 127},
                                           ConvCase{3, 1, 1, 4, 1, 3, 5, 13}));

// Backward is the adjoint of forward: <conv(x), y> = <x, conv^T(y)> without bias.
TEST(Conv, BackwardIsAdjointOfForward) {
  const auto g = geometry(2, 3, 3, 2, 2, 1, 9, 6);
  std::mt19937_64 rng(5);
  const auto x = random_vector(g.in_size(), rng);
  const auto y = random_vector(g.out_size(), rng);
  const auto kernel = random_vector(g.kernel_size(), rng);
  const std::vector<Real> bias(3, 0.0);
  const std::vector<std::size_t> valid = {g.out_t};
  std::vector<Real> out(g.out_size(), 0.0), dk(g.kernel_size(), 0.0), db(3, 0.0),
      dx(g.in_size(), 0.0);
  kernels::serial::conv2d_forward(g, 1, x.data(), valid, kernel.data(), bias.data(), out.data());
  kernels::serial::conv2d_backward(g, 1, x.data(), valid, kernel.data(), y.data(), dk.data(),
                                   db.data(), dx.data());
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) lhs += out[i] * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * dx[i];
  EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
}

TEST(Kernels, ReportsAtLeastOneThread) { EXPECT_GE(kernels::max_threads(), 1); }

}  // namespace
}  // namespace emorec
