// src/kernels_parallel.cc

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

#include <algorithm>
#include <vector>

#include "emorec/kernels.h"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace emorec::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

constexpr std::size_t kColumnBlock = 256;

// Rows [i0, i1) of C (+)= A * B with explicit leading dimensions.
void nn_rows(std::size_t i0, std::size_t i1, std::size_t n, std::size_t k, const Real *a,
             std::size_t lda, const Real *b, std::size_t ldb, Real *c, std::size_t ldc,
             bool accumulate) {
  for (std::size_t j0 = 0; j0 < n; j0 += kColumnBlock) {
    const std::size_t j1 = std::min(n, j0 + kColumnBlock);
    for (std::size_t i = i0; i < i1; ++i) {
      Real *crow = c + i * ldc;
      if (!accumulate) std::fill(crow + j0, crow + j1, 0.0);
      const Real *arow = a + i * lda;
      for (std::size_t p = 0; p < k; ++p) {
        const Real av = arow[p];
        const Real *brow = b + p * ldb;
        for (std::size_t j = j0; j < j1; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

inline Real dot(const Real *x, const Real *y, std::size_t n) {
  Real s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t p = 0;
  for (; p + 4 <= n; p += 4) {
    s0 += x[p] * y[p];
    s1 += x[p + 1] * y[p + 1];
    s2 += x[p + 2] * y[p + 2];
    s3 += x[p + 3] * y[p + 3];
  }
  for (; p < n; ++p) s0 += x[p] * y[p];
  return (s0 + s1) + (s2 + s3);
}

// Rows [i0, i1) of C (+)= A * B^T.
void nt_rows(std::size_t i0, std::size_t i1, std::size_t n, std::size_t k, const Real *a,
             std::size_t lda, const Real *b, std::size_t ldb, Real *c, std::size_t ldc,
             bool accumulate) {
  for (std::size_t i = i0; i < i1; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Real s = dot(a + i * lda, b + j * ldb, k);
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + s : s;
    }
}

// Rows [i0, i1) of C (+)= A^T * B, A stored [k x m].
void tn_rows(std::size_t i0, std::size_t i1, std::size_t n, std::size_t k, const Real *a,
             std::size_t lda, const Real *b, std::size_t ldb, Real *c, std::size_t ldc,
             bool accumulate) {
  for (std::size_t i = i0; i < i1; ++i) {
    Real *crow = c + i * ldc;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = a[p * lda + i];
      const Real *brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// Copies receptive-field patches of the first `rows` output rows into a
// [patch_size x rows*out_f] matrix (one column per output position).
void im2col(const ConvGeometry &g, const Real *in, std::size_t rows, Real *col) {
  const std::size_t positions = rows * g.out_f;
  for (std::size_t ic = 0; ic < g.in_channels; ++ic)
    for (std::size_t dt = 0; dt < g.kernel_t; ++dt)
      for (std::size_t df = 0; df < g.kernel_f; ++df) {
        Real *dst = col + ((ic * g.kernel_t + dt) * g.kernel_f + df) * positions;
        for (std::size_t t = 0; t < rows; ++t) {
          const Real *src = in + (ic * g.in_t + t * g.stride_t + dt) * g.in_f + df;
          for (std::size_t f = 0; f < g.out_f; ++f) dst[t * g.out_f + f] = src[f * g.stride_f];
        }
      }
}

void col2im_add(const ConvGeometry &g, const Real *col, std::size_t rows, Real *in) {
  const std::size_t positions = rows * g.out_f;
  for (std::size_t ic = 0; ic < g.in_channels; ++ic)
    for (std::size_t dt = 0; dt < g.kernel_t; ++dt)
      for (std::size_t df = 0; df < g.kernel_f; ++df) {
        const Real *src = col + ((ic * g.kernel_t + dt) * g.kernel_f + df) * positions;
        for (std::size_t t = 0; t < rows; ++t) {
          Real *dst = in + (ic * g.in_t + t * g.stride_t + dt) * g.in_f + df;
          for (std::size_t f = 0; f < g.out_f; ++f) dst[f * g.stride_f] += src[t * g.out_f + f];
        }
      }
}

}  // namespace

namespace parallel {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    nn_rows(i, i + 1, n, k, a, k, b, n, c, n, accumulate);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    nt_rows(i, i + 1, n, k, a, k, b, k, c, n, accumulate);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    tn_rows(i, i + 1, n, k, a, m, b, n, c, n, accumulate);
}

void conv2d_forward(const ConvGeometry &g, std::size_t batch, const Real *input,
                    std::span<const std::size_t> valid_out_t, const Real *kernel,
                    const Real *bias, Real *output) {
  const auto samples = static_cast<std::ptrdiff_t>(batch);
  const std::size_t plane = g.out_t * g.out_f;
#pragma omp parallel
  {
    std::vector<Real> col;
#pragma omp for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < samples; ++b) {
      const std::size_t rows = valid_out_t[b];
      const std::size_t positions = rows * g.out_f;
      if (positions == 0) continue;
      col.resize(g.patch_size() * positions);
      im2col(g, input + b * g.in_size(), rows, col.data());
      Real *out = output + b * g.out_size();
      for (std::size_t oc = 0; oc < g.out_channels; ++oc)
        std::fill(out + oc * plane, out + oc * plane + positions, bias[oc]);
      nn_rows(0, g.out_channels, positions, g.patch_size(), kernel, g.patch_size(), col.data(),
              positions, out, plane, true);
    }
  }
}

void conv2d_backward(const ConvGeometry &g, std::size_t batch, const Real *input,
                     std::span<const std::size_t> valid_out_t, const Real *kernel,
                     const Real *d_output, Real *d_kernel, Real *d_bias, Real *d_input) {
  const auto samples = static_cast<std::ptrdiff_t>(batch);
  const std::size_t plane = g.out_t * g.out_f;
  const std::size_t ksize = g.kernel_size();
  // Per-sample partial sums, reduced in sample order afterwards.
  std::vector<Real> dk_part(batch * ksize, 0.0);
  std::vector<Real> db_part(batch * g.out_channels, 0.0);
#pragma omp parallel
  {
    std::vector<Real> col, dcol;
#pragma omp for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < samples; ++b) {
      const std::size_t rows = valid_out_t[b];
      const std::size_t positions = rows * g.out_f;
      if (positions == 0) continue;
      col.resize(g.patch_size() * positions);
      dcol.resize(g.patch_size() * positions);
      im2col(g, input + b * g.in_size(), rows, col.data());
      const Real *dout = d_output + b * g.out_size();
      nt_rows(0, g.out_channels, g.patch_size(), positions, dout, plane, col.data(), positions,
              dk_part.data() + b * ksize, g.patch_size(), false);
      for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
        Real s = 0.0;
        for (std::size_t p = 0; p < positions; ++p) s += dout[oc * plane + p];
        db_part[b * g.out_channels + oc] = s;
      }
      tn_rows(0, g.patch_size(), positions, g.out_channels, kernel, g.patch_size(), dout, plane,
              dcol.data(), positions, false);
      col2im_add(g, dcol.data(), rows, d_input + b * g.in_size());
    }
  }
  for (std::size_t b = 0; b < batch; ++b) {
    const Real *dk = dk_part.data() + b * ksize;
    for (std::size_t i = 0; i < ksize; ++i) d_kernel[i] += dk[i];
    for (std::size_t oc = 0; oc < g.out_channels; ++oc)
      d_bias[oc] += db_part[b * g.out_channels + oc];
  }
}

}  // namespace parallel
}  // namespace emorec::kernels
