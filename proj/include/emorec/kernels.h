// include/emorec/kernels.h

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

#ifndef EMOREC_KERNELS_H_
#define EMOREC_KERNELS_H_

// Dense linear-algebra and convolution kernels.
//
// Two implementations share every signature: kernels::serial is the
// straightforward loop nest used as the reference in tests, kernels::parallel
// is the OpenMP version used for training. All matrices are row-major with
// natural leading dimensions. Parallel kernels partition work over disjoint
// outputs and reduce in a fixed order, so their results do not depend on the
// thread count.

#include <cstddef>
#include <span>

#include "emorec/tensor.h"

namespace emorec::kernels {

enum class Backend { kSerial, kParallel };

// Geometry of a 2-D "valid" convolution over a [channels x time x freq] map.
// in_t/out_t are the allocated (padded) time extents; per-sample valid
// lengths are passed separately.
struct ConvGeometry {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_t = 1, kernel_f = 1;
  std::size_t stride_t = 1, stride_f = 1;
  std::size_t in_t = 1, in_f = 1;
  std::size_t out_t = 1, out_f = 1;

  std::size_t in_size() const { return in_channels * in_t * in_f; }
  std::size_t out_size() const { return out_channels * out_t * out_f; }
  std::size_t patch_size() const { return in_channels * kernel_t * kernel_f; }
  std::size_t kernel_size() const { return out_channels * patch_size(); }
};

// Output extent of a valid convolution; 0 when the input is too short.
inline std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride) {
  return in < kernel ? 0 : (in - kernel) / stride + 1;
}

namespace serial {

// C[m x n] (+)= A[m x k] * B[k x n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate);
// C[m x n] (+)= A[m x k] * B[n x k]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate);
// C[m x n] (+)= A[k x m]^T * B[k x n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate);

// Batched convolution forward; input is [batch x in_size], output
// [batch x out_size]. Only rows t < valid_out_t[b] of each output map are
// written, everything else is left as is.
void conv2d_forward(const ConvGeometry &g, std::size_t batch, const Real *input,
                    std::span<const std::size_t> valid_out_t, const Real *kernel,
                    const Real *bias, Real *output);

// Batched convolution backward. Rows of d_output at t >= valid_out_t[b] are
// ignored; d_kernel, d_bias and d_input are accumulated into.
void conv2d_backward(const ConvGeometry &g, std::size_t batch, const Real *input,
                     std::span<const std::size_t> valid_out_t, const Real *kernel,
                     const Real *d_output, Real *d_kernel, Real *d_bias, Real *d_input);

}  // namespace serial

namespace parallel {

// Same contracts as the serial kernels.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate);
void conv2d_forward(const ConvGeometry &g, std::size_t batch, const Real *input,
                    std::span<const std::size_t> valid_out_t, const Real *kernel,
                    const Real *bias, Real *output);
void conv2d_backward(const ConvGeometry &g, std::size_t batch, const Real *input,
                     std::span<const std::size_t> valid_out_t, const Real *kernel,
                     const Real *d_output, Real *d_kernel, Real *d_bias, Real *d_input);

}  // namespace parallel

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace emorec::kernels

#endif  // EMOREC_KERNELS_H_
