// src/kernels_serial.cc

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

#include "emorec/kernels.h"

namespace emorec::kernels::serial {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Real s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Real s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
      c[i * n + j] = s;
    }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real *a, const Real *b,
             Real *c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Real s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[p * m + i] * b[p * n + j];
      c[i * n + j] = s;
    }
}

void conv2d_forward(const ConvGeometry &g, std::size_t batch, const Real *input,
                    std::span<const std::size_t> valid_out_t, const Real *kernel,
                    const Real *bias, Real *output) {
  for (std::size_t b = 0; b < batch; ++b) {
    const Real *in = input + b * g.in_size();
    Real *out = output + b * g.out_size();
    for (std::size_t oc = 0; oc < g.out_channels; ++oc)
      for (std::size_t t = 0; t < valid_out_t[b]; ++t)
        for (std::size_t f = 0; f < g.out_f; ++f) {
          Real s = bias[oc];
          for (std::size_t ic = 0; ic < g.in_channels; ++ic)
            for (std::size_t dt = 0; dt < g.kernel_t; ++dt)
              for (std::size_t df = 0; df < g.kernel_f; ++df) {
                std::size_t ti = t * g.stride_t + dt, fi = f * g.stride_f + df;
                s += kernel[((oc * g.in_channels + ic) * g.kernel_t + dt) * g.kernel_f + df] *
                     in[(ic * g.in_t + ti) * g.in_f + fi];
              }
          out[(oc * g.out_t + t) * g.out_f + f] = s;
        }
  }
}

void conv2d_backward(const ConvGeometry &g, std::size_t batch, const Real *input,
                     std::span<const std::size_t> valid_out_t, const Real *kernel,
                     const Real *d_output, Real *d_kernel, Real *d_bias, Real *d_input) {
  for (std::size_t b = 0; b < batch; ++b) {
    const Real *in = input + b * g.in_size();
    const Real *dout = d_output + b * g.out_size();
    Real *din = d_input + b * g.in_size();
    for (std::size_t oc = 0; oc < g.out_channels; ++oc)
      for (std::size_t t = 0; t < valid_out_t[b]; ++t)
        for (std::size_t f = 0; f < g.out_f; ++f) {
          Real d = dout[(oc * g.out_t + t) * g.out_f + f];
          d_bias[oc] += d;
          for (std::size_t ic = 0; ic < g.in_channels; ++ic)
            for (std::size_t dt = 0; dt < g.kernel_t; ++dt)
              for (std::size_t df = 0; df < g.kernel_f; ++df) {
                std::size_t ki = ((oc * g.in_channels + ic) * g.kernel_t + dt) * g.kernel_f + df;
                std::size_t xi = (ic * g.in_t + t * g.stride_t + dt) * g.in_f + f * g.stride_f + df;
                d_kernel[ki] += d * in[xi];
                din[xi] += d * kernel[ki];
              }
        }
  }
}

}  // namespace emorec::kernels::serial
