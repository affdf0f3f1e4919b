// src/vtlp.cc

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

#include "emorec/vtlp.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "emorec/error.h"

namespace emorec {

void WarpParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("warp alpha must be positive");
  if (!(f0_ratio > 0.0 && f0_ratio < 1.0)) throw ConfigError("f0_ratio must lie in (0, 1)");
  if (!(f_max > 0.0)) throw ConfigError("f_max must be positive");
}

double warp_frequency(double f, const WarpParams &params) {
  if (!(f >= 0.0 && f <= params.f_max)) {
    std::ostringstream os;
    os << "frequency " << f << " Hz outside [0, " << params.f_max << "]";
    throw std::domain_error(os.str());
  }
  const double f0 = params.f0();
  if (f <= f0) return params.alpha * f;
  return (params.f_max - params.alpha * f0) / (params.f_max - f0) * (f - f0) + params.alpha * f0;
}

double unwarp_frequency(double y, const WarpParams &params) {
  const double f0 = params.f0();
  const double knee = params.alpha * f0;
  if (y <= knee || knee >= params.f_max) return y / params.alpha;
  return f0 + (y - knee) * (params.f_max - f0) / (params.f_max - knee);
}

Spectrogram warp_spectrogram(const Spectrogram &spec, const WarpParams &params) {
  params.validate();
  if (spec.bins == 0) return spec;
  const double top = spec.top_frequency();
  if (std::abs(params.f_max - top) > 1e-6 * std::max(1.0, top)) {
    std::ostringstream os;
    os << "warp f_max " << params.f_max << " Hz does not match top bin frequency " << top << " Hz";
    throw ConfigError(os.str());
  }
  const std::size_t nbins = spec.bins;
  std::vector<std::size_t> lower(nbins);
  std::vector<double> frac(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    const double src = unwarp_frequency(k * spec.bin_hz(), params) / spec.bin_hz();
    if (src <= 0.0) {
      lower[k] = 0;
      frac[k] = 0.0;
    } else if (src >= static_cast<double>(nbins - 1)) {
      lower[k] = nbins - 1;
      frac[k] = 0.0;
    } else {
      lower[k] = static_cast<std::size_t>(src);
      frac[k] = src - static_cast<double>(lower[k]);
    }
  }
  Spectrogram out = spec;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const Real *row = spec.values.data() + t * nbins;
    Real *dst = out.values.data() + t * nbins;
    for (std::size_t k = 0; k < nbins; ++k) {
      const std::size_t i = lower[k];
      dst[k] = frac[k] == 0.0 ? row[i] : (1.0 - frac[k]) * row[i] + frac[k] * row[i + 1];
    }
  }
  return out;
}

Spectrogram warp_spectrogram(const Spectrogram &spec, double alpha, double f0_ratio) {
  return warp_spectrogram(spec, WarpParams{alpha, f0_ratio, spec.top_frequency()});
}

void AugmentStrategy::validate() const {
  if (!(alpha_min > 0.0) || !(alpha_min <= alpha_max))
    throw ConfigError("augmentation alpha range must satisfy 0 < alpha_min <= alpha_max");
  if (alpha_min < 0.9 - 1e-12 || alpha_max > 1.1 + 1e-12)
    throw ConfigError("augmentation alpha range must lie within [0.9, 1.1]");
}

double sample_alpha(const AugmentStrategy &strategy, Rng &rng) {
  if (strategy.alpha_min == strategy.alpha_max) return strategy.alpha_min;
  std::uniform_real_distribution<double> dist(strategy.alpha_min, strategy.alpha_max);
  return dist(rng);
}

void AlphaSampler::begin_epoch(Rng &rng) {
  epoch_alpha_ = strategy_.mode == AugmentMode::kPerEpochGlobal ? sample_alpha(strategy_, rng) : 1.0;
}

double AlphaSampler::training_alpha(Rng &rng) {
  switch (strategy_.mode) {
    case AugmentMode::kNone: return 1.0;
    case AugmentMode::kPerEpochGlobal: return epoch_alpha_;
    case AugmentMode::kPerSample: return sample_alpha(strategy_, rng);
  }
  return 1.0;
}

double AlphaSampler::validation_alpha(Rng &rng) {
  return strategy_.mode == AugmentMode::kPerSample ? sample_alpha(strategy_, rng) : 1.0;
}

std::vector<double> tta_alphas() {
  std::vector<double> alphas;
  for (int i = 0; i <= 10; ++i) alphas.push_back((90 + 2 * i) / 100.0);
  return alphas;
}

}  // namespace emorec
