// include/emorec/vtlp.h

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

#ifndef EMOREC_VTLP_H_
#define EMOREC_VTLP_H_

// Vocal tract length perturbation: a piecewise-linear warp of the frequency
// axis that scales frequencies below f0 by alpha and linearly remaps
// [f0, f_max] so that f_max stays fixed.

#include <random>
#include <vector>

#include "emorec/dsp.h"

namespace emorec {

using Rng = std::mt19937_64;

struct WarpParams {
  double alpha = 1.0;
  double f0_ratio = 0.9;  // f0 / f_max
  double f_max = 4000.0;

  double f0() const { return f0_ratio * f_max; }
  void validate() const;
};

// G(f). Throws std::domain_error for f outside [0, f_max].
double warp_frequency(double f, const WarpParams &params);
// G^-1(y) for y in [0, f_max]. When alpha * f0 >= f_max the upper branch is
// never reached and the inverse is y / alpha throughout.
double unwarp_frequency(double y, const WarpParams &params);

// Resamples every frame along frequency: output bin at f takes the input
// value at G^-1(f), linearly interpolated between neighbouring bins and
// clamped to the edge bins. params.f_max must be the top bin frequency.
Spectrogram warp_spectrogram(const Spectrogram &spec, const WarpParams &params);
// Convenience overload taking f_max from the spectrogram itself.
Spectrogram warp_spectrogram(const Spectrogram &spec, double alpha, double f0_ratio = 0.9);

enum class AugmentMode {
  kNone,
  kPerEpochGlobal,  // one alpha per epoch for all training samples, none for validation
  kPerSample,       // fresh alpha per sample, training and validation
};

struct AugmentStrategy {
  AugmentMode mode = AugmentMode::kPerSample;
  double alpha_min = 0.9;
  double alpha_max = 1.1;

  void validate() const;
};

// Uniform draw from [alpha_min, alpha_max].
double sample_alpha(const AugmentStrategy &strategy, Rng &rng);

// Hands out alphas according to the strategy. Callers own the generator.
class AlphaSampler {
 public:
  explicit AlphaSampler(AugmentStrategy strategy) : strategy_(strategy) {}

  void begin_epoch(Rng &rng);
  // Alpha for the next training sample; 1.0 when augmentation is off.
  double training_alpha(Rng &rng);
  // Alpha for the next validation sample.
  double validation_alpha(Rng &rng);

  const AugmentStrategy &strategy() const { return strategy_; }

 private:
  AugmentStrategy strategy_;
  double epoch_alpha_ = 1.0;
};

// The eleven test-time factors 0.90, 0.92, ..., 1.10.
std::vector<double> tta_alphas();

}  // namespace emorec

#endif  // EMOREC_VTLP_H_
