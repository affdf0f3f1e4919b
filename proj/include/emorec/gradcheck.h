// include/emorec/gradcheck.h

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

#ifndef EMOREC_GRADCHECK_H_
#define EMOREC_GRADCHECK_H_

#include <string>
#include <vector>

#include "emorec/config.h"
#include "emorec/net.h"

namespace emorec {

// Negative controls for the checker itself.
enum class GradcheckFault {
  kNone,
  kScaleRecurrent,  // analytic dL/dW_h of the first layer scaled by 1.01
  kDropBias,        // analytic dense bias gradient zeroed
};

struct TensorCheck {
  std::string name;
  std::size_t elements = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradcheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  bool passed() const { return max_rel_error <= tolerance; }
};

// |a - n| / max(|a|, |n|, 1e-6)
double relative_error(double analytic, double numeric);

// The miniature network: two conv layers, `hidden_size` Bi-LSTM units and
// the configured normalisation, over `input_bins` frequency bins.
NetworkConfig gradcheck_network(const GradcheckConfig &config);

// Compares backward() with central differences of the mean cross-entropy,
// element by element, on a random batch of mixed lengths. `max_per_tensor`
// limits the checked elements of each tensor to an evenly spaced subset
// (0 checks everything).
GradcheckReport run_gradcheck(const NetworkConfig &network, const GradcheckConfig &config,
                              GradcheckFault fault = GradcheckFault::kNone,
                              std::size_t max_per_tensor = 0);
// Same check on gradcheck_network(config).
GradcheckReport run_gradcheck(const GradcheckConfig &config,
                              GradcheckFault fault = GradcheckFault::kNone);

}  // namespace emorec

#endif  // EMOREC_GRADCHECK_H_
