// include/emorec/config.h

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

#ifndef EMOREC_CONFIG_H_
#define EMOREC_CONFIG_H_

// Run configuration: an INI document with the sections
//   [paths] [spectrogram] [network] [optim] [group.<name>]... [augment]
//   [oversample] [train] [gradcheck]
// Every key is optional and defaults to the library defaults; unknown
// sections or keys are rejected. Relative paths resolve against the
// directory of the config file.

#include <cstdint>
#include <string>
#include <vector>

#include "emorec/dsp.h"
#include "emorec/net.h"
#include "emorec/optim.h"
#include "emorec/train.h"

namespace emorec {

struct GradcheckConfig {
  std::size_t hidden_size = 8;
  std::size_t batch = 3;
  std::size_t input_bins = 9;
  bool seq_batchnorm = true;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 7;

  void validate() const;
};

struct RunConfig {
  std::string manifest;   // empty when the subcommand does not need one
  std::string cache_dir;  // output of `prepare`; empty means compute features on the fly
  SpectrogramConfig spectrogram;
  int sample_rate = 16000;  // audio at any other rate is rejected
  NetworkConfig network = NetworkConfig::default_preset();
  OptimConfig optim;
  std::vector<LayerGroup> groups;  // user groups in file order, then the [optim] default
  TrainOptions train;
  GradcheckConfig gradcheck;

  // Cross-checks the sections against each other and each module's
  // invariants. Throws ConfigError.
  void validate() const;
};

RunConfig parse_run_config(const std::string &text, const std::string &base_dir = ".");
RunConfig load_run_config(const std::string &path);

// "16:5x5:1x2" is 16 output channels, a 5x5 (time x frequency) kernel and
// strides of 1 in time and 2 in frequency. Layers are comma separated.
std::vector<ConvLayerSpec> parse_conv_layers(const std::string &text);
std::string format_conv_layers(const std::vector<ConvLayerSpec> &layers);

}  // namespace emorec

#endif  // EMOREC_CONFIG_H_
