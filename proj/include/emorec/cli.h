// include/emorec/cli.h

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

#ifndef EMOREC_CLI_H_
#define EMOREC_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "emorec/config.h"
#include "emorec/corpus.h"
#include "emorec/dsp.h"

namespace emorec {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;  // invalid arguments or configuration
inline constexpr int kExitData = 2;    // unreadable inputs, failed checks, runtime errors

// Entry point of the `emorec` binary. Subcommands: gen-corpus, prepare,
// train, cv, gradcheck, augment. Output goes to `out` and diagnostics to `err`.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);
int run_cli(int argc, char **argv);

// Spectrograms for every manifest row, read from the prepared cache when
// `config.cache_dir` is set and computed from audio otherwise.
std::vector<Spectrogram> load_features(const RunConfig &config, const Manifest &manifest);

// Path of the cached container for one utterance.
std::string cache_path(const std::string &cache_dir, const std::string &utterance_id);

}  // namespace emorec

#endif  // EMOREC_CLI_H_
