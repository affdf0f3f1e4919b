// include/emorec/synth.h

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

#ifndef EMOREC_SYNTH_H_
#define EMOREC_SYNTH_H_

// Synthetic emotion corpus for desk-scale runs. Each utterance is a harmonic
// source shaped by two formant-like resonances: the lower one sits at a
// class-specific centre, and both are scaled by a per-speaker vocal tract
// factor so that class identity is entangled with speaker identity in the
// same way VTLP models.

#include <cstdint>
#include <string>
#include <vector>

#include "emorec/corpus.h"
#include "emorec/dsp.h"

namespace emorec {

struct SynthOptions {
  std::uint64_t seed = 1;
  int n_per_class = 4;
  int n_sessions = 5;
  // Class counts follow the skewed neutral > sadness > anger ~ happiness shape
  // of acted emotion corpora; n_per_class is then the neutral count.
  bool imbalanced = false;
  int sample_rate = 16000;
  std::size_t min_frames = 24;  // at the default 64 ms / 32 ms framing
  std::size_t max_frames = 40;
  // Lower resonance of class c sits at base_formant + c * class_spacing Hz
  // before the speaker's tract factor, drawn from 1 +/- tract_spread.
  double base_formant = 800.0;
  double class_spacing = 150.0;
  double tract_spread = 0.15;
  double formant_jitter = 0.03;  // relative, per utterance
  double noise_level = 0.01;
};

struct SynthCorpus {
  Manifest manifest;
  std::vector<AudioClip> clips;  // parallel to manifest.utterances
};

std::vector<int> synth_class_counts(const SynthOptions &options);

SynthCorpus synth_corpus(const SynthOptions &options);

// Writes <dir>/audio/<id>.wav and <dir>/manifest.csv (relative paths).
void write_corpus(const std::string &dir, const SynthCorpus &corpus);

}  // namespace emorec

#endif  // EMOREC_SYNTH_H_
