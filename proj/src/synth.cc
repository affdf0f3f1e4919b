// src/synth.cc

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

#include "emorec/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "emorec/error.h"
#include "emorec/vtlp.h"

namespace emorec {

namespace {

constexpr double kUpperFormant = 2400.0;
constexpr double kImbalance[kNumEmotions] = {1.0, 0.55, 0.27, 0.26};

struct SpeakerVoice {
  Speaker speaker;
  double tract = 1.0;  // multiplicative frequency offset
  double pitch = 150.0;
};

AudioClip render(const SpeakerVoice &voice, Emotion label, std::size_t frames,
                 const SynthOptions &options, Rng &rng) {
  SpectrogramConfig framing;
  const std::size_t window = framing.window_samples(options.sample_rate);
  const std::size_t shift = framing.shift_samples(options.sample_rate);
  const std::size_t n = (frames - 1) * shift + window;
  const double sr = options.sample_rate;
  const double nyquist_guard = std::min(3900.0, 0.45 * sr);

  std::normal_distribution<double> jitter(0.0, options.formant_jitter);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double f1 = (options.base_formant + options.class_spacing * index_of(label)) * voice.tract * (1.0 + jitter(rng));
  const double f2 = kUpperFormant * voice.tract * (1.0 + jitter(rng));
  const double pitch = voice.pitch * (1.0 + jitter(rng));
  const double vibrato_rate = 3.0 + 3.0 * unit(rng);
  const double vibrato_phase = 2.0 * std::numbers::pi * unit(rng);
  const double loudness = 0.25 + 0.1 * unit(rng);

  const int harmonics = static_cast<int>(nyquist_guard / (pitch * 1.06));
  std::vector<double> phase(harmonics + 1);
  for (auto &p : phase) p = 2.0 * std::numbers::pi * unit(rng);
  std::normal_distribution<double> noise(0.0, options.noise_level);

  AudioClip clip;
  clip.sample_rate = options.sample_rate;
  clip.samples.resize(n);
  double norm = 0.0;
  for (int h = 1; h <= harmonics; ++h) norm += 1.0;
  norm = 1.0 / std::sqrt(norm);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i / sr;
    const double f0 =
        pitch * (1.0 + 0.05 * std::sin(2.0 * std::numbers::pi * vibrato_rate * t + vibrato_phase));
    const double envelope = std::sin(std::numbers::pi * (i + 0.5) / n);
    double s = 0.0;
    for (int h = 1; h <= harmonics; ++h) {
      const double fh = h * f0;
      phase[h] += 2.0 * std::numbers::pi * fh / sr;
      const double d1 = (fh - f1) / 120.0, d2 = (fh - f2) / 200.0;
      const double amp = std::exp(-0.5 * d1 * d1) + 0.5 * std::exp(-0.5 * d2 * d2) + 0.02;
      s += amp * std::sin(phase[h]);
    }
    clip.samples[i] = std::clamp(loudness * envelope * norm * s * 2.0 + noise(rng), -0.99, 0.99);
  }
  return clip;
}

}  // namespace

std::vector<int> synth_class_counts(const SynthOptions &options) {
  std::vector<int> counts(kNumEmotions, options.n_per_class);
  if (options.imbalanced)
    for (std::size_t c = 0; c < kNumEmotions; ++c)
      counts[c] = std::max(1, static_cast<int>(std::lround(options.n_per_class * kImbalance[c])));
  return counts;
}

SynthCorpus synth_corpus(const SynthOptions &options) {
  if (options.n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
  if (options.n_sessions < 1 || options.n_sessions > 5)
    throw ConfigError("n_sessions must lie in [1, 5]");
  if (options.min_frames < 1 || options.min_frames > options.max_frames)
    throw ConfigError("synthetic frame range must satisfy 1 <= min <= max");
  if (options.sample_rate < 8000) throw ConfigError("synthetic sample rate must be >= 8000");
  if (!(options.tract_spread >= 0.0 && options.tract_spread < 0.5))
    throw ConfigError("tract_spread must lie in [0, 0.5)");
  if (!(options.base_formant > 0.0) || !(options.class_spacing > 0.0))
    throw ConfigError("synthetic formant placement must be positive");

  Rng rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SpeakerVoice> voices;
  for (int s = 1; s <= options.n_sessions; ++s)
    for (Gender g : {Gender::kFemale, Gender::kMale}) {
      SpeakerVoice v;
      v.speaker = {s, g};
      v.tract = 1.0 + options.tract_spread * (2.0 * unit(rng) - 1.0);
      v.pitch = (g == Gender::kFemale ? 210.0 : 120.0) * (0.9 + 0.2 * unit(rng));
      voices.push_back(v);
    }

  std::vector<Emotion> labels;
  const auto counts = synth_class_counts(options);
  for (std::size_t c = 0; c < kNumEmotions; ++c)
    labels.insert(labels.end(), counts[c], kAllEmotions[c]);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::uniform_int_distribution<std::size_t> frames_dist(options.min_frames, options.max_frames);
  SynthCorpus corpus;
  corpus.manifest.provenance = "synthetic corpus, seed " + std::to_string(options.seed);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const SpeakerVoice &voice = voices[i % voices.size()];
    char id[64];
    std::snprintf(id, sizeof(id), "s%d%c_%04zu", voice.speaker.session,
                  gender_code(voice.speaker.gender), i);
    Utterance u;
    u.id = id;
    u.path = std::string("audio/") + id + ".wav";
    u.label = labels[i];
    u.session = voice.speaker.session;
    u.gender = voice.speaker.gender;
    corpus.clips.push_back(render(voice, labels[i], frames_dist(rng), options, rng));
    corpus.manifest.utterances.push_back(std::move(u));
  }
  return corpus;
}

void write_corpus(const std::string &dir, const SynthCorpus &corpus) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "audio", ec);
  if (ec) throw DataError("cannot create " + dir + ": " + ec.message());
  for (std::size_t i = 0; i < corpus.clips.size(); ++i)
    write_wav((fs::path(dir) / corpus.manifest.utterances[i].path).string(), corpus.clips[i]);
  save_manifest((fs::path(dir) / "manifest.csv").string(), corpus.manifest);
}

}  // namespace emorec
