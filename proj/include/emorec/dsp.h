// include/emorec/dsp.h

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

#ifndef EMOREC_DSP_H_
#define EMOREC_DSP_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "emorec/tensor.h"

namespace emorec {

struct AudioClip {
  std::vector<double> samples;  // amplitude in [-1, 1]
  int sample_rate = 16000;
};

struct SpectrogramConfig {
  double window_ms = 64.0;
  double shift_ms = 32.0;
  double f_max = 4000.0;  // upper cut-off frequency, Hz
  double log_floor = 1e-6;

  // Window and shift in samples, rounded to the nearest integer.
  std::size_t window_samples(int sample_rate) const;
  std::size_t shift_samples(int sample_rate) const;
  // Window length rounded up to the next power of two.
  std::size_t fft_size(int sample_rate) const;
  // Number of FFT bins at or below f_max.
  std::size_t n_freq_bins(int sample_rate) const;

  // Throws ConfigError when the configuration cannot be used at this rate.
  void validate(int sample_rate) const;
};

// Log-magnitude spectrogram, [frames x bins] row-major. Bin k sits at
// k * sample_rate / fft_size Hz.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<Real> values;
  SpectrogramConfig config;
  int sample_rate = 16000;
  std::size_t fft_size = 1024;

  Real &at(std::size_t t, std::size_t f) { return values[t * bins + f]; }
  Real at(std::size_t t, std::size_t f) const { return values[t * bins + f]; }
  double bin_hz() const { return static_cast<double>(sample_rate) / fft_size; }
  // Frequency of the highest retained bin.
  double top_frequency() const { return (bins - 1) * bin_hz(); }
};

// floor((num_samples - window) / shift) + 1; throws DataError("clip too short")
// when the clip does not cover one window.
std::size_t frame_count(std::size_t num_samples, std::size_t window, std::size_t shift);

// Periodic Hann window of the given length.
std::vector<double> hann_window(std::size_t length);

// Hann-windowed magnitude STFT, truncated at f_max, compressed as
// ln(|X| + log_floor).
Spectrogram stft_log_magnitude(const AudioClip &clip, const SpectrogramConfig &config);

// Mono 16-bit signed PCM WAV. Samples are scaled by 1/32768 on read and
// clipped to the int16 range on write.
AudioClip read_wav(const std::string &path);
void write_wav(const std::string &path, const AudioClip &clip);

}  // namespace emorec

#endif  // EMOREC_DSP_H_
