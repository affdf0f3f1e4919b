// src/dsp.cc

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

#include "emorec/dsp.h"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <iterator>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

#include "emorec/binary_io.h"
#include "emorec/error.h"

namespace emorec {

namespace {

// FFTW planning is not thread-safe; execution with a private plan is.
std::mutex &fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n), in_(n, 0.0), out_(n / 2 + 1) {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.data(),
                                 reinterpret_cast<fftw_complex *>(out_.data()), FFTW_ESTIMATE);
    if (plan_ == nullptr) throw DataError("failed to plan FFT of size " + std::to_string(n));
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;

  std::vector<double> &input() { return in_; }
  const std::vector<std::complex<double>> &execute() {
    fftw_execute(plan_);
    return out_;
  }

 private:
  std::size_t n_;
  std::vector<double> in_;
  std::vector<std::complex<double>> out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace

std::size_t SpectrogramConfig::window_samples(int sample_rate) const {
  return static_cast<std::size_t>(std::lround(window_ms * sample_rate / 1000.0));
}

std::size_t SpectrogramConfig::shift_samples(int sample_rate) const {
  return static_cast<std::size_t>(std::lround(shift_ms * sample_rate / 1000.0));
}

std::size_t SpectrogramConfig::fft_size(int sample_rate) const {
  return std::bit_ceil(window_samples(sample_rate));
}

std::size_t SpectrogramConfig::n_freq_bins(int sample_rate) const {
  const double bin_hz = static_cast<double>(sample_rate) / fft_size(sample_rate);
  return static_cast<std::size_t>(std::floor(f_max / bin_hz + 1e-9)) + 1;
}

void SpectrogramConfig::validate(int sample_rate) const {
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
  if (!(window_ms > 0.0) || !(shift_ms > 0.0))
    throw ConfigError("window_ms and shift_ms must be positive");
  if (shift_ms > window_ms) throw ConfigError("shift_ms must not exceed window_ms");
  if (!(log_floor > 0.0)) throw ConfigError("log_floor must be positive");
  if (!(f_max > 0.0)) throw ConfigError("f_max must be positive");
  if (f_max > sample_rate / 2.0) {
    std::ostringstream os;
    os << "f_max " << f_max << " Hz exceeds the Nyquist frequency " << sample_rate / 2.0
       << " Hz";
    throw ConfigError(os.str());
  }
  if (window_samples(sample_rate) < 2 || shift_samples(sample_rate) < 1)
    throw ConfigError("window/shift shorter than one sample at this rate");
}

std::size_t frame_count(std::size_t num_samples, std::size_t window, std::size_t shift) {
  if (window == 0 || shift == 0) throw ConfigError("window and shift must be positive");
  if (num_samples < window) throw DataError("clip too short");
  return (num_samples - window) / shift + 1;
}

std::vector<double> hann_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  return w;
}

Spectrogram stft_log_magnitude(const AudioClip &clip, const SpectrogramConfig &config) {
  config.validate(clip.sample_rate);
  for (double s : clip.samples)
    if (!std::isfinite(s)) throw DataError("audio contains non-finite samples");

  const std::size_t window = config.window_samples(clip.sample_rate);
  const std::size_t shift = config.shift_samples(clip.sample_rate);
  const std::size_t nfft = config.fft_size(clip.sample_rate);

  Spectrogram spec;
  spec.config = config;
  spec.sample_rate = clip.sample_rate;
  spec.fft_size = nfft;
  spec.frames = frame_count(clip.samples.size(), window, shift);
  spec.bins = config.n_freq_bins(clip.sample_rate);
  spec.values.assign(spec.frames * spec.bins, 0.0);

  const std::vector<double> win = hann_window(window);
  RealFft fft(nfft);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    std::vector<double> &buf = fft.input();
    std::fill(buf.begin(), buf.end(), 0.0);
    const double *frame = clip.samples.data() + t * shift;
    for (std::size_t n = 0; n < window; ++n) buf[n] = frame[n] * win[n];
    const auto &spectrum = fft.execute();
    for (std::size_t k = 0; k < spec.bins; ++k)
      spec.at(t, k) = std::log(std::abs(spectrum[k]) + config.log_floor);
  }
  return spec;
}

AudioClip read_wav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open WAV file " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  auto fail = [&](const std::string &why) { throw DataError(path + ": " + why); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail("not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = binio::load_le<std::uint32_t>(bytes.data() + pos + 4);
    const unsigned char *body = bytes.data() + pos + 8;
    if (pos + 8 + size > bytes.size()) fail("truncated chunk");
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (size < 16) fail("malformed fmt chunk");
      format = binio::load_le<std::uint16_t>(body);
      channels = binio::load_le<std::uint16_t>(body + 2);
      rate = binio::load_le<std::uint32_t>(body + 4);
      bits = binio::load_le<std::uint16_t>(body + 14);
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      if (!have_fmt) fail("data chunk before fmt chunk");
      if (format != 1 || bits != 16) fail("only 16-bit PCM is supported");
      if (channels != 1) fail("only single-channel audio is supported");
      if (rate == 0) fail("zero sample rate");
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      clip.samples.resize(size / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = binio::load_le<std::int16_t>(body + 2 * i) / 32768.0;
      if (clip.samples.empty()) fail("no samples");
      return clip;
    }
    pos += 8 + size + (size & 1u);
  }
  fail("no data chunk");
  return {};
}

void write_wav(const std::string &path, const AudioClip &clip) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write WAV file " + path);
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  os.write("RIFF", 4);
  binio::write<std::uint32_t>(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  binio::write<std::uint32_t>(os, 16);
  binio::write<std::uint16_t>(os, 1);
  binio::write<std::uint16_t>(os, 1);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(clip.sample_rate));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  binio::write<std::uint16_t>(os, 2);
  binio::write<std::uint16_t>(os, 16);
  os.write("data", 4);
  binio::write<std::uint32_t>(os, data_bytes);
  for (double s : clip.samples) {
    const double scaled = std::round(s * 32768.0);
    binio::write<std::int16_t>(os, static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0)));
  }
  if (!os) throw DataError("failed writing " + path);
}

}  // namespace emorec
