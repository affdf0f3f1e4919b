// include/emorec/corpus.h

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

#ifndef EMOREC_CORPUS_H_
#define EMOREC_CORPUS_H_

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emorec/dsp.h"
#include "emorec/tensor.h"

namespace emorec {

enum class Emotion : int { kNeutral = 0, kSadness = 1, kAnger = 2, kHappiness = 3 };
inline constexpr std::size_t kNumEmotions = 4;
inline constexpr std::array<Emotion, kNumEmotions> kAllEmotions = {
    Emotion::kNeutral, Emotion::kSadness, Emotion::kAnger, Emotion::kHappiness};

const char *emotion_name(Emotion e);
// Accepts the full names and the usual three-letter tags, case-insensitive.
std::optional<Emotion> parse_emotion(std::string_view s);
inline int index_of(Emotion e) { return static_cast<int>(e); }

enum class Gender { kFemale, kMale };
char gender_code(Gender g);
inline Gender opposite(Gender g) { return g == Gender::kFemale ? Gender::kMale : Gender::kFemale; }

// A speaker is identified by its session and gender.
struct Speaker {
  int session = 1;
  Gender gender = Gender::kFemale;

  auto operator<=>(const Speaker &) const = default;
  std::string to_string() const;
};

struct Utterance {
  std::string id;
  std::string path;  // audio file, resolved relative to the manifest directory
  Emotion label = Emotion::kNeutral;
  int session = 1;
  Gender gender = Gender::kFemale;

  Speaker speaker() const { return {session, gender}; }
};

struct Manifest {
  std::vector<Utterance> utterances;
  std::string provenance;

  std::size_t size() const { return utterances.size(); }
  std::array<std::size_t, kNumEmotions> class_counts() const;
};

// CSV with header "id,path,label,session,gender". Relative paths are
// resolved against the manifest's directory.
Manifest load_manifest(const std::string &path);
Manifest parse_manifest(std::string_view text, const std::string &base_dir = "",
                        const std::string &provenance = "");
void save_manifest(const std::string &path, const Manifest &manifest);

// Speaker-disjoint partition: test and validation are the two speakers of one
// session, training is every other session.
struct FoldSplit {
  int fold_id = 1;
  Speaker test;
  Speaker val;
  std::vector<int> train_sessions;

  bool in_train(const Utterance &u) const;
};

inline constexpr int kNumFolds = 10;

// Fold k (1-based) tests session (k+1)/2, female for odd k and male for even.
FoldSplit fold_split(int fold_id);
// All ten folds in fold-number order. Throws DataError naming every absent speaker.
std::vector<FoldSplit> make_folds(const Manifest &manifest);

struct FoldPartition {
  std::vector<std::size_t> train, val, test;  // indices into the manifest
};
FoldPartition partition(const Manifest &manifest, const FoldSplit &fold);

// Appends (factor - 1) extra copies of every utterance whose label is in
// `classes`: originals first, then the copies in original order.
std::vector<Utterance> oversample(std::span<const Utterance> train,
                                  const std::set<Emotion> &classes, int factor);
// Same rule applied to indices.
std::vector<std::size_t> oversample_indices(std::span<const std::size_t> indices,
                                            std::span<const Utterance> utterances,
                                            const std::set<Emotion> &classes, int factor);

struct DatasetStats {
  double mean = 0.0;
  double std = 0.0;
  double epsilon = 1e-8;
};

// Scalar mean and (population) standard deviation over every pixel of every
// spectrogram. Spectrograms are unpadded, so padding never contributes.
DatasetStats compute_stats(std::span<const Spectrogram> train, double epsilon = 1e-8);
DatasetStats compute_stats(std::span<const Spectrogram *const> train, double epsilon = 1e-8);

// (x - mean) / sqrt(std^2 + epsilon), elementwise.
Spectrogram normalize(const Spectrogram &spec, const DatasetStats &stats);
void normalize_in_place(Spectrogram &spec, const DatasetStats &stats);

struct PaddedBatch {
  std::size_t batch = 0;
  std::size_t max_frames = 0;
  std::size_t bins = 0;
  std::vector<Real> values;          // [batch x max_frames x bins]
  std::vector<std::size_t> lengths;  // true frame counts
  std::vector<Emotion> labels;

  Real &at(std::size_t b, std::size_t t, std::size_t f) {
    return values[(b * max_frames + t) * bins + f];
  }
  Real at(std::size_t b, std::size_t t, std::size_t f) const {
    return values[(b * max_frames + t) * bins + f];
  }
};

// Zero-pads along time to the longest sample. `extra_frames` adds further
// all-zero frames (used to check mask neutrality).
PaddedBatch pad_batch(std::span<const Spectrogram> specs, std::span<const Emotion> labels,
                      std::size_t extra_frames = 0);

// Versioned binary container for cached spectrograms:
//   "EMSP" u32 version, u32 T, u32 F, f64 window_ms, f64 shift_ms, f64 f_max,
//   f64 log_floor, u32 sample_rate, u32 fft_size, then T*F f32 row-major.
// All little-endian.
inline constexpr std::uint32_t kSpectrogramFormatVersion = 1;
void write_spectrogram(const std::string &path, const Spectrogram &spec);
Spectrogram read_spectrogram(const std::string &path);

}  // namespace emorec

#endif  // EMOREC_CORPUS_H_
