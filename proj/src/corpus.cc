// src/corpus.cc

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

#include "emorec/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "emorec/binary_io.h"
#include "emorec/error.h"

namespace emorec {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  for (char &c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_csv_row(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

const char *emotion_name(Emotion e) {
  switch (e) {
    case Emotion::kNeutral: return "neutral";
    case Emotion::kSadness: return "sadness";
    case Emotion::kAnger: return "anger";
    case Emotion::kHappiness: return "happiness";
  }
  return "?";
}

std::optional<Emotion> parse_emotion(std::string_view s) {
  static const std::map<std::string, Emotion> names = {
      {"neutral", Emotion::kNeutral},     {"neu", Emotion::kNeutral},
      {"sadness", Emotion::kSadness},     {"sad", Emotion::kSadness},
      {"anger", Emotion::kAnger},         {"angry", Emotion::kAnger},
      {"ang", Emotion::kAnger},           {"happiness", Emotion::kHappiness},
      {"happy", Emotion::kHappiness},     {"hap", Emotion::kHappiness}};
  auto it = names.find(lower(trim(s)));
  if (it == names.end()) return std::nullopt;
  return it->second;
}

char gender_code(Gender g) { return g == Gender::kFemale ? 'F' : 'M'; }

std::string Speaker::to_string() const {
  return "(session " + std::to_string(session) + ", " + gender_code(gender) + ")";
}

std::array<std::size_t, kNumEmotions> Manifest::class_counts() const {
  std::array<std::size_t, kNumEmotions> counts{};
  for (const auto &u : utterances) ++counts[index_of(u.label)];
  return counts;
}

Manifest parse_manifest(std::string_view text, const std::string &base_dir,
                        const std::string &provenance) {
  Manifest m;
  m.provenance = provenance;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_row(line);
    auto fail = [&](const std::string &why) {
      throw DataError("manifest line " + std::to_string(line_no) + ": " + why);
    };
    if (!header_seen) {
      header_seen = true;
      const std::vector<std::string> expected = {"id", "path", "label", "session", "gender"};
      std::vector<std::string> got;
      for (auto &f : fields) got.push_back(lower(f));
      if (got != expected) fail("expected header id,path,label,session,gender");
      continue;
    }
    if (fields.size() != 5) fail("expected 5 columns, found " + std::to_string(fields.size()));
    Utterance u;
    u.id = fields[0];
    if (u.id.empty()) fail("empty id");
    u.path = fields[1];
    if (!u.path.empty() && !base_dir.empty() && std::filesystem::path(u.path).is_relative())
      u.path = (std::filesystem::path(base_dir) / u.path).string();
    auto label = parse_emotion(fields[2]);
    if (!label) fail("unknown emotion '" + fields[2] + "'");
    u.label = *label;
    try {
      std::size_t used = 0;
      u.session = std::stoi(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception &) {
      fail("bad session '" + fields[3] + "'");
    }
    if (u.session < 1 || u.session > 5) fail("session " + fields[3] + " out of range [1, 5]");
    const std::string g = lower(fields[4]);
    if (g == "f" || g == "female") u.gender = Gender::kFemale;
    else if (g == "m" || g == "male") u.gender = Gender::kMale;
    else fail("bad gender '" + fields[4] + "'");
    if (!seen.insert(u.id).second) fail("duplicate id '" + u.id + "'");
    m.utterances.push_back(std::move(u));
  }
  if (!header_seen) throw DataError("manifest is empty");
  if (m.utterances.empty()) throw DataError("manifest has no utterances");
  return m;
}

Manifest load_manifest(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_manifest(ss.str(), std::filesystem::path(path).parent_path().string(), path);
}

void save_manifest(const std::string &path, const Manifest &manifest) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write manifest " + path);
  os << "id,path,label,session,gender\n";
  for (const auto &u : manifest.utterances)
    os << u.id << ',' << u.path << ',' << emotion_name(u.label) << ',' << u.session << ','
       << gender_code(u.gender) << '\n';
  if (!os) throw DataError("failed writing manifest " + path);
}

bool FoldSplit::in_train(const Utterance &u) const {
  return std::find(train_sessions.begin(), train_sessions.end(), u.session) !=
         train_sessions.end();
}

FoldSplit fold_split(int fold_id) {
  if (fold_id < 1 || fold_id > kNumFolds)
    throw ConfigError("fold " + std::to_string(fold_id) + " outside [1, 10]");
  FoldSplit f;
  f.fold_id = fold_id;
  const int session = (fold_id + 1) / 2;
  f.test = {session, fold_id % 2 == 1 ? Gender::kFemale : Gender::kMale};
  f.val = {session, opposite(f.test.gender)};
  for (int s = 1; s <= 5; ++s)
    if (s != session) f.train_sessions.push_back(s);
  return f;
}

std::vector<FoldSplit> make_folds(const Manifest &manifest) {
  std::set<Speaker> present;
  for (const auto &u : manifest.utterances) present.insert(u.speaker());
  std::vector<std::string> missing;
  for (int s = 1; s <= 5; ++s)
    for (Gender g : {Gender::kFemale, Gender::kMale})
      if (!present.count({s, g})) missing.push_back(Speaker{s, g}.to_string());
  if (!missing.empty()) {
    std::string msg = "manifest lacks speakers:";
    for (const auto &m : missing) msg += " " + m;
    throw DataError(msg);
  }
  std::vector<FoldSplit> folds;
  for (int k = 1; k <= kNumFolds; ++k) folds.push_back(fold_split(k));
  return folds;
}

FoldPartition partition(const Manifest &manifest, const FoldSplit &fold) {
  FoldPartition p;
  for (std::size_t i = 0; i < manifest.utterances.size(); ++i) {
    const Utterance &u = manifest.utterances[i];
    if (u.speaker() == fold.test) p.test.push_back(i);
    else if (u.speaker() == fold.val) p.val.push_back(i);
    else if (fold.in_train(u)) p.train.push_back(i);
  }
  return p;
}

std::vector<Utterance> oversample(std::span<const Utterance> train,
                                  const std::set<Emotion> &classes, int factor) {
  if (factor < 1) throw ConfigError("oversampling factor must be >= 1");
  std::vector<Utterance> out(train.begin(), train.end());
  for (int copy = 1; copy < factor; ++copy)
    for (const auto &u : train)
      if (classes.count(u.label)) out.push_back(u);
  return out;
}

std::vector<std::size_t> oversample_indices(std::span<const std::size_t> indices,
                                            std::span<const Utterance> utterances,
                                            const std::set<Emotion> &classes, int factor) {
  if (factor < 1) throw ConfigError("oversampling factor must be >= 1");
  std::vector<std::size_t> out(indices.begin(), indices.end());
  for (int copy = 1; copy < factor; ++copy)
    for (std::size_t i : indices)
      if (classes.count(utterances[i].label)) out.push_back(i);
  return out;
}

DatasetStats compute_stats(std::span<const Spectrogram *const> train, double epsilon) {
  if (train.empty()) throw DataError("cannot compute statistics of an empty training set");
  std::size_t n = 0;
  double sum = 0.0;
  for (const Spectrogram *s : train) {
    for (Real v : s->values) sum += v;
    n += s->values.size();
  }
  if (n == 0) throw DataError("training spectrograms are empty");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const Spectrogram *s : train)
    for (Real v : s->values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n)), epsilon};
}

DatasetStats compute_stats(std::span<const Spectrogram> train, double epsilon) {
  std::vector<const Spectrogram *> ptrs;
  for (const auto &s : train) ptrs.push_back(&s);
  return compute_stats(std::span<const Spectrogram *const>(ptrs), epsilon);
}

void normalize_in_place(Spectrogram &spec, const DatasetStats &stats) {
  const double scale = 1.0 / std::sqrt(stats.std * stats.std + stats.epsilon);
  for (Real &v : spec.values) v = (v - stats.mean) * scale;
}

Spectrogram normalize(const Spectrogram &spec, const DatasetStats &stats) {
  Spectrogram out = spec;
  normalize_in_place(out, stats);
  return out;
}

PaddedBatch pad_batch(std::span<const Spectrogram> specs, std::span<const Emotion> labels,
                      std::size_t extra_frames) {
  if (specs.empty()) throw DataError("cannot pad an empty batch");
  if (labels.size() != specs.size()) throw DataError("label count does not match batch size");
  PaddedBatch batch;
  batch.batch = specs.size();
  batch.bins = specs[0].bins;
  for (const auto &s : specs) {
    if (s.bins != batch.bins)
      throw DataError("mixed frequency bin counts in batch (" + std::to_string(batch.bins) +
                      " vs " + std::to_string(s.bins) + ")");
    batch.max_frames = std::max(batch.max_frames, s.frames);
    batch.lengths.push_back(s.frames);
  }
  batch.max_frames += extra_frames;
  batch.labels.assign(labels.begin(), labels.end());
  batch.values.assign(batch.batch * batch.max_frames * batch.bins, 0.0);
  for (std::size_t b = 0; b < specs.size(); ++b)
    std::copy(specs[b].values.begin(), specs[b].values.end(),
              batch.values.begin() + static_cast<std::ptrdiff_t>(b * batch.max_frames * batch.bins));
  return batch;
}

void write_spectrogram(const std::string &path, const Spectrogram &spec) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write spectrogram " + path);
  os.write("EMSP", 4);
  binio::write<std::uint32_t>(os, kSpectrogramFormatVersion);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(spec.frames));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(spec.bins));
  binio::write<double>(os, spec.config.window_ms);
  binio::write<double>(os, spec.config.shift_ms);
  binio::write<double>(os, spec.config.f_max);
  binio::write<double>(os, spec.config.log_floor);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(spec.sample_rate));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(spec.fft_size));
  for (Real v : spec.values) binio::write<float>(os, static_cast<float>(v));
  if (!os) throw DataError("failed writing spectrogram " + path);
}

Spectrogram read_spectrogram(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open spectrogram " + path);
  binio::expect_magic(is, "EMSP", path);
  const auto version = binio::read<std::uint32_t>(is, path);
  if (version != kSpectrogramFormatVersion)
    throw DataError(path + ": unsupported EMSP version " + std::to_string(version));
  Spectrogram spec;
  spec.frames = binio::read<std::uint32_t>(is, path);
  spec.bins = binio::read<std::uint32_t>(is, path);
  spec.config.window_ms = binio::read<double>(is, path);
  spec.config.shift_ms = binio::read<double>(is, path);
  spec.config.f_max = binio::read<double>(is, path);
  spec.config.log_floor = binio::read<double>(is, path);
  spec.sample_rate = static_cast<int>(binio::read<std::uint32_t>(is, path));
  spec.fft_size = binio::read<std::uint32_t>(is, path);
  if (spec.frames == 0 || spec.bins == 0 || spec.fft_size == 0 || spec.sample_rate <= 0)
    throw DataError(path + ": invalid EMSP header");
  if (spec.frames * spec.bins > (std::size_t{1} << 31))
    throw DataError(path + ": implausible EMSP dimensions");
  spec.values.resize(spec.frames * spec.bins);
  for (Real &v : spec.values) {
    v = binio::read<float>(is, path);
    if (!std::isfinite(v)) throw DataError(path + ": non-finite value");
  }
  return spec;
}

}  // namespace emorec
