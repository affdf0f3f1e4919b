// include/emorec/eval.h

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

#ifndef EMOREC_EVAL_H_
#define EMOREC_EVAL_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "emorec/corpus.h"
#include "emorec/kernels.h"
#include "emorec/net.h"

namespace emorec {

// Rows are true classes, columns predictions.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumEmotions>, kNumEmotions> counts{};

  void add(Emotion truth, Emotion predicted) { ++counts[index_of(truth)][index_of(predicted)]; }
  void merge(const ConfusionMatrix &other);
  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t support(Emotion e) const;
};

ConfusionMatrix confusion_from_pairs(std::span<const Emotion> truth,
                                     std::span<const Emotion> predicted);

// trace / total. Throws DataError for an empty matrix.
double weighted_accuracy(const ConfusionMatrix &m);
// Mean recall over classes with nonzero support. Throws DataError if none.
double unweighted_accuracy(const ConfusionMatrix &m);

struct Metrics {
  double wa = 0.0;
  double ua = 0.0;
  ConfusionMatrix confusion;
};
Metrics score(const ConfusionMatrix &m);

struct TrainedModel {
  NetworkParams params;
  DatasetStats stats;
};

// Plurality vote over per-copy argmax predictions; ties go to the larger
// summed probability, then to the lower class index.
Emotion decide_vote(std::span<const std::array<double, kNumEmotions>> copy_probs);

// Eval-mode prediction on the eleven warped copies of a raw (unnormalised)
// spectrogram, combined with decide_vote.
Emotion tta_predict(const TrainedModel &model, const Spectrogram &raw,
                    kernels::Backend backend = kernels::Backend::kParallel);
// Eval-mode prediction on the spectrogram as is.
Emotion predict(const TrainedModel &model, const Spectrogram &raw,
                kernels::Backend backend = kernels::Backend::kParallel);

struct FoldResult {
  int fold_id = 1;
  Speaker test_speaker;
  Metrics metrics;
  int epochs_trained = 0;
  int best_epoch = 0;
};

struct AggregateReport {
  double mean_wa = 0.0;
  double mean_ua = 0.0;
  double best5_wa = 0.0;  // over the (up to) five folds with the highest UA
  double best5_ua = 0.0;
  std::vector<int> best5_folds;
  std::vector<FoldResult> folds;  // sorted by fold id
};

AggregateReport aggregate(std::span<const FoldResult> results);

// Half-up rounding at the given number of decimals. Values within 1e-9 of a
// tie are treated as the tie so that 61.65 (stored as 61.6499...) rounds up.
double round_half_up(double value, int decimals);

// "fold,session,gender,wa,ua,best_epoch" with WA/UA in percent.
void write_results_csv(std::ostream &os, std::span<const FoldResult> results);
std::vector<FoldResult> read_results_csv(const std::string &path);
std::vector<FoldResult> parse_results_csv(const std::string &text);

// Structured text: one "key: value" per line (mean_wa, mean_ua, best5_wa,
// best5_ua, best5_folds, folds), percentages rounded to one decimal.
void write_aggregate(std::ostream &os, const AggregateReport &report);

// 4x4 CSV with a header row of predicted labels and one row per true label.
void write_confusion_csv(std::ostream &os, const ConfusionMatrix &m);

}  // namespace emorec

#endif  // EMOREC_EVAL_H_
