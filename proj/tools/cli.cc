// tools/cli.cc

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

#include "emorec/cli.h"

#include <CLI11.hpp>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "emorec/error.h"
#include "emorec/eval.h"
#include "emorec/gradcheck.h"
#include "emorec/synth.h"
#include "emorec/train.h"
#include "emorec/vtlp.h"

namespace emorec {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void make_dir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  return os;
}

class Progress : public TrainingObserver {
 public:
  Progress(std::ostream *log, int fold) : log_(log), fold_(fold) {}
  void on_epoch(int epoch, double loss, double train_acc, double val_ua) override {
    if (!log_) return;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "fold %d epoch %d loss %.4f train_acc %.3f val_ua %.3f\n",
                  fold_, epoch, loss, train_acc, val_ua);
    *log_ << buf << std::flush;
  }

 private:
  std::ostream *log_;
  int fold_;
};

struct FoldArtifacts {
  FoldRun run;
  std::string grad_log;
};

FoldArtifacts train_one(const RunConfig &config, const Manifest &manifest,
                        const std::vector<Spectrogram> &specs, int fold_id, std::ostream *log) {
  FoldArtifacts a;
  std::ostringstream grads;
  GradLog grad_log(&grads);
  Progress progress(log, fold_id);
  a.run = run_fold(fold_split(fold_id), manifest, specs, config.network, config.groups,
                   config.train, &progress, &grad_log);
  a.grad_log = grads.str();
  return a;
}

void write_fold_outputs(const std::string &dir, const FoldArtifacts &a) {
  make_dir(dir);
  save_checkpoint((fs::path(dir) / "checkpoint.emck").string(), a.run.best_model.params);
  {
    auto os = open_out((fs::path(dir) / "metrics.csv").string());
    write_results_csv(os, std::span(&a.run.result, 1));
  }
  {
    auto os = open_out((fs::path(dir) / "gradnorms.csv").string());
    os << a.grad_log;
  }
  {
    auto os = open_out((fs::path(dir) / "confusion.csv").string());
    write_confusion_csv(os, a.run.result.metrics.confusion);
  }
  {
    auto os = open_out((fs::path(dir) / "stats.txt").string());
    os << "mean: " << format_double(a.run.best_model.stats.mean) << "\n"
       << "std: " << format_double(a.run.best_model.stats.std) << "\n";
  }
  {
    auto os = open_out((fs::path(dir) / "val_ua.csv").string());
    os << "epoch,val_ua\n";
    for (std::size_t e = 0; e < a.run.val_ua_history.size(); ++e)
      os << e + 1 << "," << format_double(a.run.val_ua_history[e]) << "\n";
  }
}

std::vector<int> parse_fold_list(const std::string &text) {
  std::vector<int> folds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw ConfigError("--folds: '" + item + "' is not a fold number");
    }
    if (k < 1 || k > kNumFolds) throw ConfigError("--folds: fold " + item + " is outside [1, 10]");
    if (std::find(folds.begin(), folds.end(), k) != folds.end())
      throw ConfigError("--folds: fold " + item + " is listed twice");
    folds.push_back(k);
  }
  if (folds.empty()) throw ConfigError("--folds is empty");
  std::sort(folds.begin(), folds.end());
  return folds;
}

// Shared training overrides for train and cv.
struct TrainFlags {
  std::string config_path, out_dir, manifest;
  std::uint64_t seed = 0;
  int max_epochs = 0;
  bool verbose = false;

  void add(CLI::App *cmd) {
    cmd->add_option("--config", config_path, "Run configuration (INI)")->required();
    cmd->add_option("--out", out_dir, "Output directory")->required();
    cmd->add_option("--manifest", manifest, "Override [paths] manifest");
    cmd->add_option("--seed", seed, "Override [train] seed");
    cmd->add_option("--max-epochs", max_epochs, "Override [train] max_epochs");
    cmd->add_flag("--verbose", verbose, "Print per-epoch progress to stderr");
  }

  RunConfig load() const {
    RunConfig c = load_run_config(config_path);
    if (!manifest.empty()) c.manifest = manifest;
    if (seed != 0) c.train.seed = seed;
    if (max_epochs != 0) c.train.max_epochs = max_epochs;
    c.validate();
    if (c.manifest.empty()) throw ConfigError("no manifest given ([paths] manifest or --manifest)");
    return c;
  }
};

int cmd_gen_corpus(const std::string &out_dir, const SynthOptions &options, std::ostream &out) {
  SynthCorpus corpus = synth_corpus(options);
  write_corpus(out_dir, corpus);
  const auto counts = corpus.manifest.class_counts();
  std::size_t total = 0;
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-10s %6zu\n", emotion_name(kAllEmotions[c]), counts[c]);
    out << buf;
    total += counts[c];
  }
  out << "total      " << total << "\n";
  return kExitOk;
}

int cmd_prepare(RunConfig config, const std::string &manifest_path, const std::string &out_dir,
                std::ostream &out) {
  if (!manifest_path.empty()) config.manifest = manifest_path;
  if (config.manifest.empty()) throw ConfigError("no manifest given ([paths] manifest or --manifest)");
  const Manifest manifest = load_manifest(config.manifest);
  config.cache_dir.clear();
  const std::vector<Spectrogram> specs = load_features(config, manifest);

  make_dir(out_dir);
  for (std::size_t i = 0; i < specs.size(); ++i)
    write_spectrogram(cache_path(out_dir, manifest.utterances[i].id), specs[i]);

  std::size_t sidecars = 0;
  for (int k = 1; k <= kNumFolds; ++k) {
    const FoldPartition part = partition(manifest, fold_split(k));
    if (part.train.empty()) continue;
    std::vector<const Spectrogram *> train;
    for (std::size_t i : part.train) train.push_back(&specs[i]);
    const DatasetStats stats = compute_stats(std::span<const Spectrogram *const>(train));
    auto os = open_out((fs::path(out_dir) / ("fold_" + std::to_string(k) + ".stats")).string());
    os << "fold: " << k << "\n"
       << "train_utterances: " << part.train.size() << "\n"
       << "mean: " << format_double(stats.mean) << "\n"
       << "std: " << format_double(stats.std) << "\n";
    ++sidecars;
  }
  out << "cached " << specs.size() << " spectrograms, " << sidecars << " fold stats\n";
  return kExitOk;
}

int cmd_train(const TrainFlags &flags, int fold_id, std::ostream &out, std::ostream &err) {
  if (fold_id < 1 || fold_id > kNumFolds) throw ConfigError("--fold must lie in [1, 10]");
  const RunConfig config = flags.load();
  const Manifest manifest = load_manifest(config.manifest);
  const std::vector<Spectrogram> specs = load_features(config, manifest);
  const FoldArtifacts a = train_one(config, manifest, specs, fold_id, flags.verbose ? &err : nullptr);
  write_fold_outputs(flags.out_dir, a);
  write_results_csv(out, std::span(&a.run.result, 1));
  return kExitOk;
}

int cmd_cv(const TrainFlags &flags, const std::string &folds_arg, const std::string &import_path,
           int jobs, std::ostream &out, std::ostream &err) {
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  std::vector<FoldResult> results;
  if (!import_path.empty()) {
    results = read_results_csv(import_path);
    if (results.empty()) throw DataError(import_path + " holds no fold rows");
  } else {
    const std::vector<int> folds =
        folds_arg.empty() ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10} : parse_fold_list(folds_arg);
    const RunConfig config = flags.load();
    const Manifest manifest = load_manifest(config.manifest);
    for (int k : folds) {
      const FoldPartition part = partition(manifest, fold_split(k));
      if (part.train.empty() || part.val.empty() || part.test.empty())
        throw DataError("fold " + std::to_string(k) + " lacks train, validation or test utterances");
    }
    const std::vector<Spectrogram> specs = load_features(config, manifest);

    std::vector<FoldArtifacts> artifacts(folds.size());
    std::vector<std::exception_ptr> errors(folds.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&]() {
      for (std::size_t j = next++; j < folds.size(); j = next++) {
        try {
          std::ostringstream log;
          artifacts[j] = train_one(config, manifest, specs, folds[j], flags.verbose ? &log : nullptr);
          std::lock_guard lock(log_mutex);
          err << log.str() << std::flush;
        } catch (...) {
          errors[j] = std::current_exception();
        }
      }
    };
    const int n_threads = std::min<int>(jobs, static_cast<int>(folds.size()));
    if (n_threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
      for (auto &t : pool) t.join();
    }
    for (auto &e : errors)
      if (e) std::rethrow_exception(e);
    for (std::size_t j = 0; j < folds.size(); ++j) {
      write_fold_outputs((fs::path(flags.out_dir) / ("fold_" + std::to_string(folds[j]))).string(),
                         artifacts[j]);
      results.push_back(artifacts[j].run.result);
    }
  }
  const AggregateReport report = aggregate(results);
  make_dir(flags.out_dir);
  {
    auto os = open_out((fs::path(flags.out_dir) / "results.csv").string());
    write_results_csv(os, report.folds);
  }
  {
    auto os = open_out((fs::path(flags.out_dir) / "aggregate.txt").string());
    write_aggregate(os, report);
  }
  write_results_csv(out, report.folds);
  write_aggregate(out, report);
  return kExitOk;
}

int cmd_gradcheck(const std::string &config_path, const std::string &precision,
                  const std::string &fault_name, std::ostream &out) {
  if (precision != "high") throw ConfigError("--precision: only 'high' (64-bit) is supported");
  GradcheckFault fault = GradcheckFault::kNone;
  if (fault_name == "scale_recurrent")
    fault = GradcheckFault::kScaleRecurrent;
  else if (fault_name == "drop_bias")
    fault = GradcheckFault::kDropBias;
  else if (!fault_name.empty())
    throw ConfigError("unknown fault '" + fault_name + "'");
  const GradcheckConfig gc = config_path.empty() ? GradcheckConfig{} : load_run_config(config_path).gradcheck;
  gc.validate();
  const GradcheckReport report = run_gradcheck(gc, fault);
  for (const auto &t : report.tensors) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-24s %6zu  max_rel_error %.3e\n", t.name.c_str(), t.elements,
                  t.max_rel_error);
    out << buf;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "max_rel_error %.3e tolerance %.1e time %.2fs %s\n",
                report.max_rel_error, report.tolerance, report.seconds,
                report.passed() ? "PASS" : "FAIL");
  out << buf;
  return report.passed() ? kExitOk : kExitData;
}

int cmd_augment(const std::string &in_path, double alpha, const std::string &out_path,
                double f0_ratio, bool strict, std::ostream &err) {
  const AugmentStrategy range;
  if (alpha < range.alpha_min || alpha > range.alpha_max) {
    if (strict) throw ConfigError("alpha " + format_double(alpha) + " is outside [0.9, 1.1]");
    err << "warning: alpha " << alpha << " is outside [0.9, 1.1]\n";
  }
  const Spectrogram spec = read_spectrogram(in_path);
  const Spectrogram warped = warp_spectrogram(spec, WarpParams{alpha, f0_ratio, spec.top_frequency()});
  write_spectrogram(out_path, warped);
  return kExitOk;
}

}  // namespace

std::string cache_path(const std::string &cache_dir, const std::string &utterance_id) {
  return (fs::path(cache_dir) / (utterance_id + ".emsp")).string();
}

std::vector<Spectrogram> load_features(const RunConfig &config, const Manifest &manifest) {
  std::vector<Spectrogram> specs(manifest.utterances.size());
  std::vector<std::string> failures(specs.size());
  const bool cached = !config.cache_dir.empty();
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Utterance &u = manifest.utterances[i];
    try {
      if (cached) {
        specs[i] = read_spectrogram(cache_path(config.cache_dir, u.id));
        const Spectrogram &s = specs[i];
        if (s.config.window_ms != config.spectrogram.window_ms ||
            s.config.shift_ms != config.spectrogram.shift_ms ||
            s.config.f_max != config.spectrogram.f_max || s.sample_rate != config.sample_rate)
          throw DataError("cached framing differs from the config; re-run prepare");
      } else {
        const AudioClip clip = read_wav(u.path);
        if (clip.sample_rate != config.sample_rate)
          throw DataError("sample rate " + std::to_string(clip.sample_rate) + " Hz, expected " +
                          std::to_string(config.sample_rate));
        specs[i] = stft_log_magnitude(clip, config.spectrogram);
      }
    } catch (const std::exception &e) {
      failures[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < specs.size(); ++i)
    if (!failures[i].empty())
      throw DataError("utterance " + manifest.utterances[i].id + ": " + failures[i]);
  return specs;
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Speech emotion recognition with a convolutional recurrent network and VTLP"};
  app.require_subcommand(1);

  auto *gen = app.add_subcommand("gen-corpus", "Write a seeded synthetic corpus (WAV + manifest)");
  std::string gen_out;
  SynthOptions synth;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", synth.seed, "Random seed");
  gen->add_option("--per-class", synth.n_per_class, "Utterances per class (neutral when imbalanced)")
      ->required();
  gen->add_flag("--imbalanced", synth.imbalanced, "Skew the class distribution");
  gen->add_option("--sessions", synth.n_sessions, "Number of sessions (two speakers each)");

  auto *prep = app.add_subcommand("prepare", "Cache spectrograms and per-fold statistics");
  std::string prep_manifest, prep_config, prep_out;
  prep->add_option("--manifest", prep_manifest, "Manifest CSV");
  prep->add_option("--config", prep_config, "Run configuration (INI)")->required();
  prep->add_option("--out", prep_out, "Cache directory")->required();

  auto *train = app.add_subcommand("train", "Train and evaluate one fold");
  TrainFlags train_flags;
  int fold_id = 0;
  train_flags.add(train);
  train->add_option("--fold", fold_id, "Fold number (1-10)")->required();

  auto *cv = app.add_subcommand("cv", "Cross-validate and aggregate");
  TrainFlags cv_flags;
  std::string folds_arg, import_path;
  int jobs = 1;
  cv->add_option("--config", cv_flags.config_path, "Run configuration (INI)");
  cv->add_option("--out", cv_flags.out_dir, "Output directory")->required();
  cv->add_option("--manifest", cv_flags.manifest, "Override [paths] manifest");
  cv->add_option("--seed", cv_flags.seed, "Override [train] seed");
  cv->add_option("--max-epochs", cv_flags.max_epochs, "Override [train] max_epochs");
  cv->add_flag("--verbose", cv_flags.verbose, "Print per-epoch progress to stderr");
  cv->add_option("--folds", folds_arg, "Comma-separated fold numbers (default: all ten)");
  cv->add_option("--import-results", import_path, "Aggregate an existing results CSV instead of training");
  cv->add_option("--jobs", jobs, "Folds trained concurrently");

  auto *gcheck = app.add_subcommand("gradcheck", "Finite-difference check of backpropagation");
  std::string gc_config, precision = "high", fault;
  gcheck->add_option("--config", gc_config, "Run configuration (INI); [gradcheck] is used");
  gcheck->add_option("--precision", precision, "Arithmetic precision (high = 64-bit)");
  gcheck->add_option("--fault", fault, "Corrupt the analytic gradient")->group("");

  auto *aug = app.add_subcommand("augment", "Warp a cached spectrogram with VTLP");
  std::string aug_in, aug_out;
  double alpha = 1.0, f0_ratio = 0.9;
  bool strict = false;
  aug->add_option("--in", aug_in, "Input EMSP container")->required();
  aug->add_option("--alpha", alpha, "Warp factor")->required();
  aug->add_option("--out", aug_out, "Output EMSP container")->required();
  aug->add_option("--f0-ratio", f0_ratio, "Warp boundary as a fraction of f_max");
  aug->add_flag("--strict", strict, "Reject alpha outside [0.9, 1.1]");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_corpus(gen_out, synth, out);
    if (*prep) return cmd_prepare(load_run_config(prep_config), prep_manifest, prep_out, out);
    if (*train) return cmd_train(train_flags, fold_id, out, err);
    if (*cv) {
      if (import_path.empty() && cv_flags.config_path.empty())
        throw ConfigError("cv needs --config unless --import-results is given");
      return cmd_cv(cv_flags, folds_arg, import_path, jobs, out, err);
    }
    if (*gcheck) return cmd_gradcheck(gc_config, precision, fault, out);
    if (*aug) return cmd_augment(aug_in, alpha, aug_out, f0_ratio, strict, err);
  } catch (const ConfigError &e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}

int run_cli(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace emorec
