// src/config.cc

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

#include "emorec/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "emorec/error.h"

namespace emorec {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Reads the keys of one section, rejecting any key not in `allowed`.
class Section {
 public:
  Section(std::string name, const pt::ptree &tree, std::set<std::string> allowed)
      : name_(std::move(name)) {
    for (const auto &[key, child] : tree) {
      if (!child.empty()) throw ConfigError("[" + name_ + "] " + key + ": nested keys are not supported");
      if (!allowed.count(key)) throw ConfigError("[" + name_ + "] unknown key '" + key + "'");
      values_[key] = trim(child.data());
    }
  }

  bool has(const std::string &key) const { return values_.count(key) > 0; }
  const std::string &raw(const std::string &key) const { return values_.at(key); }

  void get(const std::string &key, std::string &out) const {
    if (has(key)) out = raw(key);
  }
  void get(const std::string &key, double &out) const {
    if (!has(key)) return;
    try {
      std::size_t used = 0;
      const double v = std::stod(raw(key), &used);
      if (used != raw(key).size()) throw std::invalid_argument("trailing text");
      out = v;
    } catch (const std::exception &) {
      fail(key, "expected a number");
    }
  }
  template <typename Int>
    requires std::is_integral_v<Int>
  void get(const std::string &key, Int &out) const {
    if (!has(key)) return;
    const std::string &s = raw(key);
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(key, "expected a non-negative integer");
    out = v;
  }
  void get_bool(const std::string &key, bool &out) const {
    if (!has(key)) return;
    const std::string &s = raw(key);
    if (s == "true" || s == "1" || s == "yes" || s == "on")
      out = true;
    else if (s == "false" || s == "0" || s == "no" || s == "off")
      out = false;
    else
      fail(key, "expected true or false");
  }
  [[noreturn]] void fail(const std::string &key, const std::string &why) const {
    throw ConfigError("[" + name_ + "] " + key + " = '" + raw(key) + "': " + why);
  }

 private:
  std::string name_;
  std::map<std::string, std::string> values_;
};

std::size_t parse_count(const std::string &s, const std::string &what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError("bad " + what + " '" + s + "'");
  return v;
}

std::pair<std::size_t, std::size_t> parse_pair(const std::string &s, const std::string &what) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ConfigError("bad " + what + " '" + s + "', expected AxB");
  return {parse_count(s.substr(0, x), what), parse_count(s.substr(x + 1), what)};
}

AugmentMode parse_mode(const std::string &s) {
  if (s == "none") return AugmentMode::kNone;
  if (s == "per_epoch") return AugmentMode::kPerEpochGlobal;
  if (s == "per_sample") return AugmentMode::kPerSample;
  throw ConfigError("[augment] mode '" + s + "': expected none, per_epoch or per_sample");
}

kernels::Backend parse_backend(const std::string &s) {
  if (s == "parallel") return kernels::Backend::kParallel;
  if (s == "serial") return kernels::Backend::kSerial;
  throw ConfigError("[train] backend '" + s + "': expected parallel or serial");
}

std::string resolve(const std::string &base_dir, const std::string &p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

void read_optim(const Section &s, OptimConfig &c) {
  s.get("eta", c.eta);
  s.get("gamma", c.gamma);
  s.get("beta", c.beta);
  s.get("lambda", c.lambda);
}

}  // namespace

void GradcheckConfig::validate() const {
  if (hidden_size < 1) throw ConfigError("[gradcheck] hidden_size must be positive");
  if (batch < 1) throw ConfigError("[gradcheck] batch must be positive");
  if (input_bins < 4) throw ConfigError("[gradcheck] input_bins must be >= 4");
  if (!(step > 0.0 && step < 1e-2)) throw ConfigError("[gradcheck] step must lie in (0, 0.01)");
  if (!(tolerance > 0.0)) throw ConfigError("[gradcheck] tolerance must be positive");
}

void RunConfig::validate() const {
  if (sample_rate < 8000) throw ConfigError("[spectrogram] sample_rate must be >= 8000");
  spectrogram.validate(sample_rate);
  network.validate();
  optim.validate();
  for (const auto &g : groups) {
    if (g.patterns.empty()) throw ConfigError("optimizer group '" + g.name + "' has no patterns");
    g.config.validate();
  }
  train.validate();
  gradcheck.validate();
  const std::size_t bins = spectrogram.n_freq_bins(sample_rate);
  if (network.input_bins != bins)
    throw ConfigError("network input_bins " + std::to_string(network.input_bins) +
                      " does not match the spectrogram's " + std::to_string(bins) + " bins");
}

std::vector<ConvLayerSpec> parse_conv_layers(const std::string &text) {
  std::vector<ConvLayerSpec> out;
  for (const auto &item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 3)
      throw ConfigError("conv layer '" + item + "': expected CHANNELS:KTxKF:STxSF");
    ConvLayerSpec l;
    l.out_channels = parse_count(parts[0], "channel count");
    std::tie(l.kernel_t, l.kernel_f) = parse_pair(parts[1], "kernel");
    std::tie(l.stride_t, l.stride_f) = parse_pair(parts[2], "stride");
    if (l.out_channels == 0 || l.kernel_t == 0 || l.kernel_f == 0 || l.stride_t == 0 || l.stride_f == 0)
      throw ConfigError("conv layer '" + item + "': every field must be >= 1");
    out.push_back(l);
  }
  if (out.empty()) throw ConfigError("conv_layers is empty");
  return out;
}

std::string format_conv_layers(const std::vector<ConvLayerSpec> &layers) {
  std::string out;
  for (const auto &l : layers) {
    if (!out.empty()) out += ",";
    out += std::to_string(l.out_channels) + ":" + std::to_string(l.kernel_t) + "x" +
           std::to_string(l.kernel_f) + ":" + std::to_string(l.stride_t) + "x" +
           std::to_string(l.stride_f);
  }
  return out;
}

RunConfig parse_run_config(const std::string &text, const std::string &base_dir) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  RunConfig c;
  std::vector<std::pair<std::string, const pt::ptree *>> group_sections;
  for (const auto &[name, sub] : tree) {
    if (sub.empty() && !sub.data().empty())
      throw ConfigError("config key '" + name + "' is outside any section");
    if (name == "paths") {
      Section s(name, sub, {"manifest", "cache_dir"});
      s.get("manifest", c.manifest);
      s.get("cache_dir", c.cache_dir);
      c.manifest = resolve(base_dir, c.manifest);
      c.cache_dir = resolve(base_dir, c.cache_dir);
    } else if (name == "spectrogram") {
      Section s(name, sub, {"sample_rate", "window_ms", "shift_ms", "f_max", "log_floor"});
      s.get("sample_rate", c.sample_rate);
      s.get("window_ms", c.spectrogram.window_ms);
      s.get("shift_ms", c.spectrogram.shift_ms);
      s.get("f_max", c.spectrogram.f_max);
      s.get("log_floor", c.spectrogram.log_floor);
    } else if (name == "network") {
      Section s(name, sub,
                {"conv_layers", "bilstm_layers", "hidden_size", "seq_batchnorm", "activation",
                 "leaky_slope", "bn_epsilon", "bn_momentum"});
      if (s.has("conv_layers")) c.network.conv_layers = parse_conv_layers(s.raw("conv_layers"));
      s.get("bilstm_layers", c.network.bilstm_layers);
      s.get("hidden_size", c.network.hidden_size);
      s.get_bool("seq_batchnorm", c.network.use_seq_batchnorm);
      if (s.has("activation")) c.network.activation = parse_activation(s.raw("activation"));
      s.get("leaky_slope", c.network.leaky_slope);
      s.get("bn_epsilon", c.network.bn_epsilon);
      s.get("bn_momentum", c.network.bn_momentum);
    } else if (name == "optim") {
      read_optim(Section(name, sub, {"eta", "gamma", "beta", "lambda"}), c.optim);
    } else if (name.rfind("group.", 0) == 0 && name.size() > 6) {
      group_sections.emplace_back(name.substr(6), &sub);
    } else if (name == "augment") {
      Section s(name, sub, {"mode", "alpha_min", "alpha_max", "f0_ratio", "tta"});
      if (s.has("mode")) c.train.augment.mode = parse_mode(s.raw("mode"));
      s.get("alpha_min", c.train.augment.alpha_min);
      s.get("alpha_max", c.train.augment.alpha_max);
      s.get("f0_ratio", c.train.f0_ratio);
      s.get_bool("tta", c.train.tta);
    } else if (name == "oversample") {
      Section s(name, sub, {"classes", "factor"});
      if (s.has("classes")) {
        c.train.oversample_classes.clear();
        for (const auto &e : split(s.raw("classes"), ','))
        {
          const auto emotion = parse_emotion(e);
          if (!emotion) s.fail("classes", "unknown emotion '" + e + "'");
          c.train.oversample_classes.insert(*emotion);
        }
      }
      s.get("factor", c.train.oversample_factor);
    } else if (name == "train") {
      Section s(name, sub, {"seed", "batch_size", "max_epochs", "patience", "backend"});
      s.get("seed", c.train.seed);
      s.get("batch_size", c.train.batch_size);
      s.get("max_epochs", c.train.max_epochs);
      s.get("patience", c.train.patience);
      if (s.has("backend")) c.train.backend = parse_backend(s.raw("backend"));
    } else if (name == "gradcheck") {
      Section s(name, sub,
                {"hidden_size", "batch", "input_bins", "seq_batchnorm", "step", "tolerance", "seed"});
      s.get("hidden_size", c.gradcheck.hidden_size);
      s.get("batch", c.gradcheck.batch);
      s.get("input_bins", c.gradcheck.input_bins);
      s.get_bool("seq_batchnorm", c.gradcheck.seq_batchnorm);
      s.get("step", c.gradcheck.step);
      s.get("tolerance", c.gradcheck.tolerance);
      s.get("seed", c.gradcheck.seed);
    } else {
      throw ConfigError("unknown config section [" + name + "]");
    }
  }
  // Group overrides inherit from [optim] regardless of section order.
  for (const auto &[gname, sub] : group_sections) {
    Section s("group." + gname, *sub, {"patterns", "eta", "gamma", "beta", "lambda"});
    LayerGroup g;
    g.name = gname;
    g.config = c.optim;
    if (s.has("patterns")) g.patterns = split(s.raw("patterns"), ',');
    read_optim(s, g.config);
    c.groups.push_back(std::move(g));
  }
  c.groups.push_back(LayerGroup::catch_all(c.optim));
  c.network.input_bins = c.spectrogram.n_freq_bins(c.sample_rate);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_run_config(ss.str(), dir.empty() ? "." : dir.string());
}

}  // namespace emorec
