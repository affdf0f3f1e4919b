// src/checkpoint.cc

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

#include <cmath>
#include <fstream>
#include <set>

#include "emorec/binary_io.h"
#include "emorec/error.h"
#include "emorec/net.h"

namespace emorec {

namespace {

void write_config(std::ostream &os, const NetworkConfig &c) {
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(c.conv_layers.size()));
  for (const auto &l : c.conv_layers) {
    binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(l.out_channels));
    binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(l.kernel_t));
    binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(l.kernel_f));
    binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(l.stride_t));
    binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(l.stride_f));
  }
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(c.bilstm_layers));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(c.hidden_size));
  binio::write<std::uint8_t>(os, c.use_seq_batchnorm ? 1 : 0);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(c.num_classes));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(c.input_bins));
  binio::write_string(os, activation_name(c.activation));
  binio::write<double>(os, c.leaky_slope);
  binio::write<double>(os, c.bn_epsilon);
  binio::write<double>(os, c.bn_momentum);
}

NetworkConfig read_config(std::istream &is, const std::string &path) {
  NetworkConfig c;
  const auto n_conv = binio::read<std::uint32_t>(is, path);
  if (n_conv < 1 || n_conv > 6) throw DataError(path + ": bad conv layer count");
  for (std::uint32_t i = 0; i < n_conv; ++i) {
    ConvLayerSpec l;
    l.out_channels = binio::read<std::uint32_t>(is, path);
    l.kernel_t = binio::read<std::uint32_t>(is, path);
    l.kernel_f = binio::read<std::uint32_t>(is, path);
    l.stride_t = binio::read<std::uint32_t>(is, path);
    l.stride_f = binio::read<std::uint32_t>(is, path);
    c.conv_layers.push_back(l);
  }
  c.bilstm_layers = binio::read<std::uint32_t>(is, path);
  c.hidden_size = binio::read<std::uint32_t>(is, path);
  c.use_seq_batchnorm = binio::read<std::uint8_t>(is, path) != 0;
  c.num_classes = binio::read<std::uint32_t>(is, path);
  c.input_bins = binio::read<std::uint32_t>(is, path);
  c.activation = parse_activation(binio::read_string(is, path, 64));
  c.leaky_slope = binio::read<double>(is, path);
  c.bn_epsilon = binio::read<double>(is, path);
  c.bn_momentum = binio::read<double>(is, path);
  try {
    c.validate();
  } catch (const ConfigError &e) {
    throw DataError(path + ": invalid network config: " + e.what());
  }
  return c;
}

void write_tensor(std::ostream &os, const std::string &name, const Tensor &t) {
  binio::write_string(os, name);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape) binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  for (Real v : t.data) binio::write<float>(os, static_cast<float>(v));
}

}  // namespace

void save_checkpoint(const std::string &path, const NetworkParams &params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint " + path);
  os.write("EMCK", 4);
  binio::write<std::uint32_t>(os, kCheckpointFormatVersion);
  write_config(os, params.config);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(params.weights.size() + params.buffers.size()));
  for (std::size_t i = 0; i < params.weights.size(); ++i)
    write_tensor(os, params.weights.name(i), params.weights.tensor(i));
  for (std::size_t i = 0; i < params.buffers.size(); ++i)
    write_tensor(os, params.buffers.name(i), params.buffers.tensor(i));
  if (!os) throw DataError("failed writing checkpoint " + path);
}

NetworkParams load_checkpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path);
  binio::expect_magic(is, "EMCK", path);
  const auto version = binio::read<std::uint32_t>(is, path);
  if (version != kCheckpointFormatVersion)
    throw DataError(path + ": unsupported EMCK version " + std::to_string(version));
  NetworkParams params = init_params(read_config(is, path), 0);
  const auto count = binio::read<std::uint32_t>(is, path);
  if (count != params.weights.size() + params.buffers.size())
    throw DataError(path + ": tensor count does not match the network config");
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = binio::read_string(is, path, 4096);
    if (!seen.insert(name).second) throw DataError(path + ": duplicate tensor " + name);
    Tensor *t = params.weights.contains(name)   ? &params.weights.at(name)
                : params.buffers.contains(name) ? &params.buffers.at(name)
                                                : nullptr;
    if (t == nullptr) throw DataError(path + ": unexpected tensor " + name);
    const auto rank = binio::read<std::uint32_t>(is, path);
    std::vector<std::size_t> dims;
    for (std::uint32_t r = 0; r < rank && r < 8; ++r) dims.push_back(binio::read<std::uint32_t>(is, path));
    if (dims != t->shape)
      throw DataError(path + ": tensor " + name + " has shape " + shape_string(dims) + ", expected " +
                      shape_string(t->shape));
    for (Real &v : t->data) {
      v = binio::read<float>(is, path);
      if (!std::isfinite(v)) throw DataError(path + ": non-finite value in " + name);
    }
  }
  return params;
}

}  // namespace emorec
