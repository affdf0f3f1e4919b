// src/tensor.cc

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

#include "emorec/tensor.h"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace emorec {

Tensor::Tensor(std::vector<std::size_t> dims, Real fill)
    : shape(std::move(dims)), data(shape_size(shape), fill) {}

void Tensor::fill(Real v) { std::fill(data.begin(), data.end(), v); }

std::size_t shape_size(const std::vector<std::size_t> &dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t> &dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? " x " : "") << dims[i];
  os << ']';
  return os.str();
}

Tensor &TensorSet::add(std::string name, std::vector<std::size_t> dims, Real fill) {
  if (contains(name)) throw std::logic_error("duplicate tensor name " + name);
  names_.push_back(std::move(name));
  tensors_.emplace_back(std::move(dims), fill);
  return tensors_.back();
}

std::size_t TensorSet::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? names_.size()
                            : static_cast<std::size_t>(it - names_.begin());
}

bool TensorSet::contains(std::string_view name) const {
  return index_of(name) < names_.size();
}

Tensor &TensorSet::at(std::string_view name) {
  std::size_t i = index_of(name);
  if (i == names_.size()) throw std::out_of_range("no tensor named " + std::string(name));
  return tensors_[i];
}

const Tensor &TensorSet::at(std::string_view name) const {
  std::size_t i = index_of(name);
  if (i == names_.size()) throw std::out_of_range("no tensor named " + std::string(name));
  return tensors_[i];
}

TensorSet TensorSet::zeros_like() const {
  TensorSet out;
  for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], tensors_[i].shape);
  return out;
}

void TensorSet::set_zero() {
  for (auto &t : tensors_) t.fill(0.0);
}

}  // namespace emorec
