// include/emorec/tensor.h

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

#ifndef EMOREC_TENSOR_H_
#define EMOREC_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emorec {

using Real = double;

// Dense row-major tensor of Real values.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<Real> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, Real fill = 0.0);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  std::span<Real> span() { return data; }
  std::span<const Real> span() const { return data; }

  void fill(Real v);
  bool same_shape(const Tensor &other) const { return shape == other.shape; }
};

std::size_t shape_size(const std::vector<std::size_t> &dims);
std::string shape_string(const std::vector<std::size_t> &dims);

// Ordered collection of named tensors. Insertion order is the canonical
// iteration order used by the optimizer, the gradient log and checkpoints.
class TensorSet {
 public:
  Tensor &add(std::string name, std::vector<std::size_t> dims, Real fill = 0.0);

  bool contains(std::string_view name) const;
  Tensor &at(std::string_view name);
  const Tensor &at(std::string_view name) const;

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::string &name(std::size_t i) const { return names_[i]; }
  Tensor &tensor(std::size_t i) { return tensors_[i]; }
  const Tensor &tensor(std::size_t i) const { return tensors_[i]; }
  const std::vector<std::string> &names() const { return names_; }

  // Same names and shapes, all values zero.
  TensorSet zeros_like() const;
  void set_zero();

 private:
  std::size_t index_of(std::string_view name) const;

  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

}  // namespace emorec

#endif  // EMOREC_TENSOR_H_
