// Copyright 2026 The Pseudoshot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PSEUDOSHOT_TENSOR_H_
#define PSEUDOSHOT_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace pseudoshot {

using Shape = std::vector<int64_t>;

std::string ShapeToString(const Shape& shape);
int64_t ShapeSize(const Shape& shape);

// Dense row-major array of doubles. Value semantics; copies are deep.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor Filled(Shape shape, double v) { return Tensor(std::move(shape), v); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double* raw() { return data_.data(); }
  const double* raw() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Rank-3 and rank-4 element access (no bounds checks).
  double& at(int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>((c * shape_[1] + h) * shape_[2] + w)];
  }
  double at(int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>((c * shape_[1] + h) * shape_[2] + w)];
  }
  double& at(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  double at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }

  // Returns a tensor with the same data and a new shape of equal size.
  Tensor Reshaped(Shape shape) const;
  void Fill(double v);
  bool AllFinite() const;

  double Min() const;
  double Max() const;
  double Mean() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// A single (C*, W, H) feature map. Kept as an alias: every op that consumes
// feature maps validates rank itself.
using FeatureMap = Tensor;

// Stacks equally shaped tensors along a new leading axis.
Tensor Stack(std::span<const Tensor> items);
// Returns item `i` of a tensor along its leading axis.
Tensor Unstack(const Tensor& batch, int64_t i);

double MaxAbsDiff(const Tensor& a, const Tensor& b);

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_TENSOR_H_
