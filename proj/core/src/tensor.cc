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

#include "pseudoshot/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pseudoshot/error.h"

namespace pseudoshot {

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

int64_t ShapeSize(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + ShapeToString(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(static_cast<size_t>(ShapeSize(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (ShapeSize(shape_) != static_cast<int64_t>(data_.size())) {
    throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                     " does not match shape " + ShapeToString(shape_));
  }
}

Tensor Tensor::Reshaped(Shape shape) const {
  if (ShapeSize(shape) != size()) {
    throw ShapeError("cannot reshape " + ShapeToString(shape_) + " to " + ShapeToString(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::Min() const {
  if (data_.empty()) throw ValueError("Min of empty tensor");
  return *std::min_element(data_.begin(), data_.end());
}

double Tensor::Max() const {
  if (data_.empty()) throw ValueError("Max of empty tensor");
  return *std::max_element(data_.begin(), data_.end());
}

double Tensor::Mean() const {
  if (data_.empty()) throw ValueError("Mean of empty tensor");
  double s = 0.0;
  for (double v : data_) s += v;
  return s / static_cast<double>(data_.size());
}

Tensor Stack(std::span<const Tensor> items) {
  if (items.empty()) throw ValueError("Stack of zero tensors");
  const Shape& inner = items.front().shape();
  Shape shape{static_cast<int64_t>(items.size())};
  shape.insert(shape.end(), inner.begin(), inner.end());
  std::vector<double> data;
  data.reserve(static_cast<size_t>(ShapeSize(shape)));
  for (const Tensor& t : items) {
    if (t.shape() != inner) {
      throw ShapeError("Stack: expected " + ShapeToString(inner) + ", got " +
                       ShapeToString(t.shape()));
    }
    data.insert(data.end(), t.vec().begin(), t.vec().end());
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor Unstack(const Tensor& batch, int64_t i) {
  if (batch.rank() < 1 || i < 0 || i >= batch.dim(0)) {
    throw ShapeError("Unstack index " + std::to_string(i) + " out of range for " +
                     ShapeToString(batch.shape()));
  }
  Shape inner(batch.shape().begin() + 1, batch.shape().end());
  const int64_t n = ShapeSize(inner);
  std::vector<double> data(batch.vec().begin() + i * n, batch.vec().begin() + (i + 1) * n);
  return Tensor(std::move(inner), std::move(data));
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("MaxAbsDiff shape mismatch " + ShapeToString(a.shape()) + " vs " +
                     ShapeToString(b.shape()));
  }
  double m = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace pseudoshot
