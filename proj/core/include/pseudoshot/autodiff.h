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

#ifndef PSEUDOSHOT_AUTODIFF_H_
#define PSEUDOSHOT_AUTODIFF_H_

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pseudoshot/rng.h"
#include "pseudoshot/tensor.h"

namespace pseudoshot::nn {

// Reverse-mode autodiff on whole tensors. Each op records its inputs and a
// closure that pushes the output gradient back into them; Backward() replays
// the closures in reverse topological order.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Tensor& Grad();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  // Zero tensor when nothing has flowed back yet.
  Tensor grad() const;
  bool has_grad() const { return !node_->grad.empty(); }
  void ZeroGrad();
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one element.
void Backward(const Var& loss);

// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
bool GradEnabled();

// (N, Cin, H, W) * (Cout, Cin, k, k), stride 1, zero padding `pad`.
Var Conv2d(const Var& x, const Var& weight, int pad);
// Per-sample normalisation over (C, H, W) with per-channel scale and shift.
Var SampleNorm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var LeakyRelu(const Var& x, double slope);
Var Sigmoid(const Var& x);
Var Add(const Var& a, const Var& b);
// Elementwise product of equally shaped tensors.
Var Mul(const Var& a, const Var& b);
// 2x2 max pooling with stride 2 (odd trailing rows/cols dropped).
Var MaxPool2(const Var& x);
// x: (N, C, H, W), mask: (N, 1, H, W); the mask is broadcast across channels.
Var MulChannelBroadcast(const Var& x, const Var& mask);
Var ConcatChannels(const Var& a, const Var& b);
Var ConcatBatch(std::span<const Var> parts);
// Rows of x along the leading axis (repeats allowed).
Var GatherBatch(const Var& x, std::span<const int> rows);
// Mean of the rows with each segment id. Summation is over sorted addends, so
// the result does not depend on row order.
Var SegmentMean(const Var& x, std::span<const int> segment, int num_segments);
Var Reshape(const Var& x, Shape shape);
Var Flatten(const Var& x);  // (N, ...) -> (N, D)
Var GlobalAvgPool(const Var& x);  // (N, C, H, W) -> (N, C)
Var MatMul(const Var& a, const Var& b);  // (N, D) x (D, M)
Var MatMulTransposed(const Var& a, const Var& b);  // (N, D) x (M, D)^T
Var AddBias(const Var& x, const Var& bias);  // (N, M) + (M)
// Rows scaled to unit L2 norm. Throws ValueError on a zero row.
Var L2NormalizeRows(const Var& x);
// x * s where s holds a single element.
Var ScaleBy(const Var& x, const Var& s);
// Mean negative log-softmax of the labelled entries. Throws ValueError on an
// out-of-range label.
Var SoftmaxCrossEntropy(const Var& logits, std::span<const int> labels);
Var Sum(const Var& x);
Var Mean(const Var& x);
// Inverted dropout. Identity when rate == 0.
Var Dropout(const Var& x, double rate, Rng& rng);

// Row-wise softmax of a (N, M) tensor.
Tensor Softmax(const Tensor& logits);

}  // namespace pseudoshot::nn

#endif  // PSEUDOSHOT_AUTODIFF_H_
