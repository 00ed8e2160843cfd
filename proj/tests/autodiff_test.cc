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


#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.h"
#include "pseudoshot/autodiff.h"
#include "pseudoshot/error.h"

namespace pseudoshot::nn {
namespace {

constexpr double kTolerance = 1e-4;

Var Param(Shape shape, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = g(rng);
  return Var(std::move(t), true);
}

// Scalar loss sum(out * w) with a fixed random w, so every output entry
// gets a distinct upstream gradient.
Var Project(const Var& out, uint64_t seed = 99) {
  return Sum(Mul(out, Var(Param(out.shape(), seed).value())));
}

void ExpectGradientsMatch(const std::function<Var()>& f, const std::vector<Var>& params) {
  const oracle::GradCheck r = oracle::CheckGradients(f, params);
  EXPECT_GT(r.checked, 0);
  EXPECT_LT(r.max_rel_error, kTolerance);
}

TEST(Gradients, Conv2d) {
  Var x = Param({2, 3, 4, 4}, 1), w = Param({2, 3, 3, 3}, 2);
  ExpectGradientsMatch([&] { return Project(Conv2d(x, w, 1)); }, {x, w});
  Var w1 = Param({4, 3, 1, 1}, 3);
  ExpectGradientsMatch([&] { return Project(Conv2d(x, w1, 0)); }, {x, w1});
}

TEST(Gradients, SampleNorm) {
  Var x = Param({2, 3, 3, 3}, 4), g = Param({3}, 5), b = Param({3}, 6);
  ExpectGradientsMatch([&] { return Project(SampleNorm(x, g, b)); }, {x, g, b});
}

TEST(Gradients, Activations) {
  Var x = Param({2, 3, 3, 3}, 7);
  ExpectGradientsMatch([&] { return Project(LeakyRelu(x, 0.1)); }, {x});
  ExpectGradientsMatch([&] { return Project(Sigmoid(x)); }, {x});
}

TEST(Gradients, ElementwiseAndBroadcast) {
  Var a = Param({2, 3, 2, 2}, 8), b = Param({2, 3, 2, 2}, 9), m = Param({2, 1, 2, 2}, 10);
  ExpectGradientsMatch([&] { return Project(Add(a, b)); }, {a, b});
  ExpectGradientsMatch([&] { return Project(Mul(a, b)); }, {a, b});
  ExpectGradientsMatch([&] { return Project(MulChannelBroadcast(a, m)); }, {a, m});
  Var s = Param({1}, 11);
  ExpectGradientsMatch([&] { return Project(ScaleBy(a, s)); }, {a, s});
}

TEST(Gradients, Pooling) {
  Var x = Param({2, 2, 4, 5}, 12);
  ExpectGradientsMatch([&] { return Project(MaxPool2(x)); }, {x});
  ExpectGradientsMatch([&] { return Project(GlobalAvgPool(x)); }, {x});
}

TEST(Gradients, Reshaping) {
  Var a = Param({2, 2, 2, 2}, 13), b = Param({2, 3, 2, 2}, 14), c = Param({1, 2, 2, 2}, 15);
  ExpectGradientsMatch([&] { return Project(ConcatChannels(a, b)); }, {a, b});
  ExpectGradientsMatch(
      [&] {
        const std::vector<Var> parts{a, c};
        return Project(ConcatBatch(parts));
      },
      {a, c});
  const std::vector<int> rows{1, 0, 1};
  ExpectGradientsMatch([&] { return Project(GatherBatch(a, rows)); }, {a});
  const std::vector<int> seg{1, 0};
  ExpectGradientsMatch([&] { return Project(SegmentMean(a, seg, 2)); }, {a});
  const Var d = Param({4, 2, 2, 2}, 20);
  const std::vector<int> seg4{2, 0, 2, 1};
  ExpectGradientsMatch([&] { return Project(SegmentMean(d, seg4, 3)); }, {d});
  ExpectGradientsMatch([&] { return Project(Reshape(a, {4, 4})); }, {a});
  ExpectGradientsMatch([&] { return Project(Flatten(b)); }, {b});
}

TEST(Gradients, DenseOps) {
  Var x = Param({3, 4}, 16), w = Param({4, 2}, 17), wt = Param({5, 4}, 18), bias = Param({2}, 19);
  ExpectGradientsMatch([&] { return Project(MatMul(x, w)); }, {x, w});
  ExpectGradientsMatch([&] { return Project(MatMulTransposed(x, wt)); }, {x, wt});
  ExpectGradientsMatch([&] { return Project(AddBias(MatMul(x, w), bias)); }, {bias});
  ExpectGradientsMatch([&] { return Project(L2NormalizeRows(x)); }, {x});
  ExpectGradientsMatch([&] { return Mean(x); }, {x});
}

TEST(Gradients, Dropout) {
  Var x = Param({2, 8}, 20);
  ExpectGradientsMatch(
      [&] {
        Rng rng(3);
        return Project(Dropout(x, 0.3, rng));
      },
      {x});
}

TEST(CrossEntropy, UniformLogitsGiveLogOfClassCount) {
  const std::vector<int> labels{2};
  const Var loss = SoftmaxCrossEntropy(Var(Tensor({1, 5}, 0.3)), labels);
  EXPECT_NEAR(loss.value()[0], std::log(5.0), 1e-12);
  EXPECT_NEAR(loss.value()[0], 1.60944, 1e-5);
}

TEST(CrossEntropy, ConfidentCorrectLogitApproachesZero) {
  const std::vector<int> labels{0};
  const Var loss = SoftmaxCrossEntropy(Var(Tensor({1, 3}, std::vector<double>{1000.0, 0.0, 0.0})), labels);
  EXPECT_TRUE(std::isfinite(loss.value()[0]));
  EXPECT_LT(loss.value()[0], 1e-12);
}

TEST(CrossEntropy, GradientIsSoftmaxMinusOneHotOverBatch) {
  Var logits = Param({4, 3}, 21);
  const std::vector<int> labels{0, 2, 1, 2};
  Backward(SoftmaxCrossEntropy(logits, labels));
  const Tensor p = Softmax(logits.value());
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double expected = (p[i * 3 + j] - (labels[static_cast<size_t>(i)] == j ? 1.0 : 0.0)) / 4.0;
      EXPECT_NEAR(logits.grad()[i * 3 + j], expected, 1e-15);
    }
  }
  const oracle::GradCheck r = oracle::CheckGradients([&] { return SoftmaxCrossEntropy(logits, labels); }, {logits});
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(CrossEntropy, OutOfRangeLabelIsAValueError) {
  const std::vector<int> labels{3};
  EXPECT_THROW(SoftmaxCrossEntropy(Var(Tensor({1, 3}, 0.0)), labels), ValueError);
}

TEST(Autodiff, NoGradGuardRecordsNothing) {
  Var x = Param({2, 2}, 22);
  {
    NoGradGuard guard;
    EXPECT_FALSE(GradEnabled());
    const Var y = Sum(Mul(x, x));
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(GradEnabled());
}

TEST(Autodiff, GradientsAccumulateAcrossUses) {
  Var x(Tensor({1}, 3.0), true);
  Backward(Add(Mul(x, x), x));  // d/dx (x^2 + x) = 2x + 1
  EXPECT_DOUBLE_EQ(x.grad()[0], 7.0);
}

TEST(Autodiff, ShapeMismatchesThrow) {
  const Var a(Tensor({2, 3}, 1.0)), b(Tensor({3, 2}, 1.0));
  EXPECT_THROW(Add(a, b), ShapeError);
  EXPECT_THROW(MatMul(a, a), ShapeError);
  EXPECT_THROW(Conv2d(Var(Tensor({1, 2, 3, 3}, 1.0)), Var(Tensor({1, 3, 3, 3}, 1.0)), 1), ShapeError);
}

TEST(Autodiff, L2NormalizeRejectsZeroRows) { EXPECT_THROW(L2NormalizeRows(Var(Tensor({1, 3}, 0.0))), ValueError); }

TEST(Autodiff, SegmentMeanIsOrderIndependent) {
  const Var x = Param({5, 3}, 23);
  const std::vector<int> seg{0, 1, 0, 1, 0};
  const Tensor a = SegmentMean(x, seg, 2).value();
  const std::vector<int> perm{4, 2, 0, 3, 1};
  const std::vector<int> seg_perm{0, 0, 0, 1, 1};
  const Tensor b = SegmentMean(GatherBatch(x, perm), seg_perm, 2).value();
  EXPECT_TRUE(a == b);
}

}  // namespace
}  // namespace pseudoshot::nn
