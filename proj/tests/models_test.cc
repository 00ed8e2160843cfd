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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.h"
#include "pseudoshot/error.h"
#include "pseudoshot/models.h"

namespace pseudoshot {
namespace {

FeatureMap RandomMap(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  FeatureMap t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

// Random values for every parameter, so zero-initialised blocks take part.
void Perturb(const nn::ParamList& params, Rng& rng, double scale = 0.3) {
  std::normal_distribution<double> g(0.0, scale);
  for (const nn::NamedParam& p : params) {
    nn::Var v = p.var;
    for (double& x : v.mutable_value().vec()) x += g(rng);
  }
}

std::vector<nn::Var> Vars(const nn::ParamList& params) {
  std::vector<nn::Var> out;
  for (const auto& p : params) out.push_back(p.var);
  return out;
}

std::vector<double> Flat(const FeatureMap& f) { return f.vec(); }

std::vector<double> Mean(const std::vector<std::vector<double>>& xs) {
  std::vector<double> m(xs.front().size(), 0.0);
  for (const auto& x : xs) {
    for (size_t i = 0; i < m.size(); ++i) m[i] += x[i];
  }
  for (double& v : m) v /= static_cast<double>(xs.size());
  return m;
}

const Shape kShape{4, 4, 4};

TEST(AggregateMean, SingleMapIsReturned) {
  Rng rng(1);
  const std::vector<FeatureMap> maps{RandomMap(kShape, rng)};
  EXPECT_TRUE(AggregateMean(maps) == maps[0]);
}

TEST(AggregateMean, ZerosAndOnesGiveHalves) {
  const std::vector<FeatureMap> maps{FeatureMap(kShape, 0.0), FeatureMap(kShape, 1.0)};
  EXPECT_TRUE(AggregateMean(maps) == FeatureMap(kShape, 0.5));
}

TEST(AggregateMean, BitwisePermutationInvariant) {
  Rng rng(2);
  std::vector<FeatureMap> maps;
  for (int i = 0; i < 5; ++i) maps.push_back(RandomMap(kShape, rng, -1e3, 1e3));
  const FeatureMap ref = AggregateMean(maps);
  std::vector<int> perm{0, 1, 2, 3, 4};
  while (std::next_permutation(perm.begin(), perm.end())) {
    std::vector<FeatureMap> p;
    for (int i : perm) p.push_back(maps[static_cast<size_t>(i)]);
    ASSERT_TRUE(AggregateMean(p) == ref);
  }
}

TEST(AggregateMean, Errors) {
  EXPECT_THROW(AggregateMean(std::vector<FeatureMap>{}), ValueError);
  const std::vector<FeatureMap> mixed{FeatureMap({1, 2, 2}), FeatureMap({1, 2, 3})};
  EXPECT_THROW(AggregateMean(mixed), ShapeError);
}

TEST(ComputeMask, FreshNetworkGivesOneHalfEverywhere) {
  Rng rng(3);
  const MaskNet net(4, rng);
  const MaskBundle m = ComputeMask(net, RandomMap(kShape, rng), RandomMap(kShape, rng));
  EXPECT_EQ(m.mask.shape(), (Shape{1, 4, 4}));
  for (double v : m.mask.vec()) EXPECT_EQ(v, 0.5);
}

TEST(ComputeMask, ValuesStayInTheUnitInterval) {
  Rng rng(4);
  MaskNet net(4, rng);
  Perturb(net.Parameters(), rng, 2.0);
  for (int i = 0; i < 20; ++i) {
    const MaskBundle m = ComputeMask(net, RandomMap(kShape, rng, -5, 5), RandomMap(kShape, rng, -5, 5));
    EXPECT_GE(m.mask.Min(), 0.0);
    EXPECT_LE(m.mask.Max(), 1.0);
  }
  EXPECT_THROW(ComputeMask(net, FeatureMap(kShape), FeatureMap({4, 2, 2})), ShapeError);
}

TEST(ComputeMask, GradientOfMeanMaskMatchesFiniteDifferences) {
  Rng rng(5);
  const MaskNet net(4, rng);
  Perturb(net.Parameters(), rng);
  const nn::Var a(Tensor(Stack(std::vector<Tensor>{RandomMap(kShape, rng)})));
  const nn::Var b(Tensor(Stack(std::vector<Tensor>{RandomMap(kShape, rng)})));
  const oracle::GradCheck r =
      oracle::CheckGradients([&] { return nn::Mean(net.Forward(a, b)); }, Vars(net.Parameters()));
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(CentroidsBasic, NoPseudoGivesTheSupportMean) {
  Rng rng(6);
  FeatureGroups support{{"a", {RandomMap(kShape, rng), RandomMap(kShape, rng)}}};
  const CentroidSet cs = CentroidsBasic(support, {});
  EXPECT_EQ(cs.Of("a"), Flat(AggregateMean(support["a"])));
}

TEST(CentroidsBasic, OneSupportOnePseudo) {
  const FeatureGroups support{{"a", {FeatureMap({1, 1, 2}, std::vector<double>{1, 2})}}};
  const FeatureGroups pseudo{{"a", {FeatureMap({1, 1, 2}, std::vector<double>{3, 6})}}};
  EXPECT_EQ(CentroidsBasic(support, pseudo).Of("a"), (std::vector<double>{2, 4}));
}

TEST(CentroidsBasic, MatchesTwoPassMean) {
  Rng rng(7);
  FeatureGroups support, pseudo;
  for (const ClassId c : {"a", "b", "c"}) {
    for (int i = 0; i < 3; ++i) support[c].push_back(RandomMap(kShape, rng));
    for (int i = 0; i < 5; ++i) pseudo[c].push_back(RandomMap(kShape, rng));
  }
  const CentroidSet cs = CentroidsBasic(support, pseudo);
  ASSERT_EQ(cs.classes, (std::vector<ClassId>{"a", "b", "c"}));
  for (const ClassId c : {"a", "b", "c"}) {
    std::vector<std::vector<double>> all;
    for (const auto& f : support[c]) all.push_back(Flat(f));
    for (const auto& f : pseudo[c]) all.push_back(Flat(f));
    const std::vector<double> expected = Mean(all);
    for (size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(cs.Of(c)[i], expected[i], 1e-14);
  }
  // Reordering inputs does not change the result.
  FeatureGroups shuffled = support;
  std::reverse(shuffled["b"].begin(), shuffled["b"].end());
  EXPECT_EQ(CentroidsBasic(shuffled, pseudo).Of("b"), cs.Of("b"));
  EXPECT_THROW(CentroidsBasic(FeatureGroups{{"z", {}}}, {}), ValueError);
}

struct MaskedFixture {
  Rng rng{8};
  TransformNet f_beta{4, rng};
  FeatureGroups support, pseudo;
  std::map<ClassId, MaskBundle> masks;

  explicit MaskedFixture(double mask_value) {
    Perturb(f_beta.Parameters(), rng);
    for (const ClassId c : {"a", "b"}) {
      for (int i = 0; i < 2; ++i) support[c].push_back(RandomMap(kShape, rng));
      for (int i = 0; i < 3; ++i) pseudo[c].push_back(RandomMap(kShape, rng));
      masks[c] = {AggregateMean(support[c]), AggregateMean(pseudo[c]), Tensor({1, 4, 4}, mask_value)};
    }
  }
};

TEST(CentroidsMasked, UnitMaskEqualsBasicOnTransformedFeatures) {
  MaskedFixture fx(1.0);
  FeatureGroups ts, tp;
  for (const auto& [c, maps] : fx.support) {
    for (const auto& m : maps) ts[c].push_back(fx.f_beta.Apply(m));
  }
  for (const auto& [c, maps] : fx.pseudo) {
    for (const auto& m : maps) tp[c].push_back(fx.f_beta.Apply(m));
  }
  const CentroidSet masked = CentroidsMasked(fx.f_beta, fx.support, fx.pseudo, fx.masks);
  const CentroidSet basic = CentroidsBasic(ts, tp);
  for (const ClassId c : {"a", "b"}) EXPECT_EQ(masked.Of(c), basic.Of(c));
}

TEST(CentroidsMasked, ZeroMaskWithIdentityTransformSuppressesPseudoShots) {
  Rng rng(9);
  const TransformNet identity(4, rng);
  FeatureGroups support{{"a", {RandomMap(kShape, rng)}}};
  FeatureGroups pseudo{{"a", {RandomMap(kShape, rng), RandomMap(kShape, rng)}}};
  const std::map<ClassId, MaskBundle> masks{{"a", {support["a"][0], pseudo["a"][0], Tensor({1, 4, 4}, 0.0)}}};
  const CentroidSet cs = CentroidsMasked(identity, support, pseudo, masks);
  const std::vector<double> s = Flat(identity.Apply(support["a"][0]));
  const std::vector<double> z = Flat(identity.Apply(FeatureMap(kShape, 0.0)));
  for (size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(cs.Of("a")[i], (s[i] + 2 * z[i]) / 3.0, 1e-14);
  EXPECT_EQ(z, std::vector<double>(z.size(), 0.0)) << "identity f_beta maps 0 to 0";
}

TEST(CentroidsMasked, MatchesStraightLineReimplementation) {
  MaskedFixture fx(0.0);
  Rng rng(10);
  for (auto& [c, m] : fx.masks) m.mask = RandomMap({1, 4, 4}, rng, 0.0, 1.0);
  const CentroidSet cs = CentroidsMasked(fx.f_beta, fx.support, fx.pseudo, fx.masks);
  for (const ClassId c : {"a", "b"}) {
    std::vector<std::vector<double>> rows;
    for (const auto& f : fx.support[c]) rows.push_back(Flat(fx.f_beta.Apply(f)));
    for (const auto& f : fx.pseudo[c]) {
      FeatureMap masked = f;
      for (int ch = 0; ch < 4; ++ch) {
        for (int h = 0; h < 4; ++h) {
          for (int w = 0; w < 4; ++w) masked.at(ch, h, w) *= fx.masks[c].mask.at(0, h, w);
        }
      }
      rows.push_back(Flat(fx.f_beta.Apply(masked)));
    }
    const std::vector<double> expected = Mean(rows);
    for (size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(cs.Of(c)[i], expected[i], 1e-13);
  }
  std::map<ClassId, MaskBundle> missing = fx.masks;
  missing.erase("b");
  EXPECT_THROW(CentroidsMasked(fx.f_beta, fx.support, fx.pseudo, missing), ValueError);
}

CentroidSet ThreeCentroids() {
  CentroidSet cs;
  cs.classes = {"a", "b", "c"};
  cs.centroids = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  return cs;
}

TEST(Classify, QueryOnACentroidWins) {
  const Prediction p = Classify(FeatureMap({3, 1, 1}, std::vector<double>{0, 2, 0}), ThreeCentroids(), nullptr, 10.0);
  EXPECT_EQ(p.predicted, "b");
  EXPECT_EQ(p.index, 1);
  EXPECT_NEAR(std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0), 1.0, 1e-12);
  EXPECT_EQ(*std::max_element(p.probabilities.begin(), p.probabilities.end()), p.probabilities[1]);
}

TEST(Classify, IdenticalCentroidsGiveUniform) {
  CentroidSet cs;
  cs.classes = {"x", "y", "z", "w"};
  cs.centroids.assign(4, {1, 2, 3});
  const Prediction p = Classify(FeatureMap({3, 1, 1}, std::vector<double>{3, 1, 2}), cs, nullptr, 10.0);
  for (double v : p.probabilities) EXPECT_NEAR(v, 0.25, 1e-15);
  EXPECT_EQ(p.predicted, "x") << "ties go to the first class id";
}

TEST(Classify, InvariantToPositiveQueryScaling) {
  Rng rng(11);
  TransformNet f_beta(4, rng);
  Perturb(f_beta.Parameters(), rng);
  CentroidSet cs;
  for (int c = 0; c < 5; ++c) {
    cs.classes.push_back("c" + std::to_string(c));
    cs.centroids.push_back(Flat(RandomMap(kShape, rng)));
  }
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureMap q = RandomMap(kShape, rng);
    FeatureMap q2 = q;
    const double s = std::uniform_real_distribution<double>(0.01, 100.0)(rng);
    for (double& v : q2.vec()) v *= s;
    const Prediction a = Classify(q, cs, nullptr, 10.0), b = Classify(q2, cs, nullptr, 10.0);
    for (size_t i = 0; i < a.probabilities.size(); ++i) EXPECT_NEAR(a.probabilities[i], b.probabilities[i], 1e-8);
    EXPECT_EQ(a.index, b.index);
    const Prediction t = Classify(q, cs, &f_beta, 7.0);
    EXPECT_NEAR(std::accumulate(t.probabilities.begin(), t.probabilities.end(), 0.0), 1.0, 1e-6);
    for (double v : t.probabilities) EXPECT_GE(v, 0.0);
  }
}

TEST(Classify, ZeroNormIsAValueError) {
  EXPECT_THROW(Classify(FeatureMap({3, 1, 1}, 0.0), ThreeCentroids(), nullptr, 10.0), ValueError);
  CentroidSet cs = ThreeCentroids();
  cs.centroids[2] = {0, 0, 0};
  EXPECT_THROW(Classify(FeatureMap({3, 1, 1}, 1.0), cs, nullptr, 10.0), ValueError);
}

FeatureMap Point(double x, double y) { return FeatureMap({2, 1, 1}, std::vector<double>{x, y}); }

TEST(MsKMeans, NoPseudoLeavesCentroidsUnchanged) {
  const FeatureGroups support{{"a", {Point(0, 0)}}, {"b", {Point(4, 0)}}};
  const CentroidSet init = CentroidsBasic(support, {});
  const CentroidSet out = MsKMeansRefine(support, std::vector<FeatureMap>{}, init, 5);
  EXPECT_EQ(out.centroids, init.centroids);
  EXPECT_THROW(MsKMeansRefine(support, std::vector<FeatureMap>{}, init, 0), ValueError);
}

TEST(MsKMeans, EquidistantPointSplitsEvenly) {
  const FeatureGroups support{{"a", {Point(0, 0)}}, {"b", {Point(4, 0)}}};
  const std::vector<FeatureMap> pseudo{Point(2, 3)};
  const CentroidSet out = MsKMeansRefine(support, pseudo, CentroidsBasic(support, {}), 1);
  // h_a = (0 + 0.5 * (2, 3)) / 1.5
  EXPECT_NEAR(out.Of("a")[0], 1.0 / 1.5, 1e-15);
  EXPECT_NEAR(out.Of("a")[1], 1.5 / 1.5, 1e-15);
  EXPECT_NEAR(out.Of("b")[0], (4 + 1.0) / 1.5, 1e-15);
}

TEST(MsKMeans, MatchesHandRolledIterations) {
  const FeatureGroups support{{"a", {Point(0, 0)}}, {"b", {Point(1, 1)}}};
  const std::vector<std::vector<double>> xs{{0.2, 0.1}, {0.9, 0.7}, {0.5, 0.6}, {-0.3, 0.4}};
  std::vector<FeatureMap> pseudo;
  for (const auto& x : xs) pseudo.push_back(Point(x[0], x[1]));
  std::vector<std::vector<double>> h{{0, 0}, {1, 1}};
  const std::vector<std::vector<double>> s{{0, 0}, {1, 1}};
  for (int it = 0; it < 3; ++it) {
    std::vector<std::vector<double>> z(xs.size(), std::vector<double>(2));
    for (size_t j = 0; j < xs.size(); ++j) {
      double d[2], norm = 0.0;
      for (int c = 0; c < 2; ++c) {
        const double dx = xs[j][0] - h[c][0], dy = xs[j][1] - h[c][1];
        d[c] = std::exp(-(dx * dx + dy * dy));
        norm += d[c];
      }
      for (int c = 0; c < 2; ++c) z[j][c] = d[c] / norm;
    }
    for (int c = 0; c < 2; ++c) {
      double wsum = 1.0, num[2] = {s[c][0], s[c][1]};
      for (size_t j = 0; j < xs.size(); ++j) {
        wsum += z[j][c];
        num[0] += z[j][c] * xs[j][0];
        num[1] += z[j][c] * xs[j][1];
      }
      h[c] = {num[0] / wsum, num[1] / wsum};
    }
  }
  const CentroidSet out = MsKMeansRefine(support, pseudo, CentroidsBasic(support, {}), 3);
  for (int c = 0; c < 2; ++c) {
    for (int d = 0; d < 2; ++d) EXPECT_NEAR(out.centroids[static_cast<size_t>(c)][static_cast<size_t>(d)], h[c][d], 1e-10);
  }
}

EpisodeBatch RandomBatch(Rng& rng, int n_way, int shots, int pseudo, int queries) {
  EpisodeBatch b;
  b.n_way = n_way;
  std::vector<Tensor> s, p, q;
  for (int c = 0; c < n_way; ++c) {
    for (int i = 0; i < shots; ++i) s.push_back(RandomMap(kShape, rng)), b.support_labels.push_back(c);
    for (int i = 0; i < pseudo; ++i) p.push_back(RandomMap(kShape, rng)), b.pseudo_labels.push_back(c);
    for (int i = 0; i < queries; ++i) q.push_back(RandomMap(kShape, rng)), b.query_labels.push_back(c);
  }
  b.support = Stack(s);
  if (!p.empty()) b.pseudo = Stack(p);
  b.query = Stack(q);
  return b;
}

TEST(MaskingEpisode, QueryCrossEntropyGradientMatchesFiniteDifferences) {
  Rng rng(12);
  MaskingModel model(4, 10.0, rng);
  Perturb(model.Parameters(), rng, 0.2);
  const EpisodeBatch batch = RandomBatch(rng, 2, 2, 2, 2);
  const oracle::GradCheck r = oracle::CheckGradients(
      [&] { return nn::SoftmaxCrossEntropy(MaskingEpisodeForward(model, batch).logits, batch.query_labels); },
      Vars(model.Parameters()));
  EXPECT_LT(r.max_rel_error, 1e-3);
}

TEST(MaskingEpisode, AgreesWithPerMapPipeline) {
  Rng rng(13);
  MaskingModel model(4, 10.0, rng);
  Perturb(model.Parameters(), rng, 0.2);
  const EpisodeBatch batch = RandomBatch(rng, 3, 2, 3, 2);
  const EpisodeOutput out = MaskingEpisodeForward(model, batch);
  const std::vector<ClassId> ids{"c0", "c1", "c2"};
  FeatureGroups support, pseudo;
  for (size_t i = 0; i < batch.support_labels.size(); ++i)
    support[ids[static_cast<size_t>(batch.support_labels[i])]].push_back(Unstack(batch.support, static_cast<int64_t>(i)));
  for (size_t i = 0; i < batch.pseudo_labels.size(); ++i)
    pseudo[ids[static_cast<size_t>(batch.pseudo_labels[i])]].push_back(Unstack(batch.pseudo, static_cast<int64_t>(i)));
  std::map<ClassId, MaskBundle> masks;
  for (const ClassId& c : ids) masks[c] = ComputeMask(model.f_theta, AggregateMean(support[c]), AggregateMean(pseudo[c]));
  const CentroidSet cs = CentroidsMasked(model.f_beta, support, pseudo, masks);
  const Tensor probs = nn::Softmax(out.logits.value());
  for (int64_t q = 0; q < batch.query.dim(0); ++q) {
    const Prediction p = Classify(Unstack(batch.query, q), cs, &model.f_beta, model.temperature.value()[0]);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(probs[q * 3 + c], p.probabilities[static_cast<size_t>(c)], 1e-10);
  }
}

TEST(MaskingEpisode, UnitMaskMatchesBasicOnTransformedFeatures) {
  Rng rng(14);
  MaskingModel model(4, 10.0, rng);
  Perturb(model.Parameters(), rng, 0.2);
  const EpisodeBatch batch = RandomBatch(rng, 3, 1, 2, 3);
  EpisodeBatch transformed = batch;
  {
    nn::NoGradGuard guard;
    transformed.support = model.f_beta.Forward(nn::Var(batch.support)).value();
    transformed.pseudo = model.f_beta.Forward(nn::Var(batch.pseudo)).value();
    transformed.query = model.f_beta.Forward(nn::Var(batch.query)).value();
  }
  const Tensor masked = MaskingEpisodeForward(model, batch, Pooling::kFlatten, true).logits.value();
  const Tensor basic = BasicEpisodeLogits(transformed, model.temperature.value()[0]).value();
  EXPECT_LE(MaxAbsDiff(masked, basic), 1e-12);
  EXPECT_EQ(ArgmaxRows(masked), ArgmaxRows(basic));
}

TEST(Pooling, NamesRoundTrip) {
  EXPECT_EQ(ParsePooling(PoolingName(Pooling::kGap)), Pooling::kGap);
  EXPECT_EQ(ParsePooling("flatten"), Pooling::kFlatten);
  EXPECT_THROW(ParsePooling("avg"), ConfigError);
  const FeatureMap f({2, 1, 2}, std::vector<double>{1, 3, 5, 7});
  EXPECT_EQ(PoolFeature(f, Pooling::kGap), (std::vector<double>{2, 6}));
  EXPECT_EQ(PoolFeature(f, Pooling::kFlatten), f.vec());
}

TEST(ArgmaxRows, FirstMaximumWins) {
  EXPECT_EQ(ArgmaxRows(Tensor({2, 3}, std::vector<double>{1, 3, 3, 0, 0, 0})), (std::vector<int>{1, 0}));
}

}  // namespace
}  // namespace pseudoshot
