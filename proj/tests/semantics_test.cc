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
#include <sstream>

#include "oracles.h"
#include "pseudoshot/error.h"
#include "pseudoshot/semantics.h"

namespace pseudoshot {
namespace {

EmbeddingTable Table(const std::vector<std::pair<ClassId, std::vector<double>>>& rows) {
  EmbeddingTable t(static_cast<int>(rows.front().second.size()));
  for (const auto& [id, v] : rows) t.Add(id, v);
  return t;
}

TEST(LoadEmbeddings, ThreeDimensionalTable) {
  const EmbeddingTable t = ParseEmbeddings("a\t1 0 0\nb\t0 1 0.5\n");
  EXPECT_EQ(t.dim(), 3);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_DOUBLE_EQ(t.Get("b")[2], 0.5);
}

TEST(LoadEmbeddings, DimensionMismatchIsAFormatError) {
  try {
    ParseEmbeddings("a\t1 0 0\nb\t0 1 0 1\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos) << e.what();
  }
}

TEST(LoadEmbeddings, ZeroVectorIsAValueError) { EXPECT_THROW(ParseEmbeddings("a\t0 0 0\n"), ValueError); }

TEST(LoadEmbeddings, RandomUnitVectorsRoundTrip) {
  Rng rng(5);
  std::normal_distribution<double> g;
  EmbeddingTable t(8);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v(8);
    double n = 0.0;
    for (double& x : v) {
      x = g(rng);
      n += x * x;
    }
    for (double& x : v) x /= std::sqrt(n);
    t.Add("c" + std::to_string(i), v);
  }
  std::ostringstream out;
  WriteEmbeddings(t, out);
  const EmbeddingTable back = ParseEmbeddings(out.str());
  ASSERT_EQ(back.size(), 50u);
  for (const ClassId& id : t.ids()) {
    for (int d = 0; d < 8; ++d) EXPECT_NEAR(back.Get(id)[d], t.Get(id)[d], 1e-9);
  }
}

TEST(Cosine, Examples) {
  const std::vector<double> x{1, 0}, y{0, 1}, a{2, 0}, b{5, 0}, d{1, 1};
  EXPECT_DOUBLE_EQ(Cosine(x, y), 0.0);
  EXPECT_DOUBLE_EQ(Cosine(a, b), 1.0);
  EXPECT_NEAR(Cosine(d, x), 0.70710678, 1e-8);
  const std::vector<double> zero{0, 0};
  EXPECT_THROW(Cosine(zero, x), ValueError);
}

TEST(SelectPseudo, PicksTheArgmax) {
  const EmbeddingTable t = Table({{"t", {1, 0}}, {"a", {1, 0.1}}, {"b", {0, 1}}, {"d", {-1, 0}}});
  const SelectionResult r = SelectPseudoClasses(t, "t", {"a", "b", "d"}, 1);
  EXPECT_EQ(r.chosen_classes, std::vector<ClassId>{"a"});
  EXPECT_EQ(r.target_class, "t");
}

TEST(SelectPseudo, AllCandidatesSortedByScore) {
  const EmbeddingTable t = Table({{"t", {1, 0}}, {"a", {1, 0.1}}, {"b", {0, 1}}, {"d", {-1, 0}}});
  const SelectionResult r = SelectPseudoClasses(t, "t", {"a", "b", "d"}, 3);
  EXPECT_EQ(r.chosen_classes, (std::vector<ClassId>{"a", "b", "d"}));
  EXPECT_TRUE(std::is_sorted(r.scores.rbegin(), r.scores.rend()));
  const SelectionResult more = SelectPseudoClasses(t, "t", {"a", "b", "d"}, 10);
  EXPECT_EQ(more.chosen_classes.size(), 3u);
}

TEST(SelectPseudo, TiesGoToTheSmallerId) {
  const EmbeddingTable t = Table({{"t", {1, 0}}, {"y", {1, 1}}, {"x", {1, -1}}});
  EXPECT_EQ(SelectPseudoClasses(t, "t", {"x", "y"}, 1).chosen_classes, std::vector<ClassId>{"x"});
}

TEST(SelectPseudo, ErrorsAndMissingEmbeddings) {
  const EmbeddingTable t = Table({{"t", {1, 0}}, {"a", {1, 0.1}}});
  EXPECT_THROW(SelectPseudoClasses(t, "missing", {"a"}, 1), LookupError);
  EXPECT_THROW(SelectPseudoClasses(t, "t", {"ghost"}, 1), SelectionError);
  EXPECT_EQ(SelectPseudoClasses(t, "t", {"a", "ghost"}, 2).chosen_classes, std::vector<ClassId>{"a"});
}

TEST(SelectPseudo, MatchesExhaustiveSubsetsAndIsScaleInvariant) {
  Rng rng(23);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    EmbeddingTable t(4), scaled(4);
    std::vector<double> target(4);
    for (double& x : target) x = g(rng);
    t.Add("target", target);
    scaled.Add("target", target);
    ClassSet cands;
    const int n = 2 + trial % 7;
    for (int i = 0; i < n; ++i) {
      std::vector<double> v(4);
      for (double& x : v) x = g(rng);
      const double s = scale(rng);
      std::vector<double> sv = v;
      for (double& x : sv) x *= s;
      t.Add("c" + std::to_string(i), v);
      scaled.Add("c" + std::to_string(i), sv);
      cands.insert("c" + std::to_string(i));
    }
    for (int np = 1; np <= 3; ++np) {
      const auto chosen = SelectPseudoClasses(t, "target", cands, np).chosen_classes;
      EXPECT_EQ(chosen, oracle::ExhaustiveSelect(t, "target", cands, np));
      EXPECT_EQ(SelectPseudoClasses(scaled, "target", cands, np).chosen_classes, chosen);
    }
  }
}

TEST(SelectRandom, DrawsFromTheCandidates) {
  const EmbeddingTable t = Table({{"t", {1, 0}}, {"a", {1, 0.1}}, {"b", {0, 1}}, {"d", {-1, 0}}});
  Rng rng(1);
  std::set<ClassId> seen;
  for (int i = 0; i < 50; ++i) {
    const SelectionResult r = SelectRandomClasses(t, "t", {"a", "b", "d"}, 1, rng);
    ASSERT_EQ(r.chosen_classes.size(), 1u);
    seen.insert(r.chosen_classes[0]);
    EXPECT_EQ(r.method, SelectionMethod::kRandom);
  }
  EXPECT_EQ(seen.size(), 3u);
}

TEST(SelectHelpers, LeastSimilarToTraining) {
  const EmbeddingTable t = Table({{"train", {1, 0}}, {"p", {0.9, 0.1}}, {"q", {0, 1}}, {"r", {-1, 0}}});
  EXPECT_EQ(SelectHelperClasses(t, {"train"}, {"p", "q", "r"}, 1), std::vector<ClassId>{"r"});
  EXPECT_EQ(SelectHelperClasses(t, {"train"}, {"p", "q", "r"}, 3).size(), 3u);
}

TEST(SelectHelpers, TiesGoToTheSmallerId) {
  const EmbeddingTable t = Table({{"train", {1, 0}}, {"n", {0, 1}}, {"m", {0, -1}}});
  EXPECT_EQ(SelectHelperClasses(t, {"train"}, {"n", "m"}, 1), std::vector<ClassId>{"m"});
}

TEST(SelectHelpers, MaxAndMeanAggregationDiffer) {
  // h1 is orthogonal to both training classes; h2 is close to one and opposite
  // to the other, so its mean similarity is lower but its max is higher.
  const EmbeddingTable t =
      Table({{"t1", {1, 0, 0}}, {"t2", {-1, 0.2, 0}}, {"h1", {0, 0, 1}}, {"h2", {1, -0.5, 0}}});
  EXPECT_EQ(SelectHelperClasses(t, {"t1", "t2"}, {"h1", "h2"}, 1, HelperAggregation::kMax),
            std::vector<ClassId>{"h1"});
  EXPECT_EQ(SelectHelperClasses(t, {"t1", "t2"}, {"h1", "h2"}, 1, HelperAggregation::kMean),
            std::vector<ClassId>{"h2"});
  EXPECT_THROW(SelectHelperClasses(t, {"t1"}, {"ghost"}, 1), SelectionError);
}

}  // namespace
}  // namespace pseudoshot
