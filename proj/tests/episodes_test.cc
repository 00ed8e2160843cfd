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

#include <numeric>

#include "pseudoshot/benchmark.h"
#include "pseudoshot/episodes.h"
#include "pseudoshot/error.h"

namespace pseudoshot {
namespace {

const Benchmark& DefaultBenchmark() {
  static const Benchmark b = MakeSyntheticBenchmark(SynthConfig{}, SplitConfig{}, 1);
  return b;
}

Benchmark TinyBenchmark() {
  SynthConfig synth;
  synth.depth = 3;
  synth.samples_per_class = 6;
  SplitConfig split;
  split.fractions = {0.5, 0.25, 0.25};
  return MakeSyntheticBenchmark(synth, split, 2);
}

SelectionResult Chosen(std::vector<double> scores) {
  SelectionResult r;
  for (size_t i = 0; i < scores.size(); ++i) r.chosen_classes.push_back("k" + std::to_string(i));
  r.scores = std::move(scores);
  return r;
}

std::vector<int> Counts(const std::vector<std::pair<ClassId, int>>& q) {
  std::vector<int> out;
  for (const auto& [c, n] : q) out.push_back(n);
  return out;
}

TEST(DistributeQuota, EvenSplit) { EXPECT_EQ(Counts(DistributeQuota(6, Chosen({0.9, 0.8, 0.7}))), (std::vector<int>{2, 2, 2})); }

TEST(DistributeQuota, RemainderGoesToTheMostSimilar) {
  EXPECT_EQ(Counts(DistributeQuota(7, Chosen({0.9, 0.8, 0.7}))), (std::vector<int>{3, 2, 2}));
}

TEST(DistributeQuota, FewerShotsThanClasses) {
  const auto q = DistributeQuota(2, Chosen({0.9, 0.8, 0.7, 0.6, 0.5}));
  // Rule by enumeration: floor(2/5) = 0 each, remainder 2 to the top two.
  EXPECT_EQ(Counts(q), (std::vector<int>{1, 1, 0, 0, 0}));
  EXPECT_EQ(q[0].first, "k0");
}

TEST(DistributeQuota, SumsToKPrime) {
  for (int k = 0; k < 20; ++k) {
    for (int n = 1; n <= 6; ++n) {
      std::vector<double> scores(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) scores[static_cast<size_t>(i)] = 1.0 - 0.1 * i;
      const auto c = Counts(DistributeQuota(k, Chosen(scores)));
      EXPECT_EQ(std::accumulate(c.begin(), c.end(), 0), k);
    }
  }
}

TEST(SampleEpisode, ZeroQuotaIsStandardFewShot) {
  const Benchmark& b = DefaultBenchmark();
  EpisodeConfig cfg;
  cfg.n_way = 2;
  cfg.k_shot = 1;
  cfg.q_query = 1;
  cfg.k_prime = 0;
  Rng rng(1);
  const Episode ep = SampleEpisode(b.Sources(), Phase::kTest, cfg, rng);
  EXPECT_EQ(ep.support_classes.size(), 2u);
  for (const ClassId& c : ep.support_classes) {
    EXPECT_EQ(ep.support.at(c).size(), 1u);
    EXPECT_EQ(ep.query.at(c).size(), 1u);
    EXPECT_TRUE(ep.pseudo.count(c) == 0 || ep.pseudo.at(c).empty());
  }
}

TEST(SampleEpisode, SupportAndQueryAreDisjoint) {
  const Benchmark& b = DefaultBenchmark();
  EpisodeConfig cfg;
  cfg.k_shot = 5;
  cfg.q_query = 10;
  for (int i = 0; i < 1000; ++i) {
    Rng rng = MakeStream(3, 0, static_cast<uint64_t>(i));
    const Phase phase = static_cast<Phase>(i % 3);
    const Episode ep = SampleEpisode(b.Sources(), phase, cfg, rng);
    for (const ClassId& c : ep.support_classes) {
      std::set<ImageRef> s(ep.support.at(c).begin(), ep.support.at(c).end());
      ASSERT_EQ(s.size(), 5u);
      for (const ImageRef& q : ep.query.at(c)) ASSERT_EQ(s.count(q), 0u);
    }
  }
}

TEST(SampleEpisode, PseudoShotsAvoidTestAndSupportAtEveryLevel) {
  const Benchmark& b = DefaultBenchmark();
  EpisodeConfig cfg;
  for (int level = 0; level <= 3; ++level) {
    cfg.level = PruneLevel(level);
    for (int i = 0; i < 250; ++i) {
      Rng rng = MakeStream(4, static_cast<uint64_t>(level), static_cast<uint64_t>(i));
      const Phase phase = static_cast<Phase>(i % 3);
      const Episode ep = SampleEpisode(b.Sources(), phase, cfg, rng);
      for (const ClassId& c : ep.support_classes) {
        const std::vector<ClassId>& chosen = ep.provenance.at(c).chosen_classes;
        for (const ImageRef& p : ep.pseudo.at(c)) {
          ASSERT_EQ(b.split.test.count(p.class_id), 0u);
          ASSERT_EQ(std::count(ep.support_classes.begin(), ep.support_classes.end(), p.class_id), 0);
          ASSERT_NE(std::find(chosen.begin(), chosen.end(), p.class_id), chosen.end());
          for (const ClassId& t : b.split.test) {
            ASSERT_FALSE(b.taxonomy.IsInSubtree(p.class_id, b.taxonomy.Ancestor(t, cfg.level)));
          }
        }
        EXPECT_EQ(ep.pseudo.at(c).size(), static_cast<size_t>(cfg.k_prime));
      }
    }
  }
}

TEST(SampleEpisode, SameStreamSameEpisode) {
  const Benchmark& b = DefaultBenchmark();
  EpisodeConfig cfg;
  Rng a = MakeStream(9, 1), c = MakeStream(9, 1);
  EXPECT_EQ(EpisodeToJson(SampleEpisode(b.Sources(), Phase::kTest, cfg, a)),
            EpisodeToJson(SampleEpisode(b.Sources(), Phase::kTest, cfg, c)));
}

TEST(SampleEpisode, InsufficientClassesIsASamplingError) {
  const Benchmark& b = DefaultBenchmark();
  EpisodeConfig cfg;
  cfg.n_way = static_cast<int>(b.split.test.size()) + 1;
  Rng rng(1);
  EXPECT_THROW(SampleEpisode(b.Sources(), Phase::kTest, cfg, rng), SamplingError);
}

TEST(SampleEpisode, StarvedPoolAsksForALowerLevel) {
  const Benchmark b = TinyBenchmark();
  EpisodeConfig cfg;
  cfg.n_way = 2;
  cfg.k_shot = 1;
  cfg.q_query = 1;
  size_t previous = SIZE_MAX;
  for (int level = 0; level <= 4; ++level) {
    cfg.level = PruneLevel(level);
    Rng rng(5);
    std::vector<ClassId> support(b.split.test.begin(), b.split.test.end());
    support.resize(2);
    const size_t pool = AuxiliaryPool(b.Sources(), Phase::kTest, support, cfg).size();
    EXPECT_LE(pool, previous);
    previous = pool;
    if (pool == 0) {
      try {
        SampleEpisode(b.Sources(), Phase::kTest, cfg, rng);
        FAIL() << "expected EpisodeError at level " << level;
      } catch (const EpisodeError& e) {
        EXPECT_NE(std::string(e.what()).find("level"), std::string::npos);
      }
    }
  }
  EXPECT_EQ(previous, 0u);
}

TEST(SampleEpisode, PruneSupportFlagKeepsSupportSubtreesOut) {
  const Benchmark& b = DefaultBenchmark();
  EpisodeConfig cfg;
  cfg.level = PruneLevel(1);
  for (int i = 0; i < 100; ++i) {
    Rng rng = MakeStream(6, 0, static_cast<uint64_t>(i));
    const Episode ep = SampleEpisode(b.Sources(), Phase::kTrain, cfg, rng);
    for (const ClassId& c : ep.support_classes) {
      for (const ImageRef& p : ep.pseudo.at(c)) {
        for (const ClassId& s : ep.support_classes) {
          ASSERT_FALSE(b.taxonomy.IsInSubtree(p.class_id, b.taxonomy.Ancestor(s, cfg.level)));
        }
      }
    }
  }
}

TEST(BuildSplits, SizesFollowTheFractions) {
  const Benchmark& b = DefaultBenchmark();
  const std::vector<ClassId> leaves = b.taxonomy.Leaves();
  const ClassSet ten(leaves.begin(), leaves.begin() + 10);
  const ClassSet universe(b.taxonomy.nodes().begin(), b.taxonomy.nodes().end());
  Rng rng(1);
  const ClassSplit s = BuildSplits(b.taxonomy, ten, {0.6, 0.2, 0.2}, 0, b.embeddings, universe, rng);
  EXPECT_EQ(s.train.size(), 6u);
  EXPECT_EQ(s.val.size(), 2u);
  EXPECT_EQ(s.test.size(), 2u);
  EXPECT_TRUE(s.helper.empty());
}

TEST(BuildSplits, HelpersAreDisjointFromEverySplit) {
  const Benchmark& b = DefaultBenchmark();
  const std::vector<ClassId> leaves = b.taxonomy.Leaves();
  const ClassSet all(leaves.begin(), leaves.end());
  const ClassSet universe(b.taxonomy.nodes().begin(), b.taxonomy.nodes().end());
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const ClassSplit s = BuildSplits(b.taxonomy, all, {0.5, 0.1, 0.1}, 10, b.embeddings, universe, rng);
    ASSERT_EQ(s.helper.size(), 10u);
    for (const ClassId& h : s.helper) {
      ASSERT_EQ(s.train.count(h) + s.val.count(h) + s.test.count(h), 0u);
    }
    EXPECT_NO_THROW(s.Validate());
  }
}

TEST(BuildSplits, TooFewClassesIsAConfigError) {
  const Benchmark& b = DefaultBenchmark();
  const ClassSet universe(b.taxonomy.nodes().begin(), b.taxonomy.nodes().end());
  Rng rng(1);
  EXPECT_THROW(BuildSplits(b.taxonomy, {"n_0"}, {0.5, 0.2, 0.2}, 0, b.embeddings, universe, rng), ConfigError);
  EXPECT_THROW(BuildSplits(b.taxonomy, universe, {0.6, 0.3, 0.3}, 0, b.embeddings, universe, rng), ConfigError);
}

TEST(EpisodeConfig, RejectsNonPositiveSizes) {
  EpisodeConfig cfg;
  cfg.n_way = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = EpisodeConfig{};
  cfg.k_prime = -1;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(Benchmark, SplitsAreDisjointAndHelpersAreOutside) {
  const Benchmark& b = DefaultBenchmark();
  EXPECT_NO_THROW(b.split.Validate());
  EXPECT_EQ(b.split.train.size(), 64u);
  EXPECT_EQ(b.split.test.size(), 8u);
  EXPECT_EQ(b.split.helper.size(), 12u);
}

}  // namespace
}  // namespace pseudoshot
