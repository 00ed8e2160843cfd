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

#ifndef PSEUDOSHOT_EPISODES_H_
#define PSEUDOSHOT_EPISODES_H_

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pseudoshot/dataset.h"
#include "pseudoshot/rng.h"
#include "pseudoshot/semantics.h"
#include "pseudoshot/taxonomy.h"

namespace pseudoshot {

enum class Phase { kTrain, kVal, kTest };
const char* PhaseName(Phase p);

struct EpisodeConfig {
  int n_way = 5;
  int k_shot = 1;
  int q_query = 10;
  int n_prime = 3;
  // Total pseudo shots per support class; 0 disables auxiliary data.
  int k_prime = 15;
  PruneLevel level;
  // Prune the subtrees of the episode's support classes as well as the test
  // classes, in every phase.
  bool prune_support = true;
  SelectionMethod selection = SelectionMethod::kSemantic;

  void Validate() const;
};

struct ClassSplit {
  ClassSet train;
  ClassSet val;
  ClassSet test;
  ClassSet auxiliary_universe;
  ClassSet helper;

  // Throws ConfigError when splits overlap or helpers leak into a split.
  void Validate() const;
  const ClassSet& ForPhase(Phase p) const;
};

// Everything an episode needs to resolve classes into images. Support and
// query images come from `store`, falling back to `aux_store` for classes the
// benchmark store does not hold (helper classes). Pseudo shots always come
// from `aux_store`.
struct EpisodeSources {
  const ClassSplit& split;
  const Taxonomy& taxonomy;
  const EmbeddingTable& embeddings;
  const DatasetStore& store;
  const DatasetStore& aux_store;

  const DatasetStore& StoreFor(const ClassId& c) const;
};

struct Episode {
  Phase phase = Phase::kTest;
  PruneLevel level;
  std::vector<ClassId> support_classes;
  std::map<ClassId, std::vector<ImageRef>> support;
  std::map<ClassId, std::vector<ImageRef>> query;
  std::map<ClassId, std::vector<ImageRef>> pseudo;
  std::map<ClassId, SelectionResult> provenance;
  // |C^A| for this episode (0 when pseudo shots are disabled).
  size_t auxiliary_pool_size = 0;
};

// How K' pseudo shots split over the chosen classes: floor(K'/N') each, the
// remainder one by one to the most similar classes. Aligned with
// chosen.chosen_classes.
std::vector<std::pair<ClassId, int>> DistributeQuota(int k_prime, const SelectionResult& chosen);

// Auxiliary classes available to an episode with the given support classes.
ClassSet AuxiliaryPool(const EpisodeSources& src, Phase phase,
                       const std::vector<ClassId>& support_classes, const EpisodeConfig& cfg);

// Samples support classes uniformly from the phase's class set.
Episode SampleEpisode(const EpisodeSources& src, Phase phase, const EpisodeConfig& cfg, Rng& rng);
// Same, drawing support classes from an explicit pool (e.g. train + helper).
Episode SampleEpisodeFromPool(const EpisodeSources& src, Phase phase,
                              const std::vector<ClassId>& pool, const EpisodeConfig& cfg,
                              Rng& rng);

// Random disjoint train/val/test split of `all_classes` (sizes are
// floor(fraction * n)), plus `helper_count` helper classes drawn from the
// auxiliary universe outside the splits, least similar to the train classes.
ClassSplit BuildSplits(const Taxonomy& t, const ClassSet& all_classes,
                       const std::array<double, 3>& fractions, int helper_count,
                       const EmbeddingTable& e, const ClassSet& auxiliary_universe, Rng& rng,
                       HelperAggregation aggregation = HelperAggregation::kMax);

// JSON record of class ids, image indices and selection provenance.
std::string EpisodeToJson(const Episode& ep);

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_EPISODES_H_
