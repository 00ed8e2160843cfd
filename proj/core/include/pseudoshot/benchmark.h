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

#ifndef PSEUDOSHOT_BENCHMARK_H_
#define PSEUDOSHOT_BENCHMARK_H_

#include <array>
#include <map>
#include <vector>

#include "pseudoshot/dataset.h"
#include "pseudoshot/episodes.h"
#include "pseudoshot/layers.h"
#include "pseudoshot/models.h"
#include "pseudoshot/semantics.h"
#include "pseudoshot/taxonomy.h"

namespace pseudoshot {

struct SplitConfig {
  // train / val / test fractions of the benchmark classes.
  std::array<double, 3> fractions{0.5, 0.0625, 0.0625};
  // Helper count as a fraction of |train|.
  double helper_fraction = 0.2;
  HelperAggregation helper_aggregation = HelperAggregation::kMax;

  void Validate() const;
};

// A taxonomy, its embeddings, one image store and a class split. The leaves
// held by the store are the benchmark classes; every class of the store is
// part of the auxiliary universe.
struct Benchmark {
  Taxonomy taxonomy;
  EmbeddingTable embeddings;
  DatasetStore store;
  ClassSplit split;

  EpisodeSources Sources() const { return {split, taxonomy, embeddings, store, store}; }
};

Benchmark MakeBenchmark(Taxonomy taxonomy, EmbeddingTable embeddings, DatasetStore store,
                        const SplitConfig& cfg, uint64_t seed);
Benchmark MakeSyntheticBenchmark(const SynthConfig& synth, const SplitConfig& cfg, uint64_t seed);

// Backbone features for every image of a store, indexed like the store.
class FeatureCache {
 public:
  FeatureCache() = default;
  FeatureCache(const nn::Backbone& backbone, const DatasetStore& store);

  const FeatureMap& Get(const ImageRef& ref) const;
  const Shape& feature_shape() const { return shape_; }

 private:
  std::map<ClassId, std::vector<FeatureMap>> features_;
  Shape shape_;
};

// Stacks an episode's cached features. Labels index the episode's support
// classes in sorted order, which is also the order returned in `classes`.
// With `include_pseudo` false the pseudo batch is left empty.
EpisodeBatch MakeEpisodeBatch(const Episode& ep, const FeatureCache& features, bool include_pseudo,
                              std::vector<ClassId>* classes = nullptr);

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_BENCHMARK_H_
