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

#include "pseudoshot/benchmark.h"

#include <algorithm>
#include <cmath>

#include "pseudoshot/error.h"

namespace pseudoshot {

void SplitConfig::Validate() const {
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0 || f > 1.0) throw ConfigError("split fractions must lie in [0, 1]");
    total += f;
  }
  if (total > 1.0 + 1e-9) throw ConfigError("split fractions sum to more than 1");
  if (helper_fraction < 0.0) throw ConfigError("helper fraction must be non-negative");
}

Benchmark MakeBenchmark(Taxonomy taxonomy, EmbeddingTable embeddings, DatasetStore store, const SplitConfig& cfg,
                        uint64_t seed) {
  cfg.Validate();
  ClassSet benchmark_classes;
  ClassSet universe;
  for (const ClassId& c : store.Classes()) {
    if (!taxonomy.Contains(c)) throw LookupError("store class '" + c + "' is not in the taxonomy");
    universe.insert(c);
    if (taxonomy.IsLeaf(c)) benchmark_classes.insert(c);
  }
  Rng rng = MakeStream(seed, 11);
  const int helpers = static_cast<int>(std::floor(
      cfg.helper_fraction * std::floor(cfg.fractions[0] * static_cast<double>(benchmark_classes.size()) + 1e-9) +
      1e-9));
  ClassSplit split = BuildSplits(taxonomy, benchmark_classes, cfg.fractions, helpers, embeddings, universe, rng,
                                 cfg.helper_aggregation);
  return {std::move(taxonomy), std::move(embeddings), std::move(store), std::move(split)};
}

Benchmark MakeSyntheticBenchmark(const SynthConfig& synth, const SplitConfig& cfg, uint64_t seed) {
  SyntheticData data = GenerateSynthetic(synth, seed);
  return MakeBenchmark(std::move(data.taxonomy), std::move(data.embeddings), std::move(data.store), cfg, seed);
}

FeatureCache::FeatureCache(const nn::Backbone& backbone, const DatasetStore& store) {
  shape_ = backbone.config().OutputShape();
  for (const auto& [c, images] : store.by_class()) features_[c] = backbone.Embed(images);
}

const FeatureMap& FeatureCache::Get(const ImageRef& ref) const {
  auto it = features_.find(ref.class_id);
  if (it == features_.end() || ref.index < 0 || ref.index >= static_cast<int>(it->second.size())) {
    throw LookupError("no cached feature for " + ref.class_id + "[" + std::to_string(ref.index) + "]");
  }
  return it->second[static_cast<size_t>(ref.index)];
}

namespace {

void Append(const FeatureCache& features, const std::vector<ImageRef>& refs, int label, std::vector<Tensor>* out,
            std::vector<int>* labels) {
  for (const ImageRef& r : refs) {
    out->push_back(features.Get(r));
    labels->push_back(label);
  }
}

}  // namespace

EpisodeBatch MakeEpisodeBatch(const Episode& ep, const FeatureCache& features, bool include_pseudo,
                              std::vector<ClassId>* classes) {
  std::vector<ClassId> sorted = ep.support_classes;
  std::sort(sorted.begin(), sorted.end());
  EpisodeBatch b;
  b.n_way = static_cast<int>(sorted.size());
  std::vector<Tensor> support, pseudo, query;
  for (size_t i = 0; i < sorted.size(); ++i) {
    const ClassId& c = sorted[i];
    const int label = static_cast<int>(i);
    Append(features, ep.support.at(c), label, &support, &b.support_labels);
    Append(features, ep.query.at(c), label, &query, &b.query_labels);
    if (include_pseudo) {
      if (auto it = ep.pseudo.find(c); it != ep.pseudo.end()) Append(features, it->second, label, &pseudo, &b.pseudo_labels);
    }
  }
  b.support = Stack(support);
  b.query = Stack(query);
  if (!pseudo.empty()) b.pseudo = Stack(pseudo);
  if (classes != nullptr) *classes = std::move(sorted);
  return b;
}

}  // namespace pseudoshot
