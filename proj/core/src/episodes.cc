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

#include "pseudoshot/episodes.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "pseudoshot/error.h"

namespace pseudoshot {

const char* PhaseName(Phase p) {
  switch (p) {
    case Phase::kTrain:
      return "train";
    case Phase::kVal:
      return "val";
    case Phase::kTest:
      return "test";
  }
  return "?";
}

void EpisodeConfig::Validate() const {
  if (n_way < 1 || k_shot < 1 || q_query < 1) {
    throw ConfigError("episode: n_way, k_shot and q_query must be positive");
  }
  if (k_prime < 0) throw ConfigError("episode: k_prime must be non-negative");
  if (k_prime > 0 && n_prime < 1) throw ConfigError("episode: n_prime must be positive");
}

void ClassSplit::Validate() const {
  auto overlap = [](const ClassSet& a, const ClassSet& b) {
    for (const ClassId& c : a) {
      if (b.count(c)) return true;
    }
    return false;
  };
  if (overlap(train, val) || overlap(train, test) || overlap(val, test)) {
    throw ConfigError("train/val/test splits are not disjoint");
  }
  if (overlap(helper, train) || overlap(helper, val) || overlap(helper, test)) {
    throw ConfigError("helper classes overlap a split");
  }
}

const ClassSet& ClassSplit::ForPhase(Phase p) const {
  switch (p) {
    case Phase::kTrain:
      return train;
    case Phase::kVal:
      return val;
    case Phase::kTest:
      return test;
  }
  return test;
}

const DatasetStore& EpisodeSources::StoreFor(const ClassId& c) const {
  return store.HasClass(c) ? store : aux_store;
}

std::vector<std::pair<ClassId, int>> DistributeQuota(int k_prime, const SelectionResult& chosen) {
  const int n = static_cast<int>(chosen.chosen_classes.size());
  if (n < 1) throw ValueError("cannot distribute a quota over zero classes");
  if (k_prime < 0) throw ValueError("quota must be non-negative");
  const int base = k_prime / n;
  const int extra = k_prime % n;
  std::vector<std::pair<ClassId, int>> out;
  for (int i = 0; i < n; ++i) {
    out.emplace_back(chosen.chosen_classes[static_cast<size_t>(i)], base + (i < extra ? 1 : 0));
  }
  return out;
}

ClassSet AuxiliaryPool(const EpisodeSources& src, Phase phase,
                       const std::vector<ClassId>& support_classes, const EpisodeConfig& cfg) {
  ClassSet targets;
  if (cfg.prune_support) {
    targets = src.split.test;
    targets.insert(support_classes.begin(), support_classes.end());
  } else if (phase == Phase::kTest) {
    targets.insert(support_classes.begin(), support_classes.end());
  } else {
    targets = src.split.test;
  }
  ClassSet universe;
  for (const ClassId& c : src.split.auxiliary_universe) {
    if (src.aux_store.HasClass(c)) universe.insert(universe.end(), c);
  }
  return src.taxonomy.PruneLevelSet(universe, targets, cfg.level);
}

Episode SampleEpisodeFromPool(const EpisodeSources& src, Phase phase,
                              const std::vector<ClassId>& pool, const EpisodeConfig& cfg,
                              Rng& rng) {
  cfg.Validate();
  if (static_cast<int>(pool.size()) < cfg.n_way) {
    throw SamplingError(std::string("phase '") + PhaseName(phase) + "' has " +
                        std::to_string(pool.size()) + " classes, need " +
                        std::to_string(cfg.n_way));
  }
  Episode ep;
  ep.phase = phase;
  ep.level = cfg.level;

  std::vector<ClassId> classes = pool;
  for (int i = 0; i < cfg.n_way; ++i) {
    std::uniform_int_distribution<size_t> pick(static_cast<size_t>(i), classes.size() - 1);
    std::swap(classes[static_cast<size_t>(i)], classes[pick(rng)]);
  }
  classes.resize(static_cast<size_t>(cfg.n_way));
  ep.support_classes = classes;

  const int need = cfg.k_shot + cfg.q_query;
  for (const ClassId& c : classes) {
    const DatasetStore& store = src.StoreFor(c);
    if (store.NumImages(c) < need) {
      throw SamplingError("class '" + c + "' has " + std::to_string(store.NumImages(c)) +
                          " images, need " + std::to_string(need) + " for support + query");
    }
    const std::vector<int> idx = SampleImageIndices(store, c, need, rng);
    auto& s = ep.support[c];
    auto& q = ep.query[c];
    for (int i = 0; i < need; ++i) (i < cfg.k_shot ? s : q).push_back({c, idx[static_cast<size_t>(i)]});
  }

  if (cfg.k_prime == 0) {
    for (const ClassId& c : classes) ep.pseudo[c];
    return ep;
  }

  const ClassSet pool_aux = AuxiliaryPool(src, phase, classes, cfg);
  ep.auxiliary_pool_size = pool_aux.size();
  if (pool_aux.empty()) {
    throw EpisodeError("no auxiliary classes remain at level " + std::to_string(cfg.level.value) +
                       "; use a lower prune level");
  }
  for (const ClassId& c : classes) {
    SelectionResult sel = cfg.selection == SelectionMethod::kSemantic
                              ? SelectPseudoClasses(src.embeddings, c, pool_aux, cfg.n_prime)
                              : SelectRandomClasses(src.embeddings, c, pool_aux, cfg.n_prime, rng);
    auto& shots = ep.pseudo[c];
    for (const auto& [cls, count] : DistributeQuota(cfg.k_prime, sel)) {
      if (count == 0) continue;
      for (int i : SampleImageIndices(src.aux_store, cls, count, rng)) shots.push_back({cls, i});
    }
    ep.provenance.emplace(c, std::move(sel));
  }
  return ep;
}

Episode SampleEpisode(const EpisodeSources& src, Phase phase, const EpisodeConfig& cfg, Rng& rng) {
  const ClassSet& classes = src.split.ForPhase(phase);
  return SampleEpisodeFromPool(src, phase, std::vector<ClassId>(classes.begin(), classes.end()), cfg,
                               rng);
}

ClassSplit BuildSplits(const Taxonomy& t, const ClassSet& all_classes,
                       const std::array<double, 3>& fractions, int helper_count,
                       const EmbeddingTable& e, const ClassSet& auxiliary_universe, Rng& rng,
                       HelperAggregation aggregation) {
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw ConfigError("split fractions must be non-negative");
    total += f;
  }
  if (total > 1.0 + 1e-9) throw ConfigError("split fractions sum to more than 1");
  for (const ClassId& c : all_classes) {
    if (!t.Contains(c)) throw LookupError("split class '" + c + "' is not in the taxonomy");
  }
  const auto n = static_cast<double>(all_classes.size());
  std::array<size_t, 3> sizes{};
  for (size_t i = 0; i < 3; ++i) sizes[i] = static_cast<size_t>(std::floor(fractions[i] * n + 1e-9));
  if (sizes[0] < 1 || sizes[2] < 1) {
    throw ConfigError("too few classes (" + std::to_string(all_classes.size()) +
                      ") for the requested split fractions");
  }
  std::vector<ClassId> order(all_classes.begin(), all_classes.end());
  std::shuffle(order.begin(), order.end(), rng);

  ClassSplit split;
  size_t pos = 0;
  for (size_t k = 0; k < sizes[0]; ++k) split.train.insert(order[pos++]);
  for (size_t k = 0; k < sizes[1]; ++k) split.val.insert(order[pos++]);
  for (size_t k = 0; k < sizes[2]; ++k) split.test.insert(order[pos++]);
  split.auxiliary_universe = auxiliary_universe;

  if (helper_count > 0) {
    ClassSet candidates;
    for (const ClassId& c : auxiliary_universe) {
      // Helpers stand in for benchmark classes during meta-training, so they
      // come from the leaves: a shallow helper's high-level ancestor is the
      // root, which would prune the whole auxiliary pool.
      if (!t.IsLeaf(c)) continue;
      if (!split.train.count(c) && !split.val.count(c) && !split.test.count(c)) candidates.insert(c);
    }
    if (candidates.empty()) {
      spdlog::warn("no helper candidates outside the splits; continuing without helpers");
    } else {
      const auto chosen = SelectHelperClasses(e, split.train, candidates, helper_count, aggregation);
      split.helper.insert(chosen.begin(), chosen.end());
    }
  }
  split.Validate();
  return split;
}

std::string EpisodeToJson(const Episode& ep) {
  using nlohmann::json;
  auto refs = [](const std::vector<ImageRef>& v) {
    json a = json::array();
    for (const ImageRef& r : v) a.push_back({{"class", r.class_id}, {"index", r.index}});
    return a;
  };
  json j;
  j["phase"] = PhaseName(ep.phase);
  j["level"] = ep.level.value;
  j["support_classes"] = ep.support_classes;
  j["auxiliary_pool_size"] = ep.auxiliary_pool_size;
  json classes = json::array();
  for (const ClassId& c : ep.support_classes) {
    json e;
    e["class"] = c;
    e["support"] = refs(ep.support.at(c));
    e["query"] = refs(ep.query.at(c));
    e["pseudo"] = refs(ep.pseudo.at(c));
    if (auto it = ep.provenance.find(c); it != ep.provenance.end()) {
      e["selection"] = it->second.method == SelectionMethod::kSemantic ? "semantic" : "random";
      e["chosen_classes"] = it->second.chosen_classes;
      json scores = json::array();
      for (double s : it->second.scores) scores.push_back(std::round(s * 1e8) / 1e8);
      e["scores"] = scores;
    }
    classes.push_back(std::move(e));
  }
  j["classes"] = std::move(classes);
  return j.dump(2);
}

}  // namespace pseudoshot
