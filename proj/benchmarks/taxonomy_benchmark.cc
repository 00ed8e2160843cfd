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


#include <benchmark/benchmark.h>

#include "pseudoshot/dataset.h"
#include "pseudoshot/semantics.h"
#include "pseudoshot/taxonomy.h"

namespace pseudoshot {
namespace {

// args: tree depth (binary), prune level
void BM_PruneLevelSet(benchmark::State& state) {
  SynthConfig cfg;
  cfg.depth = static_cast<int>(state.range(0));
  cfg.samples_per_class = 1;
  cfg.image_side = 4;
  const SyntheticData data = GenerateSynthetic(cfg, 1);
  const ClassSet universe(data.taxonomy.nodes().begin(), data.taxonomy.nodes().end());
  const std::vector<ClassId> leaves = data.taxonomy.Leaves();
  ClassSet targets;
  for (size_t i = 0; i < leaves.size(); i += 9) targets.insert(leaves[i]);
  const PruneLevel level(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(data.taxonomy.PruneLevelSet(universe, targets, level).size());
  state.counters["nodes"] = static_cast<double>(universe.size());
}
BENCHMARK(BM_PruneLevelSet)->Args({7, 0})->Args({7, 3})->Args({10, 0})->Args({10, 3});

void BM_SelectPseudoClasses(benchmark::State& state) {
  SynthConfig cfg;
  cfg.depth = static_cast<int>(state.range(0));
  cfg.samples_per_class = 1;
  cfg.image_side = 4;
  const SyntheticData data = GenerateSynthetic(cfg, 2);
  const std::vector<ClassId> leaves = data.taxonomy.Leaves();
  const ClassSet candidates(data.taxonomy.nodes().begin(), data.taxonomy.nodes().end());
  for (auto _ : state) {
    benchmark::DoNotOptimize(SelectPseudoClasses(data.embeddings, leaves.front(), candidates, 3).scores.data());
  }
  state.counters["candidates"] = static_cast<double>(candidates.size());
}
BENCHMARK(BM_SelectPseudoClasses)->Arg(7)->Arg(10);

}  // namespace
}  // namespace pseudoshot

BENCHMARK_MAIN();
