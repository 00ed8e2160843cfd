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

#include "pseudoshot/autodiff.h"
#include "pseudoshot/layers.h"

namespace pseudoshot {
namespace {

Tensor Random(Shape s, Rng& rng) {
  std::normal_distribution<double> g;
  Tensor t(std::move(s));
  for (double& v : t.vec()) v = g(rng);
  return t;
}

// args: batch, channels, side
void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const int n = static_cast<int>(state.range(0)), c = static_cast<int>(state.range(1));
  const int side = static_cast<int>(state.range(2));
  const nn::Var x(Random({n, c, side, side}, rng));
  const nn::Var w(Random({c, c, 3, 3}, rng));
  nn::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(nn::Conv2d(x, w, 1).value().raw());
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Conv2dForward)->Args({32, 8, 16})->Args({32, 32, 8})->Args({32, 64, 4});

void BM_Conv2dBackward(benchmark::State& state) {
  Rng rng(2);
  const int n = static_cast<int>(state.range(0)), c = static_cast<int>(state.range(1));
  const int side = static_cast<int>(state.range(2));
  const nn::Var x(Random({n, c, side, side}, rng), true);
  const nn::Var w(Random({c, c, 3, 3}, rng), true);
  for (auto _ : state) {
    nn::Backward(nn::Sum(nn::Conv2d(x, w, 1)));
    benchmark::DoNotOptimize(w.grad().raw());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Conv2dBackward)->Args({32, 8, 16})->Args({32, 32, 8});

// Inference through the whole embedding network at a given width scale
// (percent).
void BM_BackboneEmbed(benchmark::State& state) {
  Rng rng(3);
  nn::BackboneConfig cfg;
  cfg.scale = static_cast<double>(state.range(0)) / 100.0;
  const nn::Backbone backbone(cfg, rng);
  std::vector<Tensor> images;
  for (int i = 0; i < 64; ++i) images.push_back(Random({3, 16, 16}, rng));
  for (auto _ : state) benchmark::DoNotOptimize(backbone.Embed(images).data());
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_BackboneEmbed)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace pseudoshot

BENCHMARK_MAIN();
