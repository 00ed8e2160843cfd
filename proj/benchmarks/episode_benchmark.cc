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

#include "pseudoshot/benchmark.h"
#include "pseudoshot/evaluation.h"

namespace pseudoshot {
namespace {

const Benchmark& DefaultBench() {
  static const Benchmark b = MakeSyntheticBenchmark(SynthConfig{}, SplitConfig{}, 1);
  return b;
}

void BM_SampleEpisode(benchmark::State& state) {
  const EpisodeSources src = DefaultBench().Sources();
  EpisodeConfig cfg;
  cfg.level = PruneLevel(static_cast<int>(state.range(0)));
  uint64_t i = 0;
  for (auto _ : state) {
    Rng rng = MakeStream(1, i++);
    benchmark::DoNotOptimize(SampleEpisode(src, Phase::kTest, cfg, rng).auxiliary_pool_size);
  }
}
BENCHMARK(BM_SampleEpisode)->DenseRange(0, 3);

// One masking-model training step (forward and backward) on cached features.
void BM_MaskingEpisodeStep(benchmark::State& state) {
  Rng rng(2);
  nn::BackboneConfig bc;
  bc.scale = 0.5;
  const nn::Backbone backbone(bc, rng);
  const FeatureCache features(backbone, DefaultBench().store);
  const MaskingModel model(static_cast<int>(features.feature_shape()[0]), 10.0, rng);
  const Episode ep = EvaluationEpisode(DefaultBench(), Phase::kTest, EpisodeConfig{}, 1, 0);
  const EpisodeBatch batch = MakeEpisodeBatch(ep, features, true);
  const nn::ParamList params = model.Parameters();
  for (auto _ : state) {
    nn::Backward(nn::SoftmaxCrossEntropy(MaskingEpisodeForward(model, batch).logits, batch.query_labels));
    nn::ZeroGrads(params);
  }
}
BENCHMARK(BM_MaskingEpisodeStep)->Unit(benchmark::kMillisecond);

void BM_EpisodeAccuracy(benchmark::State& state) {
  Rng rng(3);
  nn::BackboneConfig bc;
  bc.scale = 0.5;
  const nn::Backbone backbone(bc, rng);
  const FeatureCache features(backbone, DefaultBench().store);
  const MaskingModel model(static_cast<int>(features.feature_shape()[0]), 10.0, rng);
  const Episode ep = EvaluationEpisode(DefaultBench(), Phase::kTest, EpisodeConfig{}, 1, 0);
  const auto kind = static_cast<ModelKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(EpisodeAccuracy(kind, ep, {&features, &model}, EvalConfig{}));
  state.SetLabel(ModelKindName(kind));
}
BENCHMARK(BM_EpisodeAccuracy)
    ->Arg(static_cast<int>(ModelKind::kBasic))
    ->Arg(static_cast<int>(ModelKind::kMasking))
    ->Arg(static_cast<int>(ModelKind::kMsKMeans))
    ->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace pseudoshot

BENCHMARK_MAIN();
