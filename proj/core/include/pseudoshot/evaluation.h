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

#ifndef PSEUDOSHOT_EVALUATION_H_
#define PSEUDOSHOT_EVALUATION_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pseudoshot/benchmark.h"
#include "pseudoshot/episodes.h"
#include "pseudoshot/models.h"

namespace pseudoshot {

enum class ModelKind { kBasic, kMasking, kMsKMeans, kNoAux };
const char* ModelKindName(ModelKind k);
ModelKind ParseModelKind(const std::string& s);

struct EvalConfig {
  int n_episodes = 800;
  // Worker threads; episodes are keyed by index, so results do not depend
  // on this.
  int parallel = 1;
  // Basic-model softmax temperature (does not change predictions).
  double temperature = 10.0;
  int mskmeans_iterations = 3;
  Pooling pooling = Pooling::kFlatten;
  // Replace every mask with 1 (masking model only).
  bool unit_mask = false;

  void Validate() const;
};

struct EvalReport {
  ModelKind kind = ModelKind::kBasic;
  Phase phase = Phase::kTest;
  int level = 0;
  int k_shot = 1;
  int n_episodes = 0;
  double mean_accuracy = 0.0;
  double ci95_halfwidth = 0.0;
  std::vector<double> per_episode_accuracies;
  std::string protocol;
  std::string config_json;
  uint64_t seed = 0;
};

// What a model kind needs. `features` always holds the features the kind is
// evaluated on (for kNoAux, those of the backbone pretrained without
// auxiliary classes); `masking` is required for kMasking.
struct EvalModels {
  const FeatureCache* features = nullptr;
  const MaskingModel* masking = nullptr;
};

// Episode i at a given level is drawn from its own rng stream, so every model
// kind sees the same support and query images for the same seed.
Episode EvaluationEpisode(const Benchmark& bench, Phase phase, const EpisodeConfig& cfg, uint64_t seed, int index);

// Accuracy of one episode.
double EpisodeAccuracy(ModelKind kind, const Episode& ep, const EvalModels& models, const EvalConfig& cfg);

// Throws EpisodeError when the level leaves no auxiliary classes.
EvalReport Evaluate(ModelKind kind, const Benchmark& bench, const EvalModels& models, Phase phase,
                    const EpisodeConfig& episode, const EvalConfig& cfg, uint64_t seed);

// Builds a report from per-episode accuracies.
EvalReport SummarizeAccuracies(std::vector<double> accuracies);

struct MiSummary {
  int bins = 32;
  int n_episodes = 0;
  // One value per (support image, pseudo image) pair of a class.
  std::vector<double> support_raw;     // MI(f(x_s), f(x_p))
  std::vector<double> support_masked;  // MI(f(x_s), f(x_p) * m_c)
  std::vector<double> refined;         // MI(f_beta(f(x_s)), f_beta(f(x_p) * m_c))
  // One value per (query, own-class centroid) pair, masking model.
  std::vector<double> query_centroid;

  double Mean(const std::vector<double>& v) const;
};

MiSummary AnalyzeMi(const Benchmark& bench, const FeatureCache& features, const MaskingModel& model,
                    const EpisodeConfig& episode, int n_episodes, int bins, uint64_t seed,
                    Pooling pooling = Pooling::kFlatten);

// Masks of an episode's support classes under the masking model.
std::map<ClassId, MaskBundle> EpisodeMasks(const Episode& ep, const FeatureCache& features, const MaskNet& f_theta);

// Per support class writes
//   mask_<class>.ppm   colour-mapped mask upsampled to the image size
//   mask_<class>.psa   the raw (1, H', W') mask
//   panel_<class>.ppm  support image | first pseudo image | mask overlay
// and returns the overlay paths. Throws IoError when out_dir is unusable.
std::vector<std::filesystem::path> ExportMaskHeatmaps(const Benchmark& bench, const Episode& ep,
                                                      const std::map<ClassId, MaskBundle>& masks,
                                                      const std::filesystem::path& out_dir);

// Colour for a value in [0, 1] (blue to red through green).
std::array<double, 3> HeatColor(double v);

// Nearest-neighbour upsampling of a (1, h, w) mask to (1, H, W).
Tensor UpsampleNearest(const Tensor& mask, int64_t height, int64_t width);

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_EVALUATION_H_
