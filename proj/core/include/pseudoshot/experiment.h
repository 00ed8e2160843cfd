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

#ifndef PSEUDOSHOT_EXPERIMENT_H_
#define PSEUDOSHOT_EXPERIMENT_H_

#include <map>
#include <string>
#include <vector>

#include "pseudoshot/benchmark.h"
#include "pseudoshot/evaluation.h"
#include "pseudoshot/training.h"

namespace pseudoshot {

// Every knob of an end-to-end run.
struct ExperimentConfig {
  SynthConfig synth;
  SplitConfig split;
  nn::BackboneConfig backbone;
  EpisodeConfig episode;
  PretrainConfig pretrain;
  MetaTrainConfig meta;
  EvalConfig eval;
  int mi_bins = 32;
  int mi_episodes = 100;
  std::vector<int> levels{0, 1, 2, 3};
  std::vector<int> shots{1};
  std::vector<ModelKind> models{ModelKind::kBasic, ModelKind::kMasking, ModelKind::kMsKMeans, ModelKind::kNoAux};
  // Pretraining prunes at the deepest evaluated level unless set explicitly.
  bool pretrain_level_from_levels = true;

  void Validate() const;
  // Switches to the 100-epoch embedder and 300-epoch masking schedules.
  void UsePaperSchedule();
};

struct ExperimentResult {
  std::vector<TrainReport> train_reports;
  std::vector<EvalReport> eval_reports;
  // Trained artefacts of the full pipeline (absent parts stay default).
  nn::Backbone backbone;
  FeatureCache features;
  std::map<int, MaskingModel> masking_models;  // keyed by shot count
};

// Pretrain -> meta-train -> evaluate every requested (model, level, shot).
// The no_aux arm gets its own backbone pretrained on the training classes
// only. `bench` must come from the same config and seed.
ExperimentResult RunExperiment(const Benchmark& bench, const ExperimentConfig& cfg, uint64_t seed);

// Pretraining plus masking meta-training for one shot setting, with the same
// configuration and random streams RunExperiment uses.
struct TrainedMasking {
  nn::Backbone backbone;
  FeatureCache features;
  MaskingModel model;
  std::vector<TrainReport> train_reports;
};
TrainedMasking TrainMaskingPipeline(const Benchmark& bench, const ExperimentConfig& cfg, uint64_t seed, int shot);

enum class AblationArm { kNoAux, kRandomSelection, kNoHelper, kFull };
const char* AblationArmName(AblationArm a);
AblationArm ParseAblationArm(const std::string& s);

struct AblationRow {
  AblationArm arm = AblationArm::kFull;
  // Pooled over all seeds' episodes.
  EvalReport report;
  std::vector<double> per_seed_means;
};

// Each arm is trained and evaluated at cfg.levels.front() with the first
// shot setting. For each seed the benchmark and the evaluation episode
// draws are identical across arms.
std::vector<AblationRow> RunAblation(const ExperimentConfig& cfg, const std::vector<AblationArm>& arms,
                                     const std::vector<uint64_t>& seeds);

// JSON serialisations (schema-versioned) and tables.
std::string TrainReportToJson(const TrainReport& r);
std::string EvalReportToJson(const EvalReport& r);
std::string SummaryTableText(const std::vector<EvalReport>& reports);
std::string SummaryTableCsv(const std::vector<EvalReport>& reports);
std::string AblationTableText(const std::vector<AblationRow>& rows);
std::string AblationTableCsv(const std::vector<AblationRow>& rows);

inline constexpr int kReportSchemaVersion = 1;

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_EXPERIMENT_H_
