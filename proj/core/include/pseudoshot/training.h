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

#ifndef PSEUDOSHOT_TRAINING_H_
#define PSEUDOSHOT_TRAINING_H_

#include <string>
#include <vector>

#include "pseudoshot/benchmark.h"
#include "pseudoshot/episodes.h"
#include "pseudoshot/layers.h"
#include "pseudoshot/models.h"
#include "pseudoshot/optimizer.h"

namespace pseudoshot {

struct TrainReport {
  std::string phase;  // "pretrain" or "meta"
  int epochs = 0;
  int steps_per_epoch = 0;
  double final_loss = 0.0;
  std::vector<double> loss_curve;  // one entry per optimizer step
  // Meta-training only: validation accuracy after each epoch, and the epoch
  // (0-based) whose parameters were kept; -1 when none ran.
  std::vector<double> val_accuracy;
  int best_epoch = -1;
  size_t label_space = 0;
  size_t helper_classes = 0;
  std::string checkpoint;
  std::string config_json;
  uint64_t seed = 0;
};

struct PretrainConfig {
  int epochs = 30;
  int batch_size = 32;
  nn::SgdConfig sgd{0.05, 0.9, 5e-4, 0.1, {18, 24}, 5.0};
  // Add the training classes' pseudo-shot classes to the label space.
  bool use_pseudo = true;
  // Prune level used to pick those classes.
  PruneLevel level{3};
  // How the backbone output is reduced before the linear head.
  Pooling pooling = Pooling::kFlatten;

  void Validate() const;
};

struct PretrainResult {
  nn::Backbone backbone;
  TrainReport report;
  // Label i of the discarded linear head.
  std::vector<ClassId> label_classes;
};

// Whole-dataset classification over the training classes plus the classes
// chosen as their pseudo shots (k_prime images per training class, split as
// in an episode). The linear head is discarded afterwards.
PretrainResult PretrainEmbedder(const Benchmark& bench, const nn::BackboneConfig& backbone,
                                const PretrainConfig& cfg, const EpisodeConfig& episode, uint64_t seed);

struct MetaTrainConfig {
  int epochs = 60;
  int episodes_per_epoch = 20;
  int val_episodes = 40;
  nn::SgdConfig sgd{0.05, 0.9, 5e-4, 0.1, {20, 40}};
  double initial_temperature = 10.0;
  bool use_helpers = true;
  Pooling pooling = Pooling::kFlatten;
  // Each training episode uses a level drawn uniformly from this list;
  // validation cycles through it.
  std::vector<int> levels{0, 1, 2, 3};

  void Validate() const;
};

struct MetaTrainResult {
  MaskingModel model;
  TrainReport report;
};

// Episodic training of f_theta, f_beta and the temperature on frozen
// backbone features. Support classes come from train + helper classes. The
// parameters of the epoch with the best validation accuracy are returned.
MetaTrainResult MetaTrainMasking(const Benchmark& bench, const FeatureCache& features, const MetaTrainConfig& cfg,
                                 const EpisodeConfig& episode, uint64_t seed);

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_TRAINING_H_
