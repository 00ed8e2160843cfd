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

#include "pseudoshot/training.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pseudoshot/error.h"

namespace pseudoshot {
namespace {

// Rng stream ids; every consumer of randomness gets its own stream.
constexpr uint64_t kPretrainInit = 21;
constexpr uint64_t kPretrainSelect = 22;
constexpr uint64_t kPretrainImages = 23;
constexpr uint64_t kPretrainShuffle = 24;
constexpr uint64_t kPretrainDropout = 25;
constexpr uint64_t kMetaInit = 31;
constexpr uint64_t kMetaEpisode = 32;
constexpr uint64_t kMetaVal = 33;

struct Sample {
  ImageRef ref;
  int label;
};

double EpisodeAccuracy(const Tensor& logits, const std::vector<int>& labels) {
  const std::vector<int> pred = ArgmaxRows(logits);
  int correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

}  // namespace

void PretrainConfig::Validate() const {
  if (epochs < 0) throw ConfigError("pretrain epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("pretrain batch size must be positive");
  sgd.Validate();
}

void MetaTrainConfig::Validate() const {
  if (epochs < 0) throw ConfigError("meta-train epochs must be non-negative");
  if (episodes_per_epoch < 1) throw ConfigError("episodes per epoch must be positive");
  if (val_episodes < 0) throw ConfigError("validation episodes must be non-negative");
  if (!(initial_temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (levels.empty()) throw ConfigError("meta-training needs at least one prune level");
  for (int l : levels) static_cast<void>(PruneLevel(l));
  sgd.Validate();
}

PretrainResult PretrainEmbedder(const Benchmark& bench, const nn::BackboneConfig& backbone_cfg,
                                const PretrainConfig& cfg, const EpisodeConfig& episode, uint64_t seed) {
  cfg.Validate();
  episode.Validate();
  const EpisodeSources src = bench.Sources();
  Rng init_rng = MakeStream(seed, kPretrainInit);
  PretrainResult result{nn::Backbone(backbone_cfg, init_rng), {}, {}};
  result.report.phase = "pretrain";
  result.report.seed = seed;

  std::vector<Sample> samples;
  for (const ClassId& c : bench.split.train) {
    const int label = static_cast<int>(result.label_classes.size());
    result.label_classes.push_back(c);
    for (int i = 0; i < bench.store.NumImages(c); ++i) samples.push_back({{c, i}, label});
  }

  if (cfg.use_pseudo && episode.k_prime > 0) {
    EpisodeConfig ecfg = episode;
    ecfg.level = cfg.level;
    Rng select_rng = MakeStream(seed, kPretrainSelect);
    Rng image_rng = MakeStream(seed, kPretrainImages);
    std::set<ImageRef> pseudo_refs;
    for (const ClassId& c : bench.split.train) {
      ClassSet pool = AuxiliaryPool(src, Phase::kTrain, {c}, ecfg);
      for (const ClassId& t : bench.split.train) pool.erase(t);
      if (pool.empty()) continue;
      const SelectionResult sel = ecfg.selection == SelectionMethod::kSemantic
                                      ? SelectPseudoClasses(bench.embeddings, c, pool, ecfg.n_prime)
                                      : SelectRandomClasses(bench.embeddings, c, pool, ecfg.n_prime, select_rng);
      if (sel.chosen_classes.empty()) continue;
      for (const auto& [cls, count] : DistributeQuota(ecfg.k_prime, sel)) {
        if (count == 0) continue;
        for (int i : SampleImageIndices(bench.store, cls, count, image_rng)) pseudo_refs.insert({cls, i});
      }
    }
    std::map<ClassId, int> pseudo_label;
    for (const ImageRef& r : pseudo_refs) {
      auto [it, fresh] = pseudo_label.emplace(r.class_id, static_cast<int>(result.label_classes.size()));
      if (fresh) result.label_classes.push_back(r.class_id);
      samples.push_back({r, it->second});
    }
  }
  if (result.label_classes.size() == bench.split.train.size()) {
    spdlog::warn("pretraining without pseudo-shot classes ({} training classes only)", bench.split.train.size());
  }
  result.report.label_space = result.label_classes.size();

  const Shape out_shape = result.backbone.config().OutputShape();
  const int feature_dim =
      static_cast<int>(cfg.pooling == Pooling::kGap ? out_shape[0] : ShapeSize(out_shape));
  nn::Linear head(feature_dim, static_cast<int>(result.label_classes.size()), init_rng);
  nn::ParamList params = result.backbone.Parameters();
  const nn::ParamList head_params = head.Parameters("head");
  params.insert(params.end(), head_params.begin(), head_params.end());
  nn::Sgd opt(params, cfg.sgd);

  const size_t batch = static_cast<size_t>(cfg.batch_size);
  result.report.steps_per_epoch = static_cast<int>((samples.size() + batch - 1) / batch);
  Rng dropout_rng = MakeStream(seed, kPretrainDropout);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle = MakeStream(seed, kPretrainShuffle, static_cast<uint64_t>(epoch));
    std::vector<Sample> order = samples;
    std::shuffle(order.begin(), order.end(), shuffle);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += batch) {
      const size_t end = std::min(order.size(), start + batch);
      std::vector<Tensor> images;
      std::vector<int> labels;
      for (size_t i = start; i < end; ++i) {
        images.push_back(bench.store.Image(order[i].ref));
        labels.push_back(order[i].label);
      }
      nn::Var feats = result.backbone.Forward(nn::Var(Stack(images)), true, &dropout_rng);
      nn::Var loss = nn::SoftmaxCrossEntropy(head.Forward(cfg.pooling == Pooling::kGap ? nn::GlobalAvgPool(feats) : nn::Flatten(feats)), labels);
      nn::Backward(loss);
      opt.Step(epoch);
      result.report.loss_curve.push_back(loss.value()[0]);
      epoch_loss += loss.value()[0] * static_cast<double>(end - start);
    }
    spdlog::debug("pretrain epoch {} loss {:.4f} lr {:.5f}", epoch, epoch_loss / static_cast<double>(order.size()),
                  opt.learning_rate());
  }
  result.report.epochs = cfg.epochs;
  if (!result.report.loss_curve.empty()) result.report.final_loss = result.report.loss_curve.back();
  return result;
}

MetaTrainResult MetaTrainMasking(const Benchmark& bench, const FeatureCache& features, const MetaTrainConfig& cfg,
                                 const EpisodeConfig& episode, uint64_t seed) {
  cfg.Validate();
  episode.Validate();
  const EpisodeSources src = bench.Sources();
  Rng init_rng = MakeStream(seed, kMetaInit);
  const int channels = static_cast<int>(features.feature_shape().at(0));
  MetaTrainResult result{MaskingModel(channels, cfg.initial_temperature, init_rng), {}};
  TrainReport& report = result.report;
  report.phase = "meta";
  report.seed = seed;
  report.steps_per_epoch = cfg.episodes_per_epoch;

  std::vector<ClassId> pool(bench.split.train.begin(), bench.split.train.end());
  if (cfg.use_helpers && !bench.split.helper.empty()) {
    pool.insert(pool.end(), bench.split.helper.begin(), bench.split.helper.end());
    report.helper_classes = bench.split.helper.size();
  } else {
    spdlog::info("meta-training without helper classes");
  }
  report.label_space = pool.size();

  const bool validate = cfg.val_episodes > 0 && static_cast<int>(bench.split.val.size()) >= episode.n_way;
  if (!validate && cfg.epochs > 0) spdlog::warn("no usable validation split; keeping the last epoch");
  std::vector<Episode> val_set;
  if (validate) {
    for (int j = 0; j < cfg.val_episodes; ++j) {
      EpisodeConfig ecfg = episode;
      ecfg.level = PruneLevel(cfg.levels[static_cast<size_t>(j) % cfg.levels.size()]);
      Rng rng = MakeStream(seed, kMetaVal, static_cast<uint64_t>(j));
      val_set.push_back(SampleEpisode(src, Phase::kVal, ecfg, rng));
    }
  }
  auto val_accuracy = [&]() {
    nn::NoGradGuard no_grad;
    double total = 0.0;
    for (const Episode& ep : val_set) {
      const EpisodeBatch b = MakeEpisodeBatch(ep, features, episode.k_prime > 0);
      total += EpisodeAccuracy(MaskingEpisodeForward(result.model, b, cfg.pooling).logits.value(), b.query_labels);
    }
    return total / static_cast<double>(val_set.size());
  };

  const nn::ParamList params = result.model.Parameters();
  nn::Sgd opt(params, cfg.sgd);
  std::vector<Tensor> best;
  double best_acc = -1.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = 0; i < cfg.episodes_per_epoch; ++i) {
      Rng rng = MakeStream(seed, kMetaEpisode,
                           static_cast<uint64_t>(epoch) * static_cast<uint64_t>(cfg.episodes_per_epoch) +
                               static_cast<uint64_t>(i));
      EpisodeConfig ecfg = episode;
      std::uniform_int_distribution<size_t> pick(0, cfg.levels.size() - 1);
      ecfg.level = PruneLevel(cfg.levels[pick(rng)]);
      const Episode ep = SampleEpisodeFromPool(src, Phase::kTrain, pool, ecfg, rng);
      const EpisodeBatch b = MakeEpisodeBatch(ep, features, ecfg.k_prime > 0);
      nn::Var loss = nn::SoftmaxCrossEntropy(MaskingEpisodeForward(result.model, b, cfg.pooling).logits,
                                             b.query_labels);
      nn::Backward(loss);
      opt.Step(epoch);
      report.loss_curve.push_back(loss.value()[0]);
    }
    if (validate) {
      const double acc = val_accuracy();
      report.val_accuracy.push_back(acc);
      if (acc > best_acc) {
        best_acc = acc;
        best = nn::SnapshotValues(params);
        report.best_epoch = epoch;
      }
      spdlog::debug("meta epoch {} val acc {:.4f}", epoch, acc);
    } else {
      report.best_epoch = epoch;
    }
  }
  if (!best.empty()) nn::RestoreValues(params, best);
  report.epochs = cfg.epochs;
  if (!report.loss_curve.empty()) report.final_loss = report.loss_curve.back();
  return result;
}

}  // namespace pseudoshot
