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

#include "pseudoshot/experiment.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "pseudoshot/error.h"

namespace pseudoshot {
namespace {

using nlohmann::json;

bool Wants(const ExperimentConfig& cfg, ModelKind k) {
  return std::find(cfg.models.begin(), cfg.models.end(), k) != cfg.models.end();
}

nn::BackboneConfig BackboneFor(const Benchmark& bench, const ExperimentConfig& cfg) {
  nn::BackboneConfig b = cfg.backbone;
  b.input_shape = bench.store.image_shape();
  return b;
}

PretrainConfig PretrainFor(const ExperimentConfig& cfg, bool use_pseudo) {
  PretrainConfig p = cfg.pretrain;
  p.use_pseudo = use_pseudo;
  if (cfg.pretrain_level_from_levels) p.level = PruneLevel(*std::max_element(cfg.levels.begin(), cfg.levels.end()));
  return p;
}

MetaTrainConfig MetaFor(const ExperimentConfig& cfg, bool use_helpers) {
  MetaTrainConfig m = cfg.meta;
  m.levels = cfg.levels;
  m.use_helpers = use_helpers;
  m.pooling = cfg.eval.pooling;
  return m;
}

std::string Fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string Cell(const EvalReport& r) {
  return Fixed(100.0 * r.mean_accuracy, 2) + " +- " + Fixed(100.0 * r.ci95_halfwidth, 2);
}

std::string AlignedTable(const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream os;
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      os << std::left << std::setw(static_cast<int>(width[i])) << row[i] << (i + 1 < row.size() ? "  " : "");
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace

void ExperimentConfig::Validate() const {
  synth.Validate();
  split.Validate();
  backbone.Validate();
  episode.Validate();
  pretrain.Validate();
  meta.Validate();
  eval.Validate();
  if (mi_bins < 2) throw ConfigError("MI needs at least 2 bins");
  if (mi_episodes < 1) throw ConfigError("MI analysis needs at least one episode");
  if (levels.empty()) throw ConfigError("at least one prune level is required");
  for (int l : levels) static_cast<void>(PruneLevel(l));
  if (shots.empty()) throw ConfigError("at least one shot setting is required");
  for (int k : shots) {
    if (k < 1) throw ConfigError("shot counts must be positive");
  }
  if (models.empty()) throw ConfigError("at least one model kind is required");
}

void ExperimentConfig::UsePaperSchedule() {
  pretrain.epochs = 100;
  pretrain.sgd.decay_epochs = {60, 80};
  meta.epochs = 300;
  meta.sgd.decay_epochs = {100, 200};
}

ExperimentResult RunExperiment(const Benchmark& bench, const ExperimentConfig& cfg, uint64_t seed) {
  cfg.Validate();
  ExperimentResult out;
  const nn::BackboneConfig backbone = BackboneFor(bench, cfg);
  const bool need_full = Wants(cfg, ModelKind::kBasic) || Wants(cfg, ModelKind::kMasking) ||
                         Wants(cfg, ModelKind::kMsKMeans);

  FeatureCache& full_features = out.features;
  FeatureCache plain_features;
  if (need_full) {
    spdlog::info("pretraining embedder (seed {})", seed);
    PretrainResult pre = PretrainEmbedder(bench, backbone, PretrainFor(cfg, true), cfg.episode, seed);
    out.train_reports.push_back(pre.report);
    full_features = FeatureCache(pre.backbone, bench.store);
    out.backbone = std::move(pre.backbone);
  }
  if (Wants(cfg, ModelKind::kNoAux)) {
    spdlog::info("pretraining embedder without auxiliary classes (seed {})", seed);
    PretrainResult pre = PretrainEmbedder(bench, backbone, PretrainFor(cfg, false), cfg.episode, seed);
    pre.report.phase = "pretrain_no_aux";
    out.train_reports.push_back(pre.report);
    plain_features = FeatureCache(pre.backbone, bench.store);
  }

  for (int shot : cfg.shots) {
    EpisodeConfig episode = cfg.episode;
    episode.k_shot = shot;
    MetaTrainResult meta;
    if (Wants(cfg, ModelKind::kMasking)) {
      spdlog::info("meta-training masking model ({}-shot, seed {})", shot, seed);
      meta = MetaTrainMasking(bench, full_features, MetaFor(cfg, cfg.meta.use_helpers), episode, seed);
      out.train_reports.push_back(meta.report);
      out.masking_models[shot] = meta.model;
    }
    for (ModelKind kind : cfg.models) {
      for (int level : cfg.levels) {
        EpisodeConfig ecfg = episode;
        ecfg.level = PruneLevel(level);
        EvalModels models{kind == ModelKind::kNoAux ? &plain_features : &full_features, &meta.model};
        out.eval_reports.push_back(Evaluate(kind, bench, models, Phase::kTest, ecfg, cfg.eval, seed));
        spdlog::info("{} level {} {}-shot: {:.4f}", ModelKindName(kind), level, shot,
                     out.eval_reports.back().mean_accuracy);
      }
    }
  }
  return out;
}

TrainedMasking TrainMaskingPipeline(const Benchmark& bench, const ExperimentConfig& cfg, uint64_t seed, int shot) {
  cfg.Validate();
  TrainedMasking out;
  PretrainResult pre = PretrainEmbedder(bench, BackboneFor(bench, cfg), PretrainFor(cfg, true), cfg.episode, seed);
  out.train_reports.push_back(pre.report);
  out.features = FeatureCache(pre.backbone, bench.store);
  out.backbone = std::move(pre.backbone);
  EpisodeConfig episode = cfg.episode;
  episode.k_shot = shot;
  MetaTrainResult meta = MetaTrainMasking(bench, out.features, MetaFor(cfg, cfg.meta.use_helpers), episode, seed);
  out.train_reports.push_back(meta.report);
  out.model = std::move(meta.model);
  return out;
}

const char* AblationArmName(AblationArm a) {
  switch (a) {
    case AblationArm::kNoAux:
      return "no_aux";
    case AblationArm::kRandomSelection:
      return "random_selection";
    case AblationArm::kNoHelper:
      return "no_helper";
    case AblationArm::kFull:
      return "full";
  }
  return "?";
}

AblationArm ParseAblationArm(const std::string& s) {
  if (s == "no_aux") return AblationArm::kNoAux;
  if (s == "random_selection") return AblationArm::kRandomSelection;
  if (s == "no_helper") return AblationArm::kNoHelper;
  if (s == "full") return AblationArm::kFull;
  throw ConfigError("unknown ablation arm '" + s + "' (expected no_aux, random_selection, no_helper or full)");
}

std::vector<AblationRow> RunAblation(const ExperimentConfig& cfg, const std::vector<AblationArm>& arms,
                                     const std::vector<uint64_t>& seeds) {
  cfg.Validate();
  if (arms.empty()) throw ConfigError("ablation needs at least one arm");
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  std::vector<AblationRow> rows(arms.size());
  std::vector<std::vector<double>> pooled(arms.size());
  for (uint64_t seed : seeds) {
    const Benchmark bench = MakeSyntheticBenchmark(cfg.synth, cfg.split, seed);
    const nn::BackboneConfig backbone = BackboneFor(bench, cfg);
    EpisodeConfig episode = cfg.episode;
    episode.k_shot = cfg.shots.front();
    episode.level = PruneLevel(cfg.levels.front());

    std::map<SelectionMethod, FeatureCache> features;
    auto features_for = [&](SelectionMethod method) -> const FeatureCache& {
      auto it = features.find(method);
      if (it != features.end()) return it->second;
      EpisodeConfig e = episode;
      e.selection = method;
      PretrainResult pre = PretrainEmbedder(bench, backbone, PretrainFor(cfg, true), e, seed);
      return features.emplace(method, FeatureCache(pre.backbone, bench.store)).first->second;
    };

    for (size_t a = 0; a < arms.size(); ++a) {
      EvalReport r;
      if (arms[a] == AblationArm::kNoAux) {
        PretrainResult pre = PretrainEmbedder(bench, backbone, PretrainFor(cfg, false), episode, seed);
        const FeatureCache plain(pre.backbone, bench.store);
        r = Evaluate(ModelKind::kNoAux, bench, {&plain, nullptr}, Phase::kTest, episode, cfg.eval, seed);
      } else {
        EpisodeConfig e = episode;
        e.selection = arms[a] == AblationArm::kRandomSelection ? SelectionMethod::kRandom : SelectionMethod::kSemantic;
        const FeatureCache& feats = features_for(e.selection);
        const MetaTrainResult meta =
            MetaTrainMasking(bench, feats, MetaFor(cfg, arms[a] != AblationArm::kNoHelper), e, seed);
        r = Evaluate(ModelKind::kMasking, bench, {&feats, &meta.model}, Phase::kTest, e, cfg.eval, seed);
      }
      spdlog::info("ablation {} seed {}: {:.4f}", AblationArmName(arms[a]), seed, r.mean_accuracy);
      rows[a].per_seed_means.push_back(r.mean_accuracy);
      pooled[a].insert(pooled[a].end(), r.per_episode_accuracies.begin(), r.per_episode_accuracies.end());
      rows[a].report.kind = r.kind;
    }
  }
  for (size_t a = 0; a < arms.size(); ++a) {
    const ModelKind kind = rows[a].report.kind;
    rows[a].arm = arms[a];
    rows[a].report = SummarizeAccuracies(std::move(pooled[a]));
    rows[a].report.kind = kind;
    rows[a].report.level = cfg.levels.front();
    rows[a].report.k_shot = cfg.shots.front();
    rows[a].report.seed = seeds.front();
  }
  return rows;
}

std::string TrainReportToJson(const TrainReport& r) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = "train_report";
  j["phase"] = r.phase;
  j["seed"] = r.seed;
  j["epochs"] = r.epochs;
  j["steps_per_epoch"] = r.steps_per_epoch;
  j["final_loss"] = r.final_loss;
  j["loss_curve"] = r.loss_curve;
  j["val_accuracy"] = r.val_accuracy;
  j["best_epoch"] = r.best_epoch;
  j["label_space"] = r.label_space;
  j["helper_classes"] = r.helper_classes;
  j["checkpoint"] = r.checkpoint;
  j["config"] = r.config_json.empty() ? json::object() : json::parse(r.config_json);
  return j.dump(2);
}

std::string EvalReportToJson(const EvalReport& r) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = "eval_report";
  j["model"] = ModelKindName(r.kind);
  j["phase"] = PhaseName(r.phase);
  j["level"] = r.level;
  j["k_shot"] = r.k_shot;
  j["seed"] = r.seed;
  j["n_episodes"] = r.n_episodes;
  j["protocol"] = r.protocol;
  j["mean_accuracy"] = r.mean_accuracy;
  j["ci95_halfwidth"] = r.ci95_halfwidth;
  j["per_episode_accuracies"] = r.per_episode_accuracies;
  j["config"] = r.config_json.empty() ? json::object() : json::parse(r.config_json);
  return j.dump(2);
}

namespace {

// (model, level) -> shot -> report, with models in first-seen order.
struct Grid {
  std::vector<std::pair<ModelKind, int>> rows;
  std::vector<int> shots;
  std::map<std::tuple<ModelKind, int, int>, const EvalReport*> cells;
};

Grid MakeGrid(const std::vector<EvalReport>& reports) {
  Grid g;
  for (const EvalReport& r : reports) {
    const std::pair<ModelKind, int> key{r.kind, r.level};
    if (std::find(g.rows.begin(), g.rows.end(), key) == g.rows.end()) g.rows.push_back(key);
    if (std::find(g.shots.begin(), g.shots.end(), r.k_shot) == g.shots.end()) g.shots.push_back(r.k_shot);
    g.cells[{r.kind, r.level, r.k_shot}] = &r;
  }
  std::sort(g.shots.begin(), g.shots.end());
  return g;
}

}  // namespace

std::string SummaryTableText(const std::vector<EvalReport>& reports) {
  const Grid g = MakeGrid(reports);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"model", "level"};
  for (int s : g.shots) header.push_back(std::to_string(s) + "-shot");
  rows.push_back(header);
  for (const auto& [kind, level] : g.rows) {
    std::vector<std::string> row{ModelKindName(kind), std::to_string(level)};
    for (int s : g.shots) {
      auto it = g.cells.find({kind, level, s});
      row.push_back(it == g.cells.end() ? "-" : Cell(*it->second));
    }
    rows.push_back(row);
  }
  return AlignedTable(rows);
}

std::string SummaryTableCsv(const std::vector<EvalReport>& reports) {
  const Grid g = MakeGrid(reports);
  std::ostringstream os;
  os << "model,level";
  for (int s : g.shots) os << ",mean_" << s << "shot,ci95_" << s << "shot,episodes_" << s << "shot";
  os << "\n";
  for (const auto& [kind, level] : g.rows) {
    os << ModelKindName(kind) << "," << level;
    for (int s : g.shots) {
      auto it = g.cells.find({kind, level, s});
      if (it == g.cells.end()) {
        os << ",,,";
        continue;
      }
      const EvalReport& r = *it->second;
      os << "," << Fixed(r.mean_accuracy, 6) << "," << Fixed(r.ci95_halfwidth, 6) << "," << r.n_episodes;
    }
    os << "\n";
  }
  return os.str();
}

std::string AblationTableText(const std::vector<AblationRow>& rows) {
  std::vector<std::vector<std::string>> table{{"arm", "model", "accuracy", "seeds"}};
  for (const AblationRow& r : rows) {
    table.push_back({AblationArmName(r.arm), ModelKindName(r.report.kind), Cell(r.report),
                     std::to_string(r.per_seed_means.size())});
  }
  return AlignedTable(table);
}

std::string AblationTableCsv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "arm,model,level,k_shot,n_episodes,mean_accuracy,ci95_halfwidth\n";
  for (const AblationRow& r : rows) {
    os << AblationArmName(r.arm) << "," << ModelKindName(r.report.kind) << "," << r.report.level << ","
       << r.report.k_shot << "," << r.report.n_episodes << "," << Fixed(r.report.mean_accuracy, 6) << ","
       << Fixed(r.report.ci95_halfwidth, 6) << "\n";
  }
  return os.str();
}

}  // namespace pseudoshot
