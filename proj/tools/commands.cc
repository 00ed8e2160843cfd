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


#include "commands.h"

#include <spdlog/spdlog.h>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "pseudoshot/error.h"

namespace pseudoshot::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path PrepareOutDir(const RunConfig& cfg) {
  const fs::path out(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory '" + out.string() + "': " + ec.message());
  return out;
}

fs::path WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
  if (!f) throw IoError("write failed for '" + path.string() + "'");
  return path;
}

fs::path WriteConfig(const fs::path& out, const RunConfig& cfg) {
  return WriteText(out / "config.json", json::parse(ResolvedConfigJson(cfg)).dump(2));
}

std::string TrainFileName(size_t index, const TrainReport& r, int shot) {
  std::ostringstream os;
  os << "train_" << std::setw(2) << std::setfill('0') << index << "_" << r.phase;
  if (r.phase == "meta") os << "_k" << shot;
  os << ".json";
  return os.str();
}

std::string EvalFileName(const EvalReport& r) {
  return "eval_" + std::string(ModelKindName(r.kind)) + "_l" + std::to_string(r.level) + "_k" +
         std::to_string(r.k_shot) + ".json";
}

}  // namespace

Benchmark LoadBenchmark(const RunConfig& cfg) {
  const SplitConfig& split = cfg.experiment.split;
  if (cfg.data_dir.empty()) return MakeSyntheticBenchmark(cfg.experiment.synth, split, cfg.seed);
  const fs::path dir(cfg.data_dir);
  spdlog::info("loading benchmark data from {}", dir.string());
  Taxonomy taxonomy = LoadTaxonomyFile((dir / "taxonomy.tsv").string());
  EmbeddingTable embeddings = LoadEmbeddingsFile((dir / "embeddings.tsv").string());
  DatasetStore store = LoadManifestFile(dir / "manifest.tsv");
  return MakeBenchmark(std::move(taxonomy), std::move(embeddings), std::move(store), split, cfg.seed);
}

std::vector<fs::path> CmdSynth(const RunConfig& cfg) {
  cfg.experiment.synth.Validate();
  const fs::path out = PrepareOutDir(cfg);
  const SyntheticData data = GenerateSynthetic(cfg.experiment.synth, cfg.seed);
  ExportSynthetic(data, out);
  spdlog::info("wrote {} classes, {} images to {}", data.store.NumClasses(), data.store.TotalImages(), out.string());
  return {out / "taxonomy.tsv", out / "embeddings.tsv", out / "manifest.tsv", WriteConfig(out, cfg)};
}

std::vector<fs::path> CmdRun(const RunConfig& cfg) {
  cfg.Validate();
  const fs::path out = PrepareOutDir(cfg);
  const std::string config_json = ResolvedConfigJson(cfg);
  std::vector<fs::path> files{WriteConfig(out, cfg)};

  const Benchmark bench = LoadBenchmark(cfg);
  ExperimentResult result = RunExperiment(bench, cfg.experiment, cfg.seed);

  std::string backbone_ckpt;
  if (cfg.save_checkpoints && !result.features.feature_shape().empty()) {
    fs::create_directories(out / "checkpoints");
    const fs::path p = out / "checkpoints" / "backbone.psn";
    nn::SaveCheckpoint(p, result.backbone.Parameters());
    backbone_ckpt = p.string();
    files.push_back(p);
  }

  // Meta reports follow the order of experiment.shots.
  size_t meta_seen = 0;
  for (size_t i = 0; i < result.train_reports.size(); ++i) {
    TrainReport r = result.train_reports[i];
    r.config_json = config_json;
    int shot = 0;
    if (r.phase == "pretrain") {
      r.checkpoint = backbone_ckpt;
    } else if (r.phase == "meta") {
      shot = cfg.experiment.shots.at(meta_seen++);
      if (cfg.save_checkpoints) {
        const fs::path p = out / "checkpoints" / ("masking_k" + std::to_string(shot) + ".psn");
        nn::SaveCheckpoint(p, result.masking_models.at(shot).Parameters());
        r.checkpoint = p.string();
        files.push_back(p);
      }
    }
    files.push_back(WriteText(out / TrainFileName(i, r, shot), TrainReportToJson(r)));
  }
  for (EvalReport r : result.eval_reports) {
    r.config_json = config_json;
    files.push_back(WriteText(out / EvalFileName(r), EvalReportToJson(r)));
  }
  files.push_back(WriteText(out / "summary.txt", SummaryTableText(result.eval_reports)));
  files.push_back(WriteText(out / "summary.csv", SummaryTableCsv(result.eval_reports)));
  return files;
}

std::vector<fs::path> CmdAblate(const RunConfig& cfg) {
  cfg.Validate();
  if (!cfg.data_dir.empty()) throw ConfigError("ablate generates one synthetic benchmark per seed; unset paths.data_dir");
  const fs::path out = PrepareOutDir(cfg);
  std::vector<fs::path> files{WriteConfig(out, cfg)};
  const std::vector<AblationRow> rows = RunAblation(cfg.experiment, cfg.ablation_arms, cfg.ablation_seeds);

  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = "ablation";
  j["config"] = json::parse(ResolvedConfigJson(cfg));
  j["rows"] = json::array();
  for (const AblationRow& row : rows) {
    j["rows"].push_back({{"arm", AblationArmName(row.arm)},
                         {"model", ModelKindName(row.report.kind)},
                         {"n_episodes", row.report.n_episodes},
                         {"mean_accuracy", row.report.mean_accuracy},
                         {"ci95_halfwidth", row.report.ci95_halfwidth},
                         {"per_seed_means", row.per_seed_means}});
  }
  files.push_back(WriteText(out / "ablation.json", j.dump(2)));
  files.push_back(WriteText(out / "ablation.txt", AblationTableText(rows)));
  files.push_back(WriteText(out / "ablation.csv", AblationTableCsv(rows)));
  return files;
}

std::vector<fs::path> CmdAnalyzeMi(const RunConfig& cfg) {
  cfg.Validate();
  const fs::path out = PrepareOutDir(cfg);
  std::vector<fs::path> files{WriteConfig(out, cfg)};
  const Benchmark bench = LoadBenchmark(cfg);
  const ExperimentConfig& ex = cfg.experiment;
  const int shot = ex.shots.front();
  const TrainedMasking trained = TrainMaskingPipeline(bench, ex, cfg.seed, shot);

  std::ostringstream csv;
  csv << "level,quantity,index,mi\n";
  csv << std::setprecision(17);
  json summary;
  summary["schema_version"] = kReportSchemaVersion;
  summary["kind"] = "mi_summary";
  summary["bins"] = ex.mi_bins;
  summary["n_episodes"] = ex.mi_episodes;
  summary["k_shot"] = shot;
  summary["config"] = json::parse(ResolvedConfigJson(cfg));
  summary["levels"] = json::array();
  for (int level : ex.levels) {
    EpisodeConfig episode = ex.episode;
    episode.k_shot = shot;
    episode.level = PruneLevel(level);
    const MiSummary mi = AnalyzeMi(bench, trained.features, trained.model, episode, ex.mi_episodes, ex.mi_bins,
                                   cfg.seed, ex.eval.pooling);
    const std::pair<const char*, const std::vector<double>*> series[] = {
        {"support_raw", &mi.support_raw},
        {"support_masked", &mi.support_masked},
        {"refined", &mi.refined},
        {"query_centroid", &mi.query_centroid}};
    json row{{"level", level}};
    for (const auto& [name, values] : series) {
      for (size_t i = 0; i < values->size(); ++i) csv << level << "," << name << "," << i << "," << (*values)[i] << "\n";
      row[name] = {{"mean", mi.Mean(*values)}, {"count", values->size()}};
    }
    spdlog::info("level {}: MI raw {:.4f} refined {:.4f}", level, mi.Mean(mi.support_raw), mi.Mean(mi.refined));
    summary["levels"].push_back(row);
  }
  files.push_back(WriteText(out / "mi_values.csv", csv.str()));
  files.push_back(WriteText(out / "mi_summary.json", summary.dump(2)));
  return files;
}

std::vector<fs::path> CmdVizMask(const RunConfig& cfg) {
  cfg.Validate();
  const fs::path out = PrepareOutDir(cfg);
  std::vector<fs::path> files{WriteConfig(out, cfg)};
  const Benchmark bench = LoadBenchmark(cfg);
  const ExperimentConfig& ex = cfg.experiment;
  const int shot = ex.shots.front();
  const TrainedMasking trained = TrainMaskingPipeline(bench, ex, cfg.seed, shot);

  EpisodeConfig episode = ex.episode;
  episode.k_shot = shot;
  episode.level = PruneLevel(cfg.viz_level);
  const Episode ep = EvaluationEpisode(bench, Phase::kTest, episode, cfg.seed, cfg.viz_episode);
  const auto masks = EpisodeMasks(ep, trained.features, trained.model.f_theta);
  for (const fs::path& p : ExportMaskHeatmaps(bench, ep, masks, out / "masks")) files.push_back(p);
  return files;
}

std::string ErrorRecordJson(const std::string& command, const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  json j{{"status", "error"},
         {"command", command},
         {"kind", err != nullptr ? err->kind() : std::string("internal")},
         {"message", e.what()}};
  return j.dump();
}

}  // namespace pseudoshot::cli
