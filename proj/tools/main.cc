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


#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.h"
#include "json.hpp"
#include "pseudoshot/error.h"
#include "run_config.h"

namespace {

using pseudoshot::cli::RunConfig;
using Command = std::function<std::vector<std::filesystem::path>(const RunConfig&)>;

struct Flags {
  std::string config_path;
  uint64_t seed = 0;
  std::string out_dir;
  std::string data_dir;
  int parallel = 0;
  bool paper_schedule = false;
  bool print_config = false;
  std::vector<std::string> overrides;
};

void AddCommonFlags(CLI::App* sub, Flags& f) {
  const RunConfig d;
  sub->add_option("-c,--config", f.config_path, "config file ([section] / key = value)")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "master seed (run.seed)")->default_str(std::to_string(d.seed));
  sub->add_option("-o,--out", f.out_dir, "output directory (paths.out_dir)")->default_str(d.out_dir);
  sub->add_option("--data", f.data_dir, "data directory written by `synth` (paths.data_dir)")->default_str("<generate>");
  sub->add_option("--parallel-episodes", f.parallel, "evaluation worker threads (eval.parallel)")
      ->default_str(std::to_string(d.experiment.eval.parallel))
      ->check(CLI::PositiveNumber);
  sub->add_flag("--paper-schedule", f.paper_schedule, "100-epoch pretraining and 300-epoch meta-training");
  sub->add_option("-s,--set", f.overrides, "override any key, e.g. --set eval.episodes=200 (repeatable)");
  sub->add_flag("--print-config", f.print_config, "print the resolved configuration as JSON and exit");

  std::string footer = "\nConfig keys (config file or --set), with defaults:\n";
  for (const auto& key : pseudoshot::cli::ConfigKeys()) {
    footer += "  " + key.name + " = " + key.default_value + "\n      " + key.doc + "\n";
  }
  sub->footer(footer);
}

// defaults < config file < command-line flags
RunConfig Resolve(const Flags& f, const CLI::App* sub) {
  RunConfig cfg;
  if (!f.config_path.empty()) pseudoshot::cli::ApplyConfigFile(cfg, f.config_path);
  if (f.paper_schedule) cfg.experiment.UsePaperSchedule();
  for (const std::string& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw pseudoshot::ConfigError("--set expects key=value, got '" + kv + "'");
    pseudoshot::cli::SetConfigValue(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (sub->count("--seed") > 0) cfg.seed = f.seed;
  if (sub->count("--out") > 0) cfg.out_dir = f.out_dir;
  if (sub->count("--data") > 0) cfg.data_dir = f.data_dir;
  if (sub->count("--parallel-episodes") > 0) cfg.experiment.eval.parallel = f.parallel;
  return cfg;
}

void WriteErrorFile(const std::string& out_dir, const std::string& record) {
  if (out_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) return;
  std::ofstream(std::filesystem::path(out_dir) / "error.json") << record << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("pseudoshot"));

  CLI::App app{"Few-shot classification with semantically selected pseudo shots"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str()
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"synth", "generate a synthetic taxonomy, embeddings and images", pseudoshot::cli::CmdSynth},
      {"run", "pretrain, meta-train and evaluate; write reports and the summary table", pseudoshot::cli::CmdRun},
      {"ablate", "compare no_aux, random_selection, no_helper and full over several seeds", pseudoshot::cli::CmdAblate},
      {"analyze-mi", "mutual information between support and pseudo-shot features", pseudoshot::cli::CmdAnalyzeMi},
      {"viz-mask", "export the masks of one test episode as images", pseudoshot::cli::CmdVizMask},
  };
  std::map<std::string, Flags> flags;
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    AddCommonFlags(sub, flags[name]);
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  for (size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const std::string& name = std::get<0>(commands[i]);
    const Flags& f = flags[name];
    std::string out_dir = f.out_dir;
    try {
      const RunConfig cfg = Resolve(f, subs[i]);
      out_dir = cfg.out_dir;
      if (f.print_config) {
        std::cout << nlohmann::json::parse(pseudoshot::cli::ResolvedConfigJson(cfg)).dump(2) << "\n";
        return 0;
      }
      for (const auto& p : std::get<2>(commands[i])(cfg)) std::cout << p.string() << "\n";
      return 0;
    } catch (const std::exception& e) {
      const std::string record = pseudoshot::cli::ErrorRecordJson(name, e);
      std::cerr << record << "\n";
      WriteErrorFile(out_dir, record);
      return dynamic_cast<const pseudoshot::ConfigError*>(&e) != nullptr ? 2 : 1;
    }
  }
  return 1;
}
