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


#ifndef PSEUDOSHOT_TOOLS_COMMANDS_H_
#define PSEUDOSHOT_TOOLS_COMMANDS_H_

#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "run_config.h"

namespace pseudoshot::cli {

// Each command writes below cfg.out_dir and returns the files it produced.
// Failures surface as pseudoshot::Error (or std::exception) to the caller.

// taxonomy.tsv, embeddings.tsv, manifest.tsv, images/ and config.json.
std::vector<std::filesystem::path> CmdSynth(const RunConfig& cfg);

// Pretrain, meta-train and evaluate. Writes train_*.json, eval_*.json,
// summary.txt, summary.csv, config.json and (optionally) checkpoints/.
std::vector<std::filesystem::path> CmdRun(const RunConfig& cfg);

// ablation.txt, ablation.csv and ablation.json.
std::vector<std::filesystem::path> CmdAblate(const RunConfig& cfg);

// mi_values.csv (one row per measured pair) and mi_summary.json, for every
// level in run.levels.
std::vector<std::filesystem::path> CmdAnalyzeMi(const RunConfig& cfg);

// Mask heatmaps and overlays of one test episode under masks/.
std::vector<std::filesystem::path> CmdVizMask(const RunConfig& cfg);

// {"status":"error","command":...,"kind":...,"message":...}
std::string ErrorRecordJson(const std::string& command, const std::exception& e);

// Benchmark from paths.data_dir when set, otherwise generated from [synth].
Benchmark LoadBenchmark(const RunConfig& cfg);

}  // namespace pseudoshot::cli

#endif  // PSEUDOSHOT_TOOLS_COMMANDS_H_
