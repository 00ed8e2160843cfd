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


#ifndef PSEUDOSHOT_TOOLS_RUN_CONFIG_H_
#define PSEUDOSHOT_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pseudoshot/experiment.h"

namespace pseudoshot::cli {

// Everything a CLI invocation can be configured with. The text form is
//
//   # comment
//   [section]
//   key = value
//
// with lists written comma separated. Keys outside a section live in [run].
struct RunConfig {
  ExperimentConfig experiment;
  uint64_t seed = 1;
  // Directory produced by `synth`; empty means generate from [synth].
  std::string data_dir;
  std::string out_dir = "out";
  // Write backbone and masking-model checkpoints next to the reports.
  bool save_checkpoints = true;

  std::vector<uint64_t> ablation_seeds{1, 2, 3, 4, 5};
  std::vector<AblationArm> ablation_arms{AblationArm::kNoAux, AblationArm::kRandomSelection, AblationArm::kNoHelper,
                                         AblationArm::kFull};

  // Episode picked for mask export.
  int viz_level = 0;
  int viz_episode = 0;

  void Validate() const;
};

struct ConfigKey {
  std::string name;  // "section.key"
  std::string doc;
  std::string default_value;
};

// Every accepted key with its documentation and default, in file order.
std::vector<ConfigKey> ConfigKeys();

// Applies `section.key = value`. Throws ConfigError for unknown keys and
// malformed values.
void SetConfigValue(RunConfig& cfg, const std::string& name, const std::string& value);

// Applies a whole document on top of `cfg`. `origin` names the source in
// error messages.
void ApplyConfigText(RunConfig& cfg, std::string_view text, const std::string& origin = "<config>");
void ApplyConfigFile(RunConfig& cfg, const std::filesystem::path& path);

// The fully resolved configuration as a JSON object, one member per section.
std::string ResolvedConfigJson(const RunConfig& cfg);

// A commented config document holding every default.
std::string DefaultConfigText();

}  // namespace pseudoshot::cli

#endif  // PSEUDOSHOT_TOOLS_RUN_CONFIG_H_
