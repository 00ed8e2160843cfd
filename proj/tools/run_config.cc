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


#include "run_config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <type_traits>
#include <utility>

#include "json.hpp"
#include "pseudoshot/error.h"

namespace pseudoshot::cli {
namespace {

using nlohmann::json;

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  if (Trim(s).empty()) return out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(Trim(item));
  return out;
}

template <typename Int>
Int ParseInteger(const std::string& s) {
  Int v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError("expected an integer, got '" + s + "'");
  return v;
}

// Value codecs. Text() must produce something Parse() accepts.
void Parse(const std::string& s, int& v) { v = ParseInteger<int>(s); }
void Parse(const std::string& s, uint64_t& v) { v = ParseInteger<uint64_t>(s); }
void Parse(const std::string& s, double& v) {
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ConfigError("expected a finite number, got '" + s + "'");
  }
}
void Parse(const std::string& s, bool& v) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") {
    v = true;
  } else if (s == "false" || s == "0" || s == "no" || s == "off") {
    v = false;
  } else {
    throw ConfigError("expected true or false, got '" + s + "'");
  }
}
void Parse(const std::string& s, std::string& v) { v = s; }
void Parse(const std::string& s, PruneLevel& v) { v = PruneLevel(ParseInteger<int>(s)); }
void Parse(const std::string& s, Pooling& v) { v = ParsePooling(s); }
void Parse(const std::string& s, ModelKind& v) { v = ParseModelKind(s); }
void Parse(const std::string& s, AblationArm& v) { v = ParseAblationArm(s); }
void Parse(const std::string& s, SelectionMethod& v) {
  if (s == "semantic") {
    v = SelectionMethod::kSemantic;
  } else if (s == "random") {
    v = SelectionMethod::kRandom;
  } else {
    throw ConfigError("unknown selection '" + s + "' (expected semantic or random)");
  }
}
void Parse(const std::string& s, HelperAggregation& v) {
  if (s == "max") {
    v = HelperAggregation::kMax;
  } else if (s == "mean") {
    v = HelperAggregation::kMean;
  } else {
    throw ConfigError("unknown helper aggregation '" + s + "' (expected max or mean)");
  }
}
template <typename T>
void Parse(const std::string& s, std::vector<T>& v) {
  std::vector<T> out;
  for (const std::string& item : SplitList(s)) Parse(item, out.emplace_back());
  v = std::move(out);
}
void Parse(const std::string& s, std::array<int, 4>& v) {
  std::vector<int> items;
  Parse(s, items);
  if (items.size() != v.size()) throw ConfigError("expected 4 comma separated integers, got '" + s + "'");
  std::copy(items.begin(), items.end(), v.begin());
}

std::string Text(int v) { return std::to_string(v); }
std::string Text(uint64_t v) { return std::to_string(v); }
std::string Text(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
std::string Text(bool v) { return v ? "true" : "false"; }
std::string Text(const std::string& v) { return v; }
std::string Text(PruneLevel v) { return std::to_string(v.value); }
std::string Text(Pooling v) { return PoolingName(v); }
std::string Text(ModelKind v) { return ModelKindName(v); }
std::string Text(AblationArm v) { return AblationArmName(v); }
std::string Text(SelectionMethod v) { return v == SelectionMethod::kSemantic ? "semantic" : "random"; }
std::string Text(HelperAggregation v) { return v == HelperAggregation::kMax ? "max" : "mean"; }
template <typename Seq>
auto Text(const Seq& v) -> decltype(v.begin(), std::string()) {
  std::string out;
  for (const auto& item : v) out += (out.empty() ? "" : ",") + Text(item);
  return out;
}

json Json(int v) { return v; }
json Json(uint64_t v) { return v; }
json Json(double v) { return v; }
json Json(bool v) { return v; }
json Json(const std::string& v) { return v; }
json Json(PruneLevel v) { return v.value; }
template <typename T>
auto Json(T v) -> std::enable_if_t<std::is_enum_v<T>, json> {
  return Text(v);
}
template <typename Seq>
auto Json(const Seq& v) -> decltype(v.begin(), json()) {
  json out = json::array();
  for (const auto& item : v) out.push_back(Json(item));
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::string doc;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> text;
  std::function<json(const RunConfig&)> to_json;
};

template <typename Access>
Field MakeField(std::string section, std::string key, std::string doc, Access access) {
  Field f{std::move(section), std::move(key), std::move(doc), {}, {}, {}};
  f.set = [access](RunConfig& c, const std::string& s) { Parse(s, access(c)); };
  f.text = [access](const RunConfig& c) { return Text(access(const_cast<RunConfig&>(c))); };
  f.to_json = [access](const RunConfig& c) { return Json(access(const_cast<RunConfig&>(c))); };
  return f;
}

#define PS_FIELD(section, key, doc, expr) \
  MakeField(section, key, doc, [](RunConfig& c) -> auto& { return expr; })

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      PS_FIELD("run", "seed", "master seed; every random stream derives from it", c.seed),
      PS_FIELD("run", "levels", "prune levels to evaluate (0-3)", c.experiment.levels),
      PS_FIELD("run", "shots", "support shots per class, one meta-training per entry", c.experiment.shots),
      PS_FIELD("run", "models", "basic, masking, mskmeans, no_aux", c.experiment.models),
      PS_FIELD("run", "pretrain_level_from_levels",
               "pick pretraining pseudo classes at the deepest evaluated level instead of pretrain.level",
               c.experiment.pretrain_level_from_levels),
      PS_FIELD("run", "save_checkpoints", "write trained parameters next to the reports", c.save_checkpoints),

      PS_FIELD("paths", "data_dir", "directory written by `synth`; empty generates data from [synth]", c.data_dir),
      PS_FIELD("paths", "out_dir", "report directory", c.out_dir),

      PS_FIELD("synth", "branching", "children per taxonomy node", c.experiment.synth.branching),
      PS_FIELD("synth", "depth", "taxonomy depth below the root", c.experiment.synth.depth),
      PS_FIELD("synth", "samples_per_class", "images per class", c.experiment.synth.samples_per_class),
      PS_FIELD("synth", "image_side", "image height and width in pixels", c.experiment.synth.image_side),
      PS_FIELD("synth", "embed_dim", "semantic embedding dimension", c.experiment.synth.embed_dim),
      PS_FIELD("synth", "semantic_drift", "embedding change from parent to child", c.experiment.synth.semantic_drift),
      PS_FIELD("synth", "pixel_noise", "per-pixel Gaussian noise", c.experiment.synth.pixel_noise),
      PS_FIELD("synth", "patch_fraction", "class patch area as a fraction of the image",
               c.experiment.synth.patch_fraction),
      PS_FIELD("synth", "patch_contrast", "class patch amplitude", c.experiment.synth.patch_contrast),
      PS_FIELD("synth", "patch_jitter", "maximum patch offset from the centre in pixels",
               c.experiment.synth.patch_jitter),
      PS_FIELD("synth", "max_leaves", "refuse trees with more leaves than this", c.experiment.synth.max_leaves),

      PS_FIELD("split", "train_fraction", "share of benchmark classes used for training",
               c.experiment.split.fractions[0]),
      PS_FIELD("split", "val_fraction", "share used for validation", c.experiment.split.fractions[1]),
      PS_FIELD("split", "test_fraction", "share used for testing", c.experiment.split.fractions[2]),
      PS_FIELD("split", "helper_fraction", "helper classes as a fraction of the training classes",
               c.experiment.split.helper_fraction),
      PS_FIELD("split", "helper_aggregation", "max or mean similarity to the training classes",
               c.experiment.split.helper_aggregation),

      PS_FIELD("backbone", "stage_filters", "stage widths, widest first", c.experiment.backbone.stage_filters),
      PS_FIELD("backbone", "scale", "multiplier applied to every stage width", c.experiment.backbone.scale),
      PS_FIELD("backbone", "downsample_stages", "leading stages that end in 2x2 max pooling",
               c.experiment.backbone.downsample_stages),
      PS_FIELD("backbone", "dropout", "dropout rate after each stage while pretraining",
               c.experiment.backbone.dropout),
      PS_FIELD("backbone", "slope", "LeakyReLU negative slope", c.experiment.backbone.slope),

      PS_FIELD("episode", "n_way", "support classes per episode", c.experiment.episode.n_way),
      PS_FIELD("episode", "q_query", "query images per support class", c.experiment.episode.q_query),
      PS_FIELD("episode", "n_prime", "pseudo-shot classes per support class", c.experiment.episode.n_prime),
      PS_FIELD("episode", "k_prime", "pseudo-shot images per support class; 0 disables them",
               c.experiment.episode.k_prime),
      PS_FIELD("episode", "prune_support", "also prune the support classes' subtrees",
               c.experiment.episode.prune_support),
      PS_FIELD("episode", "selection", "semantic or random pseudo-class selection", c.experiment.episode.selection),

      PS_FIELD("pretrain", "epochs", "embedder pretraining epochs", c.experiment.pretrain.epochs),
      PS_FIELD("pretrain", "batch_size", "images per step", c.experiment.pretrain.batch_size),
      PS_FIELD("pretrain", "learning_rate", "initial SGD step size", c.experiment.pretrain.sgd.learning_rate),
      PS_FIELD("pretrain", "momentum", "SGD momentum", c.experiment.pretrain.sgd.momentum),
      PS_FIELD("pretrain", "weight_decay", "L2 penalty", c.experiment.pretrain.sgd.weight_decay),
      PS_FIELD("pretrain", "decay_factor", "learning-rate multiplier at each decay epoch",
               c.experiment.pretrain.sgd.decay_factor),
      PS_FIELD("pretrain", "decay_epochs", "epochs at which the learning rate decays",
               c.experiment.pretrain.sgd.decay_epochs),
      PS_FIELD("pretrain", "clip_norm", "gradient norm clipping threshold (0 disables)",
               c.experiment.pretrain.sgd.clip_norm),
      PS_FIELD("pretrain", "level", "prune level for pseudo classes (see run.pretrain_level_from_levels)",
               c.experiment.pretrain.level),
      PS_FIELD("pretrain", "pooling", "flatten or gap before the linear head", c.experiment.pretrain.pooling),

      PS_FIELD("meta", "epochs", "masking meta-training epochs", c.experiment.meta.epochs),
      PS_FIELD("meta", "episodes_per_epoch", "training episodes per epoch", c.experiment.meta.episodes_per_epoch),
      PS_FIELD("meta", "val_episodes", "validation episodes per epoch", c.experiment.meta.val_episodes),
      PS_FIELD("meta", "learning_rate", "initial SGD step size", c.experiment.meta.sgd.learning_rate),
      PS_FIELD("meta", "momentum", "SGD momentum", c.experiment.meta.sgd.momentum),
      PS_FIELD("meta", "weight_decay", "L2 penalty", c.experiment.meta.sgd.weight_decay),
      PS_FIELD("meta", "decay_factor", "learning-rate multiplier at each decay epoch",
               c.experiment.meta.sgd.decay_factor),
      PS_FIELD("meta", "decay_epochs", "epochs at which the learning rate decays",
               c.experiment.meta.sgd.decay_epochs),
      PS_FIELD("meta", "clip_norm", "gradient norm clipping threshold (0 disables)",
               c.experiment.meta.sgd.clip_norm),
      PS_FIELD("meta", "initial_temperature", "starting value of the learned softmax temperature",
               c.experiment.meta.initial_temperature),
      PS_FIELD("meta", "use_helpers", "mix helper classes into training episodes", c.experiment.meta.use_helpers),

      PS_FIELD("eval", "episodes", "test episodes per (model, level, shot)", c.experiment.eval.n_episodes),
      PS_FIELD("eval", "parallel", "evaluation worker threads", c.experiment.eval.parallel),
      PS_FIELD("eval", "temperature", "softmax temperature of the basic model", c.experiment.eval.temperature),
      PS_FIELD("eval", "mskmeans_iterations", "soft k-means refinement steps", c.experiment.eval.mskmeans_iterations),
      PS_FIELD("eval", "pooling", "flatten or gap before cosine similarity", c.experiment.eval.pooling),
      PS_FIELD("eval", "unit_mask", "replace every mask by 1 (diagnostic)", c.experiment.eval.unit_mask),

      PS_FIELD("mi", "bins", "histogram bins per variable", c.experiment.mi_bins),
      PS_FIELD("mi", "episodes", "episodes analysed", c.experiment.mi_episodes),

      PS_FIELD("ablate", "seeds", "seeds pooled by `ablate`", c.ablation_seeds),
      PS_FIELD("ablate", "arms", "no_aux, random_selection, no_helper, full", c.ablation_arms),

      PS_FIELD("viz", "level", "prune level of the exported episode", c.viz_level),
      PS_FIELD("viz", "episode", "index of the exported test episode", c.viz_episode),
  };
  return fields;
}

#undef PS_FIELD

const Field& FindField(const std::string& name) {
  for (const Field& f : Fields()) {
    if (f.section + "." + f.key == name) return f;
  }
  throw ConfigError("unknown config key '" + name + "'");
}

}  // namespace

void RunConfig::Validate() const {
  experiment.Validate();
  if (out_dir.empty()) throw ConfigError("paths.out_dir must not be empty");
  if (ablation_seeds.empty()) throw ConfigError("ablate.seeds must not be empty");
  if (ablation_arms.empty()) throw ConfigError("ablate.arms must not be empty");
  static_cast<void>(PruneLevel(viz_level));
  if (viz_episode < 0) throw ConfigError("viz.episode must be non-negative");
}

std::vector<ConfigKey> ConfigKeys() {
  const RunConfig defaults;
  std::vector<ConfigKey> keys;
  for (const Field& f : Fields()) keys.push_back({f.section + "." + f.key, f.doc, f.text(defaults)});
  return keys;
}

void SetConfigValue(RunConfig& cfg, const std::string& name, const std::string& value) {
  const Field& f = FindField(name);
  try {
    f.set(cfg, value);
  } catch (const Error& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

void ApplyConfigText(RunConfig& cfg, std::string_view text, const std::string& origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section = "run";
  std::set<std::string> seen;
  for (int number = 1; std::getline(in, line); ++number) {
    const std::string where = origin + ":" + std::to_string(number) + ": ";
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + "unterminated section header");
      section = Trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string name = section + "." + Trim(std::string_view(t).substr(0, eq));
    if (!seen.insert(name).second) throw ConfigError(where + "duplicate key '" + name + "'");
    try {
      SetConfigValue(cfg, name, Trim(std::string_view(t).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void ApplyConfigFile(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ApplyConfigText(cfg, text.str(), path.string());
}

std::string ResolvedConfigJson(const RunConfig& cfg) {
  json j = json::object();
  for (const Field& f : Fields()) j[f.section][f.key] = f.to_json(cfg);
  return j.dump();
}

std::string DefaultConfigText() {
  const RunConfig defaults;
  std::ostringstream os;
  std::string section;
  for (const Field& f : Fields()) {
    if (f.section != section) {
      os << (section.empty() ? "" : "\n") << "[" << f.section << "]\n";
      section = f.section;
    }
    os << "# " << f.doc << "\n" << f.key << " = " << f.text(defaults) << "\n";
  }
  return os.str();
}

}  // namespace pseudoshot::cli
