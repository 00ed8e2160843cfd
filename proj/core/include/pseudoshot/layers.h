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

#ifndef PSEUDOSHOT_LAYERS_H_
#define PSEUDOSHOT_LAYERS_H_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "pseudoshot/array_io.h"
#include "pseudoshot/autodiff.h"
#include "pseudoshot/rng.h"
#include "pseudoshot/tensor.h"

namespace pseudoshot::nn {

// A trainable tensor with a stable name. `var` is shared with the owning
// module, so optimizers update the module in place.
struct NamedParam {
  std::string name;
  Var var;
  bool weight_decay = true;
};
using ParamList = std::vector<NamedParam>;

// Deep copies of the current values, in list order.
std::vector<Tensor> SnapshotValues(const ParamList& params);
void RestoreValues(const ParamList& params, const std::vector<Tensor>& values);
void ZeroGrads(const ParamList& params);
size_t CountScalars(const ParamList& params);

NamedArrays ToNamedArrays(const ParamList& params);
// Copies values into `params` by name. Throws FormatError on a missing name
// and ShapeError on a shape mismatch.
void LoadNamedArrays(const ParamList& params, const NamedArrays& arrays);
void SaveCheckpoint(const std::filesystem::path& path, const ParamList& params);
void LoadCheckpoint(const std::filesystem::path& path, const ParamList& params);

struct BlockConfig {
  int in_channels = 1;
  int out_channels = 1;
  bool activate_output = true;
  bool downsample = false;
  // Use a 1x1 projection shortcut even when the channel counts match.
  bool force_projection = false;
  double slope = 0.1;
};

// Three 3x3 conv + norm layers with LeakyReLU between them, added to an
// identity shortcut (or a 1x1 projection when the channel count changes),
// then an optional LeakyReLU and optional 2x2 max pooling.
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(const BlockConfig& cfg, Rng& rng);

  // x: (N, in, H, W). `dropout` applies after each inner activation.
  Var Forward(const Var& x, double dropout = 0.0, Rng* rng = nullptr) const;

  // Zeroes the scale of the last norm, so the residual branch outputs 0.
  void ZeroResidualBranch();
  // Zeroes the projection shortcut. No-op for identity shortcuts.
  void ZeroShortcut();

  ParamList Parameters(const std::string& prefix) const;
  const BlockConfig& config() const { return cfg_; }
  bool has_projection() const { return proj_.defined(); }

 private:
  BlockConfig cfg_;
  std::array<Var, 3> conv_;
  std::array<Var, 3> gamma_;
  std::array<Var, 3> beta_;
  Var proj_;
};

struct BackboneConfig {
  // Widest first. The network runs them narrowest first, so the last stage
  // has stage_filters[0] channels.
  std::array<int, 4> stage_filters{64, 32, 16, 8};
  double scale = 1.0;
  // The first `downsample_stages` stages end with 2x2 max pooling.
  int downsample_stages = 2;
  double dropout = 0.0;
  double slope = 0.1;
  Shape input_shape{3, 16, 16};

  void Validate() const;
  // Per-stage widths in execution order after scaling (each >= 1).
  std::vector<int> Widths() const;
  int OutChannels() const { return Widths().back(); }
  // (C*, H', W') produced for `input_shape`.
  Shape OutputShape() const;
};

// f_phi: four residual stages.
class Backbone {
 public:
  Backbone() = default;
  Backbone(const BackboneConfig& cfg, Rng& rng);

  // batch: (N, C, H, W). With `training` and a nonzero dropout rate, `rng`
  // must be set.
  Var Forward(const Var& batch, bool training = false, Rng* rng = nullptr) const;
  // Inference-mode features, one map per image, computed in chunks without
  // recording a graph. Throws ShapeError when an image shape differs from
  // the configured input shape.
  std::vector<FeatureMap> Embed(std::span<const Tensor> images, int chunk = 64) const;

  ParamList Parameters() const;
  const BackboneConfig& config() const { return cfg_; }
  ResidualBlock& stage(int i) { return stages_.at(static_cast<size_t>(i)); }

 private:
  BackboneConfig cfg_;
  std::vector<ResidualBlock> stages_;
};

// Fully connected classifier head used during pretraining.
class Linear {
 public:
  Linear() = default;
  Linear(int in_features, int out_features, Rng& rng);
  Var Forward(const Var& x) const;  // (N, in) -> (N, out)
  ParamList Parameters(const std::string& prefix) const;

 private:
  Var weight_;
  Var bias_;
};

// Gaussian with standard deviation sqrt(2 / fan_in).
Tensor FanInGaussian(Shape shape, int64_t fan_in, Rng& rng);

}  // namespace pseudoshot::nn

#endif  // PSEUDOSHOT_LAYERS_H_
