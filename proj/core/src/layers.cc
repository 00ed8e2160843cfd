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

#include "pseudoshot/layers.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "pseudoshot/error.h"

namespace pseudoshot::nn {

std::vector<Tensor> SnapshotValues(const ParamList& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.var.value());
  return out;
}

void RestoreValues(const ParamList& params, const std::vector<Tensor>& values) {
  if (values.size() != params.size()) throw ShapeError("RestoreValues: parameter count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    Var v = params[i].var;
    if (v.shape() != values[i].shape()) throw ShapeError("RestoreValues: shape mismatch for " + params[i].name);
    v.mutable_value() = values[i];
  }
}

void ZeroGrads(const ParamList& params) {
  for (const auto& p : params) {
    Var v = p.var;
    v.ZeroGrad();
  }
}

size_t CountScalars(const ParamList& params) {
  size_t n = 0;
  for (const auto& p : params) n += static_cast<size_t>(p.var.value().size());
  return n;
}

NamedArrays ToNamedArrays(const ParamList& params) {
  NamedArrays out;
  for (const auto& p : params) out.emplace_back(p.name, p.var.value());
  return out;
}

void LoadNamedArrays(const ParamList& params, const NamedArrays& arrays) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : arrays) by_name[name] = &t;
  for (const auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw FormatError("checkpoint has no array named '" + p.name + "'");
    if (it->second->shape() != p.var.shape()) {
      throw ShapeError("checkpoint array '" + p.name + "' has shape " + ShapeToString(it->second->shape()) +
                       ", expected " + ShapeToString(p.var.shape()));
    }
    Var v = p.var;
    v.mutable_value() = *it->second;
  }
}

void SaveCheckpoint(const std::filesystem::path& path, const ParamList& params) {
  WriteNamedArrays(path, ToNamedArrays(params));
}

void LoadCheckpoint(const std::filesystem::path& path, const ParamList& params) {
  LoadNamedArrays(params, ReadNamedArrays(path));
}

Tensor FanInGaussian(Shape shape, int64_t fan_in, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  Tensor t(std::move(shape));
  for (double& v : t.vec()) v = dist(rng);
  return t;
}

ResidualBlock::ResidualBlock(const BlockConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.in_channels < 1 || cfg.out_channels < 1) throw ValueError("residual block channels must be positive");
  int in = cfg.in_channels;
  for (int i = 0; i < 3; ++i) {
    conv_[i] = Var(FanInGaussian({cfg.out_channels, in, 3, 3}, in * 9, rng), true);
    gamma_[i] = Var(Tensor::Filled({cfg.out_channels}, 1.0), true);
    beta_[i] = Var(Tensor::Zeros({cfg.out_channels}), true);
    in = cfg.out_channels;
  }
  if (cfg.in_channels != cfg.out_channels || cfg.force_projection) {
    proj_ = Var(FanInGaussian({cfg.out_channels, cfg.in_channels, 1, 1}, cfg.in_channels, rng), true);
  }
}

Var ResidualBlock::Forward(const Var& x, double dropout, Rng* rng) const {
  if (x.value().rank() != 4 || x.shape()[1] != cfg_.in_channels) {
    throw ShapeError("residual block expects (N, " + std::to_string(cfg_.in_channels) + ", H, W), got " +
                     ShapeToString(x.shape()));
  }
  Var h = x;
  for (int i = 0; i < 3; ++i) {
    h = SampleNorm(Conv2d(h, conv_[i], 1), gamma_[i], beta_[i]);
    if (i < 2) {
      h = LeakyRelu(h, cfg_.slope);
      if (dropout > 0.0 && rng != nullptr) h = Dropout(h, dropout, *rng);
    }
  }
  Var shortcut = proj_.defined() ? Conv2d(x, proj_, 0) : x;
  Var out = Add(h, shortcut);
  if (cfg_.activate_output) out = LeakyRelu(out, cfg_.slope);
  if (cfg_.downsample) out = MaxPool2(out);
  return out;
}

void ResidualBlock::ZeroResidualBranch() { gamma_[2].mutable_value().Fill(0.0); }

void ResidualBlock::ZeroShortcut() {
  if (proj_.defined()) proj_.mutable_value().Fill(0.0);
}

ParamList ResidualBlock::Parameters(const std::string& prefix) const {
  ParamList out;
  for (int i = 0; i < 3; ++i) {
    const std::string idx = std::to_string(i + 1);
    out.push_back({prefix + ".conv" + idx, conv_[i]});
    out.push_back({prefix + ".gamma" + idx, gamma_[i]});
    out.push_back({prefix + ".beta" + idx, beta_[i]});
  }
  if (proj_.defined()) out.push_back({prefix + ".proj", proj_});
  return out;
}

void BackboneConfig::Validate() const {
  for (int f : stage_filters) {
    if (f < 1) throw ConfigError("backbone stage filters must be positive");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("backbone scale must be positive");
  if (downsample_stages < 0 || downsample_stages > 4) throw ConfigError("downsample_stages must be in [0, 4]");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout rate must be in [0, 1)");
  if (input_shape.size() != 3 || input_shape[0] < 1 || input_shape[1] < 1 || input_shape[2] < 1) {
    throw ConfigError("backbone input shape must be (C, H, W) with positive dims");
  }
  const Shape out = OutputShape();
  if (out[1] < 1 || out[2] < 1) throw ConfigError("input too small for " + std::to_string(downsample_stages) + " pooling stages");
}

std::vector<int> BackboneConfig::Widths() const {
  std::vector<int> w;
  for (auto it = stage_filters.rbegin(); it != stage_filters.rend(); ++it) {
    w.push_back(std::max(1, static_cast<int>(std::lround(*it * scale))));
  }
  return w;
}

Shape BackboneConfig::OutputShape() const {
  int64_t h = input_shape[1], w = input_shape[2];
  for (int i = 0; i < downsample_stages; ++i) {
    h /= 2;
    w /= 2;
  }
  return {OutChannels(), h, w};
}

Backbone::Backbone(const BackboneConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.Validate();
  int in = static_cast<int>(cfg_.input_shape[0]);
  const std::vector<int> widths = cfg_.Widths();
  for (size_t i = 0; i < widths.size(); ++i) {
    BlockConfig b;
    b.in_channels = in;
    b.out_channels = widths[i];
    b.downsample = static_cast<int>(i) < cfg_.downsample_stages;
    b.slope = cfg_.slope;
    stages_.emplace_back(b, rng);
    in = widths[i];
  }
}

Var Backbone::Forward(const Var& batch, bool training, Rng* rng) const {
  const Shape& s = batch.shape();
  if (s.size() != 4 || !std::equal(cfg_.input_shape.begin(), cfg_.input_shape.end(), s.begin() + 1)) {
    throw ShapeError("backbone expects images of shape " + ShapeToString(cfg_.input_shape) + ", got batch " +
                     ShapeToString(s));
  }
  const double rate = training ? cfg_.dropout : 0.0;
  if (rate > 0.0 && rng == nullptr) throw ValueError("training with dropout needs an rng");
  Var h = batch;
  for (const auto& stage : stages_) h = stage.Forward(h, rate, rng);
  return h;
}

std::vector<FeatureMap> Backbone::Embed(std::span<const Tensor> images, int chunk) const {
  for (const Tensor& img : images) {
    if (img.shape() != cfg_.input_shape) {
      throw ShapeError("expected image shape " + ShapeToString(cfg_.input_shape) + ", got " +
                       ShapeToString(img.shape()));
    }
  }
  NoGradGuard no_grad;
  std::vector<FeatureMap> out;
  out.reserve(images.size());
  chunk = std::max(1, chunk);
  for (size_t start = 0; start < images.size(); start += static_cast<size_t>(chunk)) {
    const size_t end = std::min(images.size(), start + static_cast<size_t>(chunk));
    Tensor batch = Stack(images.subspan(start, end - start));
    Var feats = Forward(Var(std::move(batch)));
    for (size_t i = 0; i < end - start; ++i) out.push_back(Unstack(feats.value(), static_cast<int64_t>(i)));
  }
  return out;
}

ParamList Backbone::Parameters() const {
  ParamList out;
  for (size_t i = 0; i < stages_.size(); ++i) {
    ParamList p = stages_[i].Parameters("backbone.stage" + std::to_string(i + 1));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Linear::Linear(int in_features, int out_features, Rng& rng) {
  if (in_features < 1 || out_features < 1) throw ValueError("linear layer sizes must be positive");
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(in_features)));
  Tensor w({out_features, in_features});
  for (double& v : w.vec()) v = dist(rng);
  weight_ = Var(std::move(w), true);
  bias_ = Var(Tensor::Zeros({out_features}), true);
}

Var Linear::Forward(const Var& x) const { return AddBias(MatMulTransposed(x, weight_), bias_); }

ParamList Linear::Parameters(const std::string& prefix) const {
  return {{prefix + ".weight", weight_}, {prefix + ".bias", bias_, false}};
}

}  // namespace pseudoshot::nn
