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

#include "pseudoshot/optimizer.h"

#include <algorithm>
#include <cmath>

#include "pseudoshot/error.h"

namespace pseudoshot::nn {

void SgdConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
  if (!(decay_factor > 0.0)) throw ConfigError("decay factor must be positive");
  if (!std::is_sorted(decay_epochs.begin(), decay_epochs.end())) throw ConfigError("decay epochs must be sorted");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip norm must be non-negative");
}

double LearningRateAt(const SgdConfig& cfg, int epoch) {
  double lr = cfg.learning_rate;
  for (int e : cfg.decay_epochs) {
    if (epoch >= e) lr *= cfg.decay_factor;
  }
  return lr;
}

Sgd::Sgd(ParamList params, SgdConfig cfg) : params_(std::move(params)), cfg_(std::move(cfg)) {
  cfg_.Validate();
  lr_ = cfg_.learning_rate;
  for (const auto& p : params_) velocity_.push_back(Tensor::Zeros(p.var.shape()));
}

void Sgd::Step(int epoch) {
  while (decays_applied_ < cfg_.decay_epochs.size() && epoch >= cfg_.decay_epochs[decays_applied_]) {
    lr_ *= cfg_.decay_factor;
    ++decays_applied_;
  }
  for (const auto& p : params_) {
    if (p.var.has_grad() && !p.var.node()->grad.AllFinite()) {
      throw NumericError("non-finite gradient for parameter '" + p.name + "'");
    }
  }
  double scale = 1.0;
  if (cfg_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& p : params_) {
      if (!p.var.has_grad()) continue;
      for (double g : p.var.node()->grad.vec()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    Var v = params_[i].var;
    const double wd = params_[i].weight_decay ? cfg_.weight_decay : 0.0;
    Tensor& vel = velocity_[i];
    Tensor& value = v.mutable_value();
    const Tensor* g = v.has_grad() ? &v.node()->grad : nullptr;
    for (int64_t j = 0; j < value.size(); ++j) {
      const double grad = g != nullptr ? scale * (*g)[j] : 0.0;
      vel[j] = cfg_.momentum * vel[j] - lr_ * (grad + wd * value[j]);
      value[j] += vel[j];
    }
    v.ZeroGrad();
  }
}

}  // namespace pseudoshot::nn
