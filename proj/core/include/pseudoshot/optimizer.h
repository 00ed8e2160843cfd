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

#ifndef PSEUDOSHOT_OPTIMIZER_H_
#define PSEUDOSHOT_OPTIMIZER_H_

#include <vector>

#include "pseudoshot/layers.h"

namespace pseudoshot::nn {

struct SgdConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double decay_factor = 0.1;
  std::vector<int> decay_epochs{60, 80};
  // Rescales the gradient when its global L2 norm exceeds this; 0 disables.
  double clip_norm = 0.0;

  void Validate() const;
};

// Learning rate in effect during 0-based `epoch`: one decay for every decay
// epoch that is <= epoch.
double LearningRateAt(const SgdConfig& cfg, int epoch);

// Momentum SGD with L2 weight decay:
//   v = momentum * v - lr * (g + wd * p);  p += v
// where g is first scaled by clip_norm / |g| when clipping applies.
class Sgd {
 public:
  Sgd(ParamList params, SgdConfig cfg);

  // Applies one update using the gradients currently stored on the
  // parameters, then clears them. Throws NumericError (leaving every
  // parameter untouched) if any gradient is non-finite.
  void Step(int epoch);
  void ZeroGrad() { ZeroGrads(params_); }

  double learning_rate() const { return lr_; }
  const ParamList& params() const { return params_; }
  const std::vector<Tensor>& velocity() const { return velocity_; }

 private:
  ParamList params_;
  SgdConfig cfg_;
  std::vector<Tensor> velocity_;
  double lr_;
  size_t decays_applied_ = 0;
};

}  // namespace pseudoshot::nn

#endif  // PSEUDOSHOT_OPTIMIZER_H_
