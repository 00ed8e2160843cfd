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

#ifndef PSEUDOSHOT_MODELS_H_
#define PSEUDOSHOT_MODELS_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "pseudoshot/autodiff.h"
#include "pseudoshot/layers.h"
#include "pseudoshot/taxonomy.h"
#include "pseudoshot/tensor.h"

namespace pseudoshot {

enum class Pooling { kFlatten, kGap };
const char* PoolingName(Pooling p);
Pooling ParsePooling(const std::string& s);

// Feature maps grouped by support class.
using FeatureGroups = std::map<ClassId, std::vector<FeatureMap>>;

// f_theta: (2C*, H, W) -> (1, H, W) through widths C*, C*/2, 1. The last
// block is zero-initialised so a fresh network emits logit 0 (mask 0.5).
class MaskNet {
 public:
  MaskNet() = default;
  MaskNet(int feature_channels, Rng& rng, double slope = 0.1);

  // a_support, a_pseudo: (N, C*, H, W). Returns the sigmoid mask (N, 1, H, W).
  nn::Var Forward(const nn::Var& a_support, const nn::Var& a_pseudo) const;
  nn::ParamList Parameters() const;
  int feature_channels() const { return channels_; }

 private:
  int channels_ = 0;
  std::vector<nn::ResidualBlock> blocks_;
};

// f_beta: one C* -> C* block without output activation. Its residual branch
// starts at zero, so a fresh network is the identity map.
class TransformNet {
 public:
  TransformNet() = default;
  TransformNet(int feature_channels, Rng& rng, double slope = 0.1);

  nn::Var Forward(const nn::Var& x) const;  // (N, C*, H, W)
  // One map, inference mode.
  FeatureMap Apply(const FeatureMap& x) const;
  nn::ParamList Parameters() const;
  nn::ResidualBlock& block() { return block_; }

 private:
  nn::ResidualBlock block_;
};

struct MaskingModel {
  MaskNet f_theta;
  TransformNet f_beta;
  nn::Var temperature;  // shape (1)

  MaskingModel() = default;
  MaskingModel(int feature_channels, double initial_temperature, Rng& rng);
  // Temperature is excluded from weight decay.
  nn::ParamList Parameters() const;
};

struct MaskBundle {
  FeatureMap a_support;
  FeatureMap a_pseudo;
  Tensor mask;  // (1, H, W), values in [0, 1]
};

// Elementwise mean. Sums sorted addends, so any ordering of `maps` gives a
// bitwise identical result. Throws ValueError when empty, ShapeError when
// shapes differ.
FeatureMap AggregateMean(std::span<const FeatureMap> maps);

MaskBundle ComputeMask(const MaskNet& f_theta, const FeatureMap& a_support, const FeatureMap& a_pseudo);

// One centroid per support class, ordered by class id.
struct CentroidSet {
  std::vector<ClassId> classes;
  std::vector<std::vector<double>> centroids;

  size_t size() const { return classes.size(); }
  // Throws LookupError.
  const std::vector<double>& Of(const ClassId& c) const;
};

// Feature vector used for similarity: the flattened map or its channel means.
std::vector<double> PoolFeature(const FeatureMap& f, Pooling pooling);

// h_c = (sum of support + sum of pseudo) / (|S_c| + |S'_c|). Pseudo groups
// for classes outside `support` are ignored.
CentroidSet CentroidsBasic(const FeatureGroups& support, const FeatureGroups& pseudo,
                           Pooling pooling = Pooling::kFlatten);

// Same average over f_beta(support) and f_beta(pseudo * mask_c). Throws
// ValueError when a class with pseudo features has no mask.
CentroidSet CentroidsMasked(const TransformNet& f_beta, const FeatureGroups& support,
                            const FeatureGroups& pseudo, const std::map<ClassId, MaskBundle>& masks,
                            Pooling pooling = Pooling::kFlatten);

struct Prediction {
  std::vector<double> probabilities;  // aligned with CentroidSet::classes
  int index = 0;
  ClassId predicted;
};

// Softmax over temperature * cosine(query, h_c). With `f_beta`, the query is
// transformed first. Ties in the argmax go to the smallest class id.
Prediction Classify(const FeatureMap& query, const CentroidSet& cs, const TransformNet* f_beta,
                    double temperature, Pooling pooling = Pooling::kFlatten);

// Soft k-means refinement with labelled support points:
//   z_jc = softmax_c(-|x_j - h_c|^2)
//   h_c  = (sum_{S_c} x + sum_j z_jc x_j) / (|S_c| + sum_j z_jc)
// Throws ValueError when iterations < 1.
CentroidSet MsKMeansRefine(const FeatureGroups& support, std::span<const FeatureMap> pseudo_all,
                           const CentroidSet& initial, int iterations, Pooling pooling = Pooling::kFlatten);

// An episode flattened into batches. Labels index the sorted support classes.
struct EpisodeBatch {
  int n_way = 0;
  Tensor support;  // (S, C*, H, W)
  std::vector<int> support_labels;
  Tensor pseudo;  // (P, C*, H, W); P may be 0
  std::vector<int> pseudo_labels;
  Tensor query;  // (Q, C*, H, W)
  std::vector<int> query_labels;
};

struct EpisodeOutput {
  nn::Var logits;  // (Q, n_way)
  nn::Var mask;    // (n_way, 1, H, W), undefined without pseudo shots
};

// Differentiable centroids: the per-class mean of f_beta over the support
// rows and the pseudo rows gated by `pseudo_mask` ((P, 1, H, W), one mask per
// pseudo row; undefined means ungated), pooled to (n_way, D). `pseudo` may be
// undefined.
nn::Var MaskedCentroidsVar(const TransformNet& f_beta, const nn::Var& support, std::span<const int> support_labels,
                           const nn::Var& pseudo, std::span<const int> pseudo_labels, const nn::Var& pseudo_mask,
                           int n_way, Pooling pooling = Pooling::kFlatten);

// temperature * cos(query_i, centroid_c) for (Q, D) queries and (M, D)
// centroids; `temperature` holds one element.
nn::Var CosineLogits(const nn::Var& query, const nn::Var& centroids, const nn::Var& temperature);

// Differentiable masking-model forward pass over a whole episode. A class
// without pseudo shots is computed from its support features only.
// With `unit_mask`, f_theta is bypassed and every mask is 1.
EpisodeOutput MaskingEpisodeForward(const MaskingModel& model, const EpisodeBatch& batch,
                                    Pooling pooling = Pooling::kFlatten, bool unit_mask = false);

// Basic model: cosine to (support + pseudo) means, scaled by `temperature`.
nn::Var BasicEpisodeLogits(const EpisodeBatch& batch, double temperature, Pooling pooling = Pooling::kFlatten);

// Prediction per query row with the smallest-index tie-break.
std::vector<int> ArgmaxRows(const Tensor& logits);

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_MODELS_H_
