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

#include "pseudoshot/models.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pseudoshot/error.h"

namespace pseudoshot {
namespace {

using nn::Var;

double SortedSum(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

Var Pool(const Var& x, Pooling pooling) {
  return pooling == Pooling::kGap ? nn::GlobalAvgPool(x) : nn::Flatten(x);
}

double Norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void RequireSameShape(const FeatureMap& a, const FeatureMap& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": " + ShapeToString(a.shape()) + " vs " + ShapeToString(b.shape()));
  }
}

// Mean of whole vectors with per-coordinate sorted sums.
std::vector<double> MeanOfVectors(const std::vector<std::vector<double>>& rows) {
  const size_t d = rows.front().size();
  std::vector<double> out(d);
  std::vector<double> col(rows.size());
  for (size_t j = 0; j < d; ++j) {
    for (size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][j];
    out[j] = SortedSum(col) / static_cast<double>(rows.size());
  }
  return out;
}

Tensor MultiplyMask(const FeatureMap& f, const Tensor& mask) {
  if (mask.rank() != 3 || mask.dim(0) != 1 || mask.dim(1) != f.dim(1) || mask.dim(2) != f.dim(2)) {
    throw ShapeError("mask " + ShapeToString(mask.shape()) + " does not match feature map " +
                     ShapeToString(f.shape()));
  }
  Tensor out = f;
  const int64_t hw = f.dim(1) * f.dim(2);
  for (int64_t c = 0; c < f.dim(0); ++c) {
    for (int64_t i = 0; i < hw; ++i) out[c * hw + i] *= mask[i];
  }
  return out;
}

Var WithBatchAxis(const FeatureMap& f) {
  Shape s{1};
  s.insert(s.end(), f.shape().begin(), f.shape().end());
  return Var(f.Reshaped(s));
}

}  // namespace

const char* PoolingName(Pooling p) { return p == Pooling::kGap ? "gap" : "flatten"; }

Pooling ParsePooling(const std::string& s) {
  if (s == "flatten") return Pooling::kFlatten;
  if (s == "gap") return Pooling::kGap;
  throw ConfigError("unknown pooling '" + s + "' (expected flatten or gap)");
}

MaskNet::MaskNet(int feature_channels, Rng& rng, double slope) : channels_(feature_channels) {
  if (feature_channels < 1) throw ValueError("mask network needs a positive channel count");
  const int widths[3] = {feature_channels, std::max(1, feature_channels / 2), 1};
  int in = 2 * feature_channels;
  for (int i = 0; i < 3; ++i) {
    nn::BlockConfig b;
    b.in_channels = in;
    b.out_channels = widths[i];
    b.slope = slope;
    b.activate_output = i < 2;
    b.force_projection = i == 2;
    blocks_.emplace_back(b, rng);
    in = widths[i];
  }
  blocks_.back().ZeroResidualBranch();
  blocks_.back().ZeroShortcut();
}

Var MaskNet::Forward(const Var& a_support, const Var& a_pseudo) const {
  if (a_support.shape() != a_pseudo.shape()) {
    throw ShapeError("mask inputs differ: " + ShapeToString(a_support.shape()) + " vs " +
                     ShapeToString(a_pseudo.shape()));
  }
  if (a_support.value().rank() != 4 || a_support.shape()[1] != channels_) {
    throw ShapeError("mask network expects (N, " + std::to_string(channels_) + ", H, W), got " +
                     ShapeToString(a_support.shape()));
  }
  Var h = nn::ConcatChannels(a_support, a_pseudo);
  for (const auto& b : blocks_) h = b.Forward(h);
  return nn::Sigmoid(h);
}

nn::ParamList MaskNet::Parameters() const {
  nn::ParamList out;
  for (size_t i = 0; i < blocks_.size(); ++i) {
    nn::ParamList p = blocks_[i].Parameters("f_theta.block" + std::to_string(i + 1));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

TransformNet::TransformNet(int feature_channels, Rng& rng, double slope) {
  nn::BlockConfig b;
  b.in_channels = feature_channels;
  b.out_channels = feature_channels;
  b.activate_output = false;
  b.slope = slope;
  block_ = nn::ResidualBlock(b, rng);
  block_.ZeroResidualBranch();
}

Var TransformNet::Forward(const Var& x) const { return block_.Forward(x); }

FeatureMap TransformNet::Apply(const FeatureMap& x) const {
  nn::NoGradGuard no_grad;
  return Forward(WithBatchAxis(x)).value().Reshaped(x.shape());
}

nn::ParamList TransformNet::Parameters() const { return block_.Parameters("f_beta"); }

MaskingModel::MaskingModel(int feature_channels, double initial_temperature, Rng& rng)
    : f_theta(feature_channels, rng), f_beta(feature_channels, rng),
      temperature(Tensor({1}, initial_temperature), true) {}

nn::ParamList MaskingModel::Parameters() const {
  nn::ParamList out = f_theta.Parameters();
  nn::ParamList b = f_beta.Parameters();
  out.insert(out.end(), b.begin(), b.end());
  out.push_back({"temperature", temperature, false});
  return out;
}

FeatureMap AggregateMean(std::span<const FeatureMap> maps) {
  if (maps.empty()) throw ValueError("cannot aggregate an empty list of feature maps");
  for (const auto& m : maps) RequireSameShape(maps.front(), m, "AggregateMean");
  FeatureMap out(maps.front().shape());
  std::vector<double> col(maps.size());
  for (int64_t j = 0; j < out.size(); ++j) {
    for (size_t i = 0; i < maps.size(); ++i) col[i] = maps[i][j];
    out[j] = SortedSum(col) / static_cast<double>(maps.size());
  }
  return out;
}

MaskBundle ComputeMask(const MaskNet& f_theta, const FeatureMap& a_support, const FeatureMap& a_pseudo) {
  RequireSameShape(a_support, a_pseudo, "ComputeMask");
  if (a_support.rank() != 3) throw ShapeError("ComputeMask expects (C*, H, W) maps, got " + ShapeToString(a_support.shape()));
  nn::NoGradGuard no_grad;
  Var m = f_theta.Forward(WithBatchAxis(a_support), WithBatchAxis(a_pseudo));
  return {a_support, a_pseudo, m.value().Reshaped({1, a_support.dim(1), a_support.dim(2)})};
}

const std::vector<double>& CentroidSet::Of(const ClassId& c) const {
  auto it = std::lower_bound(classes.begin(), classes.end(), c);
  if (it == classes.end() || *it != c) throw LookupError("no centroid for class '" + c + "'");
  return centroids[static_cast<size_t>(it - classes.begin())];
}

std::vector<double> PoolFeature(const FeatureMap& f, Pooling pooling) {
  if (pooling == Pooling::kFlatten) return f.vec();
  if (f.rank() != 3) throw ShapeError("gap pooling needs a (C, H, W) map, got " + ShapeToString(f.shape()));
  const int64_t hw = f.dim(1) * f.dim(2);
  std::vector<double> out(static_cast<size_t>(f.dim(0)));
  for (int64_t c = 0; c < f.dim(0); ++c) {
    double s = 0.0;
    for (int64_t i = 0; i < hw; ++i) s += f[c * hw + i];
    out[static_cast<size_t>(c)] = s / static_cast<double>(hw);
  }
  return out;
}

namespace {

template <typename Transform>
CentroidSet CentroidsFrom(const FeatureGroups& support, const FeatureGroups& pseudo, Pooling pooling,
                          Transform&& pseudo_transform, const std::function<FeatureMap(const FeatureMap&)>& all) {
  CentroidSet cs;
  for (const auto& [c, feats] : support) {
    if (feats.empty()) throw ValueError("support class '" + c + "' has no support features");
    std::vector<std::vector<double>> rows;
    for (const auto& f : feats) rows.push_back(PoolFeature(all(f), pooling));
    auto p = pseudo.find(c);
    if (p != pseudo.end()) {
      for (const auto& f : p->second) rows.push_back(PoolFeature(all(pseudo_transform(c, f)), pooling));
    }
    for (const auto& r : rows) {
      if (r.size() != rows.front().size()) throw ShapeError("inconsistent feature sizes for class '" + c + "'");
    }
    cs.classes.push_back(c);
    cs.centroids.push_back(MeanOfVectors(rows));
  }
  return cs;
}

}  // namespace

CentroidSet CentroidsBasic(const FeatureGroups& support, const FeatureGroups& pseudo, Pooling pooling) {
  return CentroidsFrom(
      support, pseudo, pooling, [](const ClassId&, const FeatureMap& f) { return f; },
      [](const FeatureMap& f) { return f; });
}

CentroidSet CentroidsMasked(const TransformNet& f_beta, const FeatureGroups& support, const FeatureGroups& pseudo,
                            const std::map<ClassId, MaskBundle>& masks, Pooling pooling) {
  for (const auto& [c, feats] : pseudo) {
    if (support.count(c) && !feats.empty() && !masks.count(c)) {
      throw ValueError("no mask for pseudo shots of class '" + c + "'");
    }
  }
  return CentroidsFrom(
      support, pseudo, pooling,
      [&](const ClassId& c, const FeatureMap& f) { return MultiplyMask(f, masks.at(c).mask); },
      [&](const FeatureMap& f) { return f_beta.Apply(f); });
}

Prediction Classify(const FeatureMap& query, const CentroidSet& cs, const TransformNet* f_beta, double temperature,
                    Pooling pooling) {
  if (cs.size() == 0) throw ValueError("cannot classify against an empty centroid set");
  const std::vector<double> q = PoolFeature(f_beta != nullptr ? f_beta->Apply(query) : query, pooling);
  const double qn = Norm(q);
  if (!(qn > 0.0)) throw ValueError("query feature has zero norm");
  Tensor logits({1, static_cast<int64_t>(cs.size())});
  for (size_t i = 0; i < cs.size(); ++i) {
    const auto& h = cs.centroids[i];
    if (h.size() != q.size()) {
      throw ShapeError("centroid of '" + cs.classes[i] + "' has " + std::to_string(h.size()) +
                       " entries, query has " + std::to_string(q.size()));
    }
    const double hn = Norm(h);
    if (!(hn > 0.0)) throw ValueError("centroid of class '" + cs.classes[i] + "' has zero norm");
    double dot = 0.0;
    for (size_t j = 0; j < q.size(); ++j) dot += q[j] * h[j];
    logits[static_cast<int64_t>(i)] = temperature * (dot / (qn * hn));
  }
  Prediction p;
  Tensor probs = nn::Softmax(logits);
  p.probabilities = probs.vec();
  p.index = ArgmaxRows(logits).front();
  p.predicted = cs.classes[static_cast<size_t>(p.index)];
  return p;
}

CentroidSet MsKMeansRefine(const FeatureGroups& support, std::span<const FeatureMap> pseudo_all,
                           const CentroidSet& initial, int iterations, Pooling pooling) {
  if (iterations < 1) throw ValueError("MS K-Means needs at least one iteration");
  CentroidSet cs = initial;
  if (pseudo_all.empty()) return cs;
  const size_t n = cs.size();
  std::vector<std::vector<std::vector<double>>> sup(n);
  for (size_t c = 0; c < n; ++c) {
    auto it = support.find(cs.classes[c]);
    if (it == support.end() || it->second.empty()) {
      throw ValueError("class '" + cs.classes[c] + "' has no support features");
    }
    for (const auto& f : it->second) sup[c].push_back(PoolFeature(f, pooling));
  }
  std::vector<std::vector<double>> xs;
  for (const auto& f : pseudo_all) xs.push_back(PoolFeature(f, pooling));
  const size_t d = cs.centroids.front().size();
  for (const auto& x : xs) {
    if (x.size() != d) throw ShapeError("pseudo feature size does not match the centroids");
  }
  std::vector<double> z(n);
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::vector<double>> num(n, std::vector<double>(d, 0.0));
    std::vector<double> den(n, 0.0);
    for (size_t c = 0; c < n; ++c) {
      for (const auto& x : sup[c]) {
        for (size_t j = 0; j < d; ++j) num[c][j] += x[j];
      }
      den[c] = static_cast<double>(sup[c].size());
    }
    for (const auto& x : xs) {
      double best = -std::numeric_limits<double>::infinity();
      for (size_t c = 0; c < n; ++c) {
        double dist = 0.0;
        for (size_t j = 0; j < d; ++j) dist += (x[j] - cs.centroids[c][j]) * (x[j] - cs.centroids[c][j]);
        z[c] = -dist;
        best = std::max(best, z[c]);
      }
      double total = 0.0;
      for (size_t c = 0; c < n; ++c) total += (z[c] = std::exp(z[c] - best));
      for (size_t c = 0; c < n; ++c) {
        const double w = z[c] / total;
        for (size_t j = 0; j < d; ++j) num[c][j] += w * x[j];
        den[c] += w;
      }
    }
    for (size_t c = 0; c < n; ++c) {
      for (size_t j = 0; j < d; ++j) cs.centroids[c][j] = num[c][j] / den[c];
    }
  }
  return cs;
}

Var MaskedCentroidsVar(const TransformNet& f_beta, const Var& support, std::span<const int> support_labels,
                       const Var& pseudo, std::span<const int> pseudo_labels, const Var& pseudo_mask, int n_way,
                       Pooling pooling) {
  Var all = support;
  std::vector<int> labels(support_labels.begin(), support_labels.end());
  if (pseudo.defined() && !pseudo_labels.empty()) {
    const Var masked = pseudo_mask.defined() ? nn::MulChannelBroadcast(pseudo, pseudo_mask) : pseudo;
    const Var parts[2] = {support, masked};
    all = nn::ConcatBatch(parts);
    labels.insert(labels.end(), pseudo_labels.begin(), pseudo_labels.end());
  }
  return Pool(nn::SegmentMean(f_beta.Forward(all), labels, n_way), pooling);
}

Var CosineLogits(const Var& query, const Var& centroids, const Var& temperature) {
  return nn::ScaleBy(nn::MatMulTransposed(nn::L2NormalizeRows(query), nn::L2NormalizeRows(centroids)), temperature);
}

EpisodeOutput MaskingEpisodeForward(const MaskingModel& model, const EpisodeBatch& batch, Pooling pooling,
                                    bool unit_mask) {
  const int n = batch.n_way;
  const Var support(batch.support);
  EpisodeOutput out;
  Var pseudo, pseudo_mask;
  if (!batch.pseudo_labels.empty()) {
    pseudo = Var(batch.pseudo);
    // Classes that received pseudo shots, relabelled densely for f_theta.
    std::vector<int> dense(static_cast<size_t>(n), -1);
    std::vector<int> present;
    for (int l : batch.pseudo_labels) {
      if (dense[static_cast<size_t>(l)] < 0) {
        dense[static_cast<size_t>(l)] = 0;
        present.push_back(l);
      }
    }
    std::sort(present.begin(), present.end());
    for (size_t i = 0; i < present.size(); ++i) dense[static_cast<size_t>(present[i])] = static_cast<int>(i);
    std::vector<int> pseudo_dense;
    for (int l : batch.pseudo_labels) pseudo_dense.push_back(dense[static_cast<size_t>(l)]);

    if (!unit_mask) {
      Var a_s = nn::GatherBatch(nn::SegmentMean(support, batch.support_labels, n), present);
      Var a_p = nn::SegmentMean(pseudo, pseudo_dense, static_cast<int>(present.size()));
      out.mask = model.f_theta.Forward(a_s, a_p);
      pseudo_mask = nn::GatherBatch(out.mask, pseudo_dense);
    }
  }
  const Var centroids = MaskedCentroidsVar(model.f_beta, support, batch.support_labels, pseudo, batch.pseudo_labels,
                                           pseudo_mask, n, pooling);
  const Var q = Pool(model.f_beta.Forward(Var(batch.query)), pooling);
  out.logits = CosineLogits(q, centroids, model.temperature);
  return out;
}

Var BasicEpisodeLogits(const EpisodeBatch& batch, double temperature, Pooling pooling) {
  Var all(batch.support);
  std::vector<int> labels = batch.support_labels;
  if (!batch.pseudo_labels.empty()) {
    const Var parts[2] = {all, Var(batch.pseudo)};
    all = nn::ConcatBatch(parts);
    labels.insert(labels.end(), batch.pseudo_labels.begin(), batch.pseudo_labels.end());
  }
  const Var centroids = Pool(nn::SegmentMean(all, labels, batch.n_way), pooling);
  return CosineLogits(Pool(Var(batch.query), pooling), centroids, Var(Tensor({1}, temperature)));
}

std::vector<int> ArgmaxRows(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("ArgmaxRows expects (N, M), got " + ShapeToString(logits.shape()));
  const int64_t n = logits.dim(0), m = logits.dim(1);
  std::vector<int> out;
  for (int64_t i = 0; i < n; ++i) {
    int best = 0;
    for (int64_t j = 1; j < m; ++j) {
      if (logits[i * m + j] > logits[i * m + best]) best = static_cast<int>(j);
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace pseudoshot
