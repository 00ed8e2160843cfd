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

#include "pseudoshot/evaluation.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "pseudoshot/array_io.h"
#include "pseudoshot/error.h"
#include "pseudoshot/stats.h"

namespace pseudoshot {
namespace {

constexpr uint64_t kEvalStream = 100;
constexpr uint64_t kMiStream = 200;

double Accuracy(const Tensor& logits, const std::vector<int>& labels) {
  const std::vector<int> pred = ArgmaxRows(logits);
  int correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

FeatureMap UnitNorm(const FeatureMap& f) {
  double s = 0.0;
  for (double v : f.data()) s += v * v;
  if (!(s > 0.0)) throw ValueError("cannot normalise a zero feature map");
  FeatureMap out = f;
  const double inv = 1.0 / std::sqrt(s);
  for (double& v : out.vec()) v *= inv;
  return out;
}

double MsKMeansAccuracy(const Episode& ep, const FeatureCache& features, const EvalConfig& cfg) {
  FeatureGroups support;
  std::vector<FeatureMap> pseudo_all;
  for (const ClassId& c : ep.support_classes) {
    for (const ImageRef& r : ep.support.at(c)) support[c].push_back(UnitNorm(features.Get(r)));
    if (auto it = ep.pseudo.find(c); it != ep.pseudo.end()) {
      for (const ImageRef& r : it->second) pseudo_all.push_back(UnitNorm(features.Get(r)));
    }
  }
  CentroidSet cs = CentroidsBasic(support, {}, cfg.pooling);
  if (!pseudo_all.empty()) cs = MsKMeansRefine(support, pseudo_all, cs, cfg.mskmeans_iterations, cfg.pooling);
  int correct = 0, total = 0;
  for (const ClassId& c : ep.support_classes) {
    for (const ImageRef& r : ep.query.at(c)) {
      correct += Classify(features.Get(r), cs, nullptr, cfg.temperature, cfg.pooling).predicted == c;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<double> Flat(const FeatureMap& f) { return f.vec(); }

Tensor ApplyMask(const FeatureMap& f, const Tensor& mask) {
  Tensor out = f;
  const int64_t hw = f.dim(1) * f.dim(2);
  for (int64_t c = 0; c < f.dim(0); ++c) {
    for (int64_t i = 0; i < hw; ++i) out[c * hw + i] *= mask[i];
  }
  return out;
}

}  // namespace

const char* ModelKindName(ModelKind k) {
  switch (k) {
    case ModelKind::kBasic:
      return "basic";
    case ModelKind::kMasking:
      return "masking";
    case ModelKind::kMsKMeans:
      return "mskmeans";
    case ModelKind::kNoAux:
      return "no_aux";
  }
  return "?";
}

ModelKind ParseModelKind(const std::string& s) {
  if (s == "basic") return ModelKind::kBasic;
  if (s == "masking") return ModelKind::kMasking;
  if (s == "mskmeans") return ModelKind::kMsKMeans;
  if (s == "no_aux") return ModelKind::kNoAux;
  throw ConfigError("unknown model kind '" + s + "' (expected basic, masking, mskmeans or no_aux)");
}

void EvalConfig::Validate() const {
  if (n_episodes < 1) throw ConfigError("evaluation needs at least one episode");
  if (parallel < 1) throw ConfigError("parallel episodes must be positive");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (mskmeans_iterations < 1) throw ConfigError("MS K-Means iterations must be positive");
}

Episode EvaluationEpisode(const Benchmark& bench, Phase phase, const EpisodeConfig& cfg, uint64_t seed, int index) {
  Rng rng = MakeStream(seed, kEvalStream + 10 * static_cast<uint64_t>(phase) + static_cast<uint64_t>(cfg.level.value),
                       static_cast<uint64_t>(index));
  return SampleEpisode(bench.Sources(), phase, cfg, rng);
}

double EpisodeAccuracy(ModelKind kind, const Episode& ep, const EvalModels& models, const EvalConfig& cfg) {
  if (models.features == nullptr) throw ValueError("evaluation needs a feature cache");
  nn::NoGradGuard no_grad;
  switch (kind) {
    case ModelKind::kBasic:
    case ModelKind::kNoAux: {
      const EpisodeBatch b = MakeEpisodeBatch(ep, *models.features, kind == ModelKind::kBasic);
      return Accuracy(BasicEpisodeLogits(b, cfg.temperature, cfg.pooling).value(), b.query_labels);
    }
    case ModelKind::kMasking: {
      if (models.masking == nullptr) throw ValueError("masking evaluation needs a trained masking model");
      const EpisodeBatch b = MakeEpisodeBatch(ep, *models.features, true);
      return Accuracy(MaskingEpisodeForward(*models.masking, b, cfg.pooling, cfg.unit_mask).logits.value(),
                      b.query_labels);
    }
    case ModelKind::kMsKMeans:
      return MsKMeansAccuracy(ep, *models.features, cfg);
  }
  return 0.0;
}

EvalReport SummarizeAccuracies(std::vector<double> accuracies) {
  EvalReport r;
  const MeanCi m = MeanAndCi(accuracies);
  r.n_episodes = static_cast<int>(accuracies.size());
  r.mean_accuracy = m.mean;
  r.ci95_halfwidth = m.ci95;
  r.per_episode_accuracies = std::move(accuracies);
  r.protocol = ProtocolString(r.n_episodes);
  return r;
}

EvalReport Evaluate(ModelKind kind, const Benchmark& bench, const EvalModels& models, Phase phase,
                    const EpisodeConfig& episode, const EvalConfig& cfg, uint64_t seed) {
  cfg.Validate();
  episode.Validate();
  std::vector<double> acc(static_cast<size_t>(cfg.n_episodes), 0.0);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&]() {
    for (int i = next++; i < cfg.n_episodes; i = next++) {
      try {
        const Episode ep = EvaluationEpisode(bench, phase, episode, seed, i);
        acc[static_cast<size_t>(i)] = EpisodeAccuracy(kind, ep, models, cfg);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = cfg.n_episodes;
      }
    }
  };
  const int threads = std::min(cfg.parallel, cfg.n_episodes);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  EvalReport r = SummarizeAccuracies(std::move(acc));
  r.kind = kind;
  r.phase = phase;
  r.level = episode.level.value;
  r.k_shot = episode.k_shot;
  r.seed = seed;
  return r;
}

double MiSummary::Mean(const std::vector<double>& v) const {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::map<ClassId, MaskBundle> EpisodeMasks(const Episode& ep, const FeatureCache& features, const MaskNet& f_theta) {
  std::map<ClassId, MaskBundle> out;
  for (const ClassId& c : ep.support_classes) {
    auto it = ep.pseudo.find(c);
    if (it == ep.pseudo.end() || it->second.empty()) continue;
    std::vector<FeatureMap> s, p;
    for (const ImageRef& r : ep.support.at(c)) s.push_back(features.Get(r));
    for (const ImageRef& r : it->second) p.push_back(features.Get(r));
    out.emplace(c, ComputeMask(f_theta, AggregateMean(s), AggregateMean(p)));
  }
  return out;
}

MiSummary AnalyzeMi(const Benchmark& bench, const FeatureCache& features, const MaskingModel& model,
                    const EpisodeConfig& episode, int n_episodes, int bins, uint64_t seed, Pooling pooling) {
  if (n_episodes < 1) throw ValueError("MI analysis needs at least one episode");
  if (episode.k_prime < 1) throw ValueError("MI analysis needs pseudo shots (k_prime > 0)");
  MiSummary out;
  out.bins = bins;
  out.n_episodes = n_episodes;
  for (int i = 0; i < n_episodes; ++i) {
    Rng rng = MakeStream(seed, kMiStream + static_cast<uint64_t>(episode.level.value), static_cast<uint64_t>(i));
    const Episode ep = SampleEpisode(bench.Sources(), Phase::kTest, episode, rng);
    const std::map<ClassId, MaskBundle> masks = EpisodeMasks(ep, features, model.f_theta);
    FeatureGroups support, pseudo;
    for (const ClassId& c : ep.support_classes) {
      for (const ImageRef& r : ep.support.at(c)) support[c].push_back(features.Get(r));
      for (const ImageRef& r : ep.pseudo.at(c)) pseudo[c].push_back(features.Get(r));
    }
    for (const auto& [c, sup] : support) {
      const Tensor& mask = masks.at(c).mask;
      for (const FeatureMap& s : sup) {
        const FeatureMap fs = model.f_beta.Apply(s);
        for (const FeatureMap& p : pseudo.at(c)) {
          const FeatureMap masked = ApplyMask(p, mask);
          out.support_raw.push_back(MutualInformation(Flat(s), Flat(p), bins));
          out.support_masked.push_back(MutualInformation(Flat(s), Flat(masked), bins));
          out.refined.push_back(MutualInformation(Flat(fs), Flat(model.f_beta.Apply(masked)), bins));
        }
      }
    }
    const CentroidSet cs = CentroidsMasked(model.f_beta, support, pseudo, masks, pooling);
    for (const ClassId& c : ep.support_classes) {
      const std::vector<double>& h = cs.Of(c);
      for (const ImageRef& r : ep.query.at(c)) {
        const std::vector<double> q = PoolFeature(model.f_beta.Apply(features.Get(r)), pooling);
        out.query_centroid.push_back(MutualInformation(q, h, bins));
      }
    }
  }
  return out;
}

std::array<double, 3> HeatColor(double v) {
  v = std::clamp(v, 0.0, 1.0);
  // Piecewise-linear blue -> cyan -> green -> yellow -> red.
  static constexpr double kStops[5][3] = {{0, 0, 1}, {0, 1, 1}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}};
  const double x = v * 4.0;
  const int i = std::min(3, static_cast<int>(x));
  const double t = x - i;
  std::array<double, 3> c{};
  for (int k = 0; k < 3; ++k) c[static_cast<size_t>(k)] = kStops[i][k] * (1.0 - t) + kStops[i + 1][k] * t;
  return c;
}

Tensor UpsampleNearest(const Tensor& mask, int64_t height, int64_t width) {
  if (mask.rank() != 3 || mask.dim(0) != 1) throw ShapeError("expected a (1, h, w) mask, got " + ShapeToString(mask.shape()));
  const int64_t h = mask.dim(1), w = mask.dim(2);
  Tensor out({1, height, width});
  for (int64_t y = 0; y < height; ++y) {
    for (int64_t x = 0; x < width; ++x) out.at(0, y, x) = mask.at(0, y * h / height, x * w / width);
  }
  return out;
}

std::vector<std::filesystem::path> ExportMaskHeatmaps(const Benchmark& bench, const Episode& ep,
                                                      const std::map<ClassId, MaskBundle>& masks,
                                                      const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir.string() + (ec ? ": " + ec.message() : ""));
  }
  std::vector<std::filesystem::path> written;
  for (const ClassId& c : ep.support_classes) {
    auto it = masks.find(c);
    if (it == masks.end()) continue;
    const Tensor& support_img = bench.store.Image(ep.support.at(c).front());
    const Tensor& pseudo_img = bench.store.Image(ep.pseudo.at(c).front());
    const int64_t h = support_img.dim(1), w = support_img.dim(2);
    const Tensor up = UpsampleNearest(it->second.mask, h, w);
    Tensor heat({3, h, w});
    Tensor panel({3, h, 3 * w});
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        const auto color = HeatColor(up.at(0, y, x));
        for (int64_t k = 0; k < 3; ++k) {
          heat.at(k, y, x) = color[static_cast<size_t>(k)];
          panel.at(k, y, x) = support_img.at(k, y, x);
          panel.at(k, y, w + x) = pseudo_img.at(k, y, x);
          panel.at(k, y, 2 * w + x) = 0.5 * pseudo_img.at(k, y, x) + 0.5 * color[static_cast<size_t>(k)];
        }
      }
    }
    const std::filesystem::path overlay = out_dir / ("mask_" + c + ".ppm");
    WritePpm(overlay, heat);
    WriteArrayFile(out_dir / ("mask_" + c + ".psa"), it->second.mask);
    WritePpm(out_dir / ("panel_" + c + ".ppm"), panel);
    written.push_back(overlay);
  }
  return written;
}

}  // namespace pseudoshot
