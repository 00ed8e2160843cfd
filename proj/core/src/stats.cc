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

#include "pseudoshot/stats.h"

#include <algorithm>
#include <cmath>

#include "pseudoshot/error.h"

namespace pseudoshot {

MeanCi MeanAndCi(std::span<const double> values) {
  if (values.empty()) throw ValueError("mean of an empty accuracy list");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  MeanCi out;
  out.mean = sum / n;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) {
    // Exact for constant lists, where the summed mean can be off by an ulp.
    out.mean = *lo;
    return out;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

std::string ProtocolString(int n_episodes) { return "Mean accuracy of " + std::to_string(n_episodes) + " episodes"; }

std::vector<int> EqualWidthBins(std::span<const double> values, int bins) {
  if (bins < 2) throw ValueError("need at least 2 bins");
  if (values.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return {};
  std::vector<int> out;
  out.reserve(values.size());
  const double width = (hi - lo) / bins;
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    out.push_back(std::clamp(b, 0, bins - 1));
  }
  return out;
}

double MutualInformationFromJoint(const std::vector<std::vector<double>>& joint) {
  double total = 0.0;
  std::vector<double> pa(joint.size(), 0.0);
  std::vector<double> pb;
  for (size_t i = 0; i < joint.size(); ++i) {
    if (pb.size() < joint[i].size()) pb.resize(joint[i].size(), 0.0);
    for (size_t j = 0; j < joint[i].size(); ++j) {
      if (joint[i][j] < 0.0) throw ValueError("joint table entries must be non-negative");
      pa[i] += joint[i][j];
      pb[j] += joint[i][j];
      total += joint[i][j];
    }
  }
  if (!(total > 0.0)) return 0.0;
  double mi = 0.0;
  for (size_t i = 0; i < joint.size(); ++i) {
    for (size_t j = 0; j < joint[i].size(); ++j) {
      const double p = joint[i][j] / total;
      if (p <= 0.0) continue;
      mi += p * std::log(p / ((pa[i] / total) * (pb[j] / total)));
    }
  }
  return std::max(0.0, mi);
}

double MutualInformation(std::span<const double> a, std::span<const double> b, int bins, bool* degenerate) {
  if (a.size() != b.size()) {
    throw ShapeError("MI needs equal-length vectors, got " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  const std::vector<int> ba = EqualWidthBins(a, bins);
  const std::vector<int> bb = EqualWidthBins(b, bins);
  if (degenerate != nullptr) *degenerate = ba.empty() || bb.empty();
  if (ba.empty() || bb.empty()) return 0.0;
  std::vector<std::vector<double>> joint(static_cast<size_t>(bins), std::vector<double>(static_cast<size_t>(bins), 0.0));
  for (size_t i = 0; i < ba.size(); ++i) joint[static_cast<size_t>(ba[i])][static_cast<size_t>(bb[i])] += 1.0;
  return MutualInformationFromJoint(joint);
}

double BinnedEntropy(std::span<const double> values, int bins) {
  const std::vector<int> b = EqualWidthBins(values, bins);
  if (b.empty()) return 0.0;
  std::vector<double> counts(static_cast<size_t>(bins), 0.0);
  for (int i : b) counts[static_cast<size_t>(i)] += 1.0;
  double h = 0.0;
  const double n = static_cast<double>(b.size());
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

}  // namespace pseudoshot
