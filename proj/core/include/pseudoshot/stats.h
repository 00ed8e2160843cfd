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

#ifndef PSEUDOSHOT_STATS_H_
#define PSEUDOSHOT_STATS_H_

#include <span>
#include <string>
#include <vector>

namespace pseudoshot {

struct MeanCi {
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 * sample standard deviation / sqrt(n)
};

// Throws ValueError on an empty list. A single value has a zero interval.
MeanCi MeanAndCi(std::span<const double> values);

// "Mean accuracy of <n> episodes", the label attached to every evaluation.
std::string ProtocolString(int n_episodes);

// Bin index of every value for `bins` equal-width bins spanning the vector's
// own [min, max]. Returns an empty vector when the range is zero.
std::vector<int> EqualWidthBins(std::span<const double> values, int bins);

// Mutual information (nats) of a joint count or probability table.
double MutualInformationFromJoint(const std::vector<std::vector<double>>& joint);

// MI between two equal-length vectors, each discretised into `bins`
// equal-width bins over its own range. A constant vector gives 0 and sets
// *degenerate. Throws ShapeError on a length mismatch and ValueError when
// bins < 2.
double MutualInformation(std::span<const double> a, std::span<const double> b, int bins = 32,
                         bool* degenerate = nullptr);

// Shannon entropy (nats) of the binned vector.
double BinnedEntropy(std::span<const double> values, int bins = 32);

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_STATS_H_
