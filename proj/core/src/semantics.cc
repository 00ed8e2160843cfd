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

#include "pseudoshot/semantics.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "pseudoshot/error.h"

namespace pseudoshot {

EmbeddingTable::EmbeddingTable(int dim) : dim_(dim) {
  if (dim <= 0) throw ValueError("embedding dimension must be positive");
}

void EmbeddingTable::Add(const ClassId& id, std::vector<double> vector) {
  if (id.empty()) throw FormatError("empty class id in embedding table");
  if (dim_ == 0) dim_ = static_cast<int>(vector.size());
  if (static_cast<int>(vector.size()) != dim_) {
    throw FormatError("embedding for '" + id + "' has dimension " +
                      std::to_string(vector.size()) + ", expected " + std::to_string(dim_));
  }
  if (dim_ == 0) throw FormatError("embedding for '" + id + "' is empty");
  bool nonzero = false;
  for (double v : vector) {
    if (!std::isfinite(v)) throw ValueError("embedding for '" + id + "' is not finite");
    nonzero |= v != 0.0;
  }
  if (!nonzero) throw ValueError("embedding for '" + id + "' is the zero vector");
  if (!vectors_.emplace(id, std::move(vector)).second) {
    throw FormatError("duplicate embedding for '" + id + "'");
  }
  order_.push_back(id);
}

bool EmbeddingTable::Contains(std::string_view id) const {
  return vectors_.find(id) != vectors_.end();
}

std::span<const double> EmbeddingTable::Get(std::string_view id) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end()) throw LookupError("no embedding for class '" + std::string(id) + "'");
  return it->second;
}

EmbeddingTable ParseEmbeddings(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError("line " + std::to_string(lineno) + ": expected 'class_id<TAB>values'");
    }
    std::vector<double> values;
    std::istringstream fields(line.substr(tab + 1));
    std::string tok;
    while (fields >> tok) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw FormatError("line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
      values.push_back(v);
    }
    try {
      table.Add(line.substr(0, tab), std::move(values));
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ValueError& e) {
      throw ValueError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return table;
}

EmbeddingTable ParseEmbeddings(std::string_view text) {
  std::istringstream in{std::string(text)};
  return ParseEmbeddings(in);
}

EmbeddingTable LoadEmbeddingsFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file '" + path + "'");
  return ParseEmbeddings(in);
}

void WriteEmbeddings(const EmbeddingTable& table, std::ostream& out) {
  char buf[32];
  for (const ClassId& id : table.ids()) {
    out << id << '\t';
    const auto v = table.Get(id);
    for (size_t i = 0; i < v.size(); ++i) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v[i]);
      if (i) out << ' ';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

double Cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ShapeError("cosine of vectors with lengths " + std::to_string(u.size()) + " and " +
                     std::to_string(v.size()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ValueError("cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

namespace {

struct Scored {
  ClassId id;
  double score;
};

std::vector<Scored> ScoreUsable(const EmbeddingTable& table, std::span<const double> anchor,
                                const ClassSet& candidates, const char* context) {
  std::vector<Scored> out;
  out.reserve(candidates.size());
  size_t skipped = 0;
  for (const ClassId& c : candidates) {
    if (!table.Contains(c)) {
      ++skipped;
      continue;
    }
    out.push_back({c, Cosine(anchor, table.Get(c))});
  }
  if (skipped > 0) {
    spdlog::warn("{}: skipped {} candidate classes without embeddings", context, skipped);
  }
  return out;
}

void SortDescending(std::vector<Scored>& v) {
  std::sort(v.begin(), v.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
}

}  // namespace

SelectionResult SelectPseudoClasses(const EmbeddingTable& table, const ClassId& target,
                                    const ClassSet& candidates, int n_prime) {
  if (n_prime <= 0) throw ValueError("n_prime must be positive");
  const auto anchor = table.Get(target);
  std::vector<Scored> scored = ScoreUsable(table, anchor, candidates, "pseudo-class selection");
  if (scored.empty()) {
    throw SelectionError("no usable candidate classes for '" + target + "'");
  }
  const size_t k = std::min(scored.size(), static_cast<size_t>(n_prime));
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    [](const Scored& a, const Scored& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.id < b.id;
                    });
  SelectionResult r;
  r.target_class = target;
  for (size_t i = 0; i < k; ++i) {
    r.chosen_classes.push_back(scored[i].id);
    r.scores.push_back(scored[i].score);
  }
  return r;
}

SelectionResult SelectRandomClasses(const EmbeddingTable& table, const ClassId& target,
                                    const ClassSet& candidates, int n_prime, Rng& rng) {
  if (n_prime <= 0) throw ValueError("n_prime must be positive");
  const auto anchor = table.Get(target);
  std::vector<Scored> scored = ScoreUsable(table, anchor, candidates, "random selection");
  if (scored.empty()) {
    throw SelectionError("no usable candidate classes for '" + target + "'");
  }
  const size_t k = std::min(scored.size(), static_cast<size_t>(n_prime));
  // Partial Fisher-Yates over the (sorted) candidate list.
  for (size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<size_t> pick(i, scored.size() - 1);
    std::swap(scored[i], scored[pick(rng)]);
  }
  scored.resize(k);
  SortDescending(scored);
  SelectionResult r;
  r.target_class = target;
  r.method = SelectionMethod::kRandom;
  for (const Scored& s : scored) {
    r.chosen_classes.push_back(s.id);
    r.scores.push_back(s.score);
  }
  return r;
}

std::vector<ClassId> SelectHelperClasses(const EmbeddingTable& table,
                                         const ClassSet& train_classes,
                                         const ClassSet& candidates, int count,
                                         HelperAggregation aggregation) {
  if (count < 0) throw ValueError("helper count must be non-negative");
  if (count == 0) return {};
  std::vector<std::span<const double>> anchors;
  for (const ClassId& t : train_classes) {
    if (candidates.count(t)) {
      throw ValueError("helper candidate '" + t + "' is also a training class");
    }
    if (table.Contains(t)) anchors.push_back(table.Get(t));
  }
  if (anchors.empty()) throw SelectionError("no training class has an embedding");

  std::vector<Scored> scored;
  size_t skipped = 0;
  for (const ClassId& c : candidates) {
    if (!table.Contains(c)) {
      ++skipped;
      continue;
    }
    const auto v = table.Get(c);
    double agg = aggregation == HelperAggregation::kMax ? -2.0 : 0.0;
    for (const auto& a : anchors) {
      const double s = Cosine(v, a);
      agg = aggregation == HelperAggregation::kMax ? std::max(agg, s) : agg + s;
    }
    if (aggregation == HelperAggregation::kMean) agg /= static_cast<double>(anchors.size());
    scored.push_back({c, agg});
  }
  if (skipped > 0) spdlog::warn("helper selection: skipped {} classes without embeddings", skipped);
  if (scored.empty()) throw SelectionError("no usable helper candidates");
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.id < b.id;
  });
  std::vector<ClassId> out;
  for (size_t i = 0; i < scored.size() && i < static_cast<size_t>(count); ++i) {
    out.push_back(scored[i].id);
  }
  return out;
}

}  // namespace pseudoshot
