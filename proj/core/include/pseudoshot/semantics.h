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

#ifndef PSEUDOSHOT_SEMANTICS_H_
#define PSEUDOSHOT_SEMANTICS_H_

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseudoshot/rng.h"
#include "pseudoshot/taxonomy.h"

namespace pseudoshot {

// Per-class semantic vectors (knowledge-graph node embeddings).
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(int dim);

  // Throws FormatError on dimension mismatch or duplicate ids and ValueError
  // on an all-zero or non-finite vector.
  void Add(const ClassId& id, std::vector<double> vector);

  int dim() const { return dim_; }
  size_t size() const { return vectors_.size(); }
  bool Contains(std::string_view id) const;
  // Throws LookupError.
  std::span<const double> Get(std::string_view id) const;
  // Ids in insertion order.
  const std::vector<ClassId>& ids() const { return order_; }

 private:
  int dim_ = 0;
  std::map<ClassId, std::vector<double>, std::less<>> vectors_;
  std::vector<ClassId> order_;
};

// `class_id<TAB>v1 v2 ... vd` per line; blank and '#' lines skipped.
EmbeddingTable ParseEmbeddings(std::istream& in);
EmbeddingTable ParseEmbeddings(std::string_view text);
EmbeddingTable LoadEmbeddingsFile(const std::string& path);
// Writes with 17 significant digits so values round-trip exactly.
void WriteEmbeddings(const EmbeddingTable& table, std::ostream& out);

// Cosine similarity clamped to [-1, 1]. Throws ValueError for zero vectors
// and ShapeError for mismatched lengths.
double Cosine(std::span<const double> u, std::span<const double> v);

enum class SelectionMethod { kSemantic, kRandom };

struct SelectionResult {
  ClassId target_class;
  std::vector<ClassId> chosen_classes;
  // Cosine similarity of each chosen class to the target; non-increasing.
  std::vector<double> scores;
  SelectionMethod method = SelectionMethod::kSemantic;
};

// The n_prime candidates most similar to `target`. The subset argmax of the
// summed similarity decomposes into per-candidate scores, so this is a top-k.
// Ties go to the lexicographically smaller id. Candidates without a vector
// are skipped with a warning.
SelectionResult SelectPseudoClasses(const EmbeddingTable& table, const ClassId& target,
                                    const ClassSet& candidates, int n_prime);

// Uniformly random subset of the usable candidates (the random-selection
// ablation). Scores are still reported, sorted descending.
SelectionResult SelectRandomClasses(const EmbeddingTable& table, const ClassId& target,
                                    const ClassSet& candidates, int n_prime, Rng& rng);

enum class HelperAggregation { kMax, kMean };

// The `count` candidates least similar to the training classes, where a
// candidate's similarity is the max (or mean) cosine to any training class.
std::vector<ClassId> SelectHelperClasses(const EmbeddingTable& table,
                                         const ClassSet& train_classes,
                                         const ClassSet& candidates, int count,
                                         HelperAggregation aggregation = HelperAggregation::kMax);

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_SEMANTICS_H_
