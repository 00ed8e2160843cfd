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

#ifndef PSEUDOSHOT_TAXONOMY_H_
#define PSEUDOSHOT_TAXONOMY_H_

#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pseudoshot {

using ClassId = std::string;
using ClassSet = std::set<ClassId>;

// How far up the tree auxiliary pruning reaches. Level 0 removes the target
// classes and their subtypes, level 1 their parents' subtrees, and so on.
struct PruneLevel {
  int value = 0;

  PruneLevel() = default;
  explicit PruneLevel(int v);
};

// Rooted class tree. Immutable after construction; every query is const and
// safe to call concurrently.
class Taxonomy {
 public:
  // Builds a tree from (parent, child) edges. Throws StructureError on
  // multi-parent nodes, cycles, forests and self loops.
  static Taxonomy FromEdges(const std::vector<std::pair<ClassId, ClassId>>& edges);

  const ClassId& root() const { return ids_[static_cast<size_t>(root_)]; }
  size_t size() const { return ids_.size(); }
  bool Contains(std::string_view id) const;
  // Node ids in first-appearance order.
  const std::vector<ClassId>& nodes() const { return ids_; }

  // Empty for the root.
  std::string Parent(std::string_view id) const;
  std::vector<ClassId> Children(std::string_view id) const;
  int Depth(std::string_view id) const;
  int MaxDepth() const;
  bool IsLeaf(std::string_view id) const;
  std::vector<ClassId> Leaves() const;

  // The `level`-th ancestor of `id`; walks past the root clamp to the root.
  const ClassId& Ancestor(std::string_view id, PruneLevel level) const;

  // `id` together with everything below it.
  ClassSet DescendantsInclusive(std::string_view id) const;

  // True when `node` lies in the subtree rooted at `ancestor` (inclusive).
  bool IsInSubtree(std::string_view node, std::string_view ancestor) const;

  // Auxiliary classes left after removing, for every target, the whole
  // subtree of its level-th ancestor from `universe`.
  ClassSet PruneLevelSet(const ClassSet& universe, const ClassSet& targets,
                         PruneLevel level) const;

  // (parent, child) pairs in breadth-first order from the root.
  std::vector<std::pair<ClassId, ClassId>> Edges() const;

 private:
  int IndexOf(std::string_view id) const;
  int AncestorIndex(int node, int level) const;

  std::vector<ClassId> ids_;
  std::unordered_map<std::string, int> index_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<int> depth_;
  // Preorder entry/exit times: node v is under u iff enter_[u] <= enter_[v] < exit_[u].
  std::vector<int> enter_;
  std::vector<int> exit_;
  int root_ = -1;
};

// Parses `parent<TAB>child` lines. Blank lines and lines starting with '#'
// are skipped. Throws ParseError (with 1-based line number) or StructureError.
Taxonomy ParseTaxonomy(std::istream& in);
Taxonomy ParseTaxonomy(std::string_view text);
Taxonomy LoadTaxonomyFile(const std::string& path);

void WriteTaxonomy(const Taxonomy& t, std::ostream& out);
std::string TaxonomyToString(const Taxonomy& t);

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_TAXONOMY_H_
