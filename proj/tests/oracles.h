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


// Independent reference implementations used by the unit tests and the
// acceptance binary. None of them call into the code they check beyond
// building inputs.

#ifndef PSEUDOSHOT_TESTS_ORACLES_H_
#define PSEUDOSHOT_TESTS_ORACLES_H_

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pseudoshot/autodiff.h"
#include "pseudoshot/rng.h"
#include "pseudoshot/semantics.h"
#include "pseudoshot/taxonomy.h"

namespace pseudoshot::oracle {

using Edges = std::vector<std::pair<ClassId, ClassId>>;

// Random rooted tree on n nodes: node i attaches to a uniform earlier node.
// Ids are shuffled so that insertion order carries no structure.
Edges RandomTreeEdges(int n, Rng& rng);

// Parent walk over an explicit child -> parent map.
ClassId Ancestor(const std::map<ClassId, ClassId>& parent, const ClassId& c, int level);
// Depth-first traversal over explicit child lists.
ClassSet DescendantsInclusive(const Edges& edges, const ClassId& c);
// universe minus the subtree of every target's level-th ancestor.
ClassSet Prune(const Edges& edges, const ClassSet& universe, const ClassSet& targets, int level);

std::map<ClassId, ClassId> ParentMap(const Edges& edges);

// Subset of size min(n_prime, |candidates|) maximising the summed cosine,
// by enumerating every subset. Returned best-first by individual score.
std::vector<ClassId> ExhaustiveSelect(const EmbeddingTable& table, const ClassId& target,
                                      const ClassSet& candidates, int n_prime);

struct GradCheck {
  double max_rel_error = 0.0;
  int checked = 0;
};

// Central differences of `loss` with respect to every entry of each
// parameter, compared with the gradients Backward() leaves on them.
// Relative error is |a - n| / max(|a|, |n|, 1e-4); the floor keeps
// entries whose true gradient is ~0 from dividing rounding noise by zero.
GradCheck CheckGradients(const std::function<nn::Var()>& loss, const std::vector<nn::Var>& params,
                         double step = 1e-6);

}  // namespace pseudoshot::oracle

#endif  // PSEUDOSHOT_TESTS_ORACLES_H_
