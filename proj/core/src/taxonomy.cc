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

#include "pseudoshot/taxonomy.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pseudoshot/error.h"

namespace pseudoshot {

PruneLevel::PruneLevel(int v) : value(v) {
  if (v < 0) throw ValueError("prune level must be non-negative, got " + std::to_string(v));
}

Taxonomy Taxonomy::FromEdges(const std::vector<std::pair<ClassId, ClassId>>& edges) {
  Taxonomy t;
  auto intern = [&t](const ClassId& id) {
    auto [it, inserted] = t.index_.emplace(id, static_cast<int>(t.ids_.size()));
    if (inserted) {
      t.ids_.push_back(id);
      t.parent_.push_back(-1);
    }
    return it->second;
  };
  for (const auto& [p, c] : edges) {
    if (p.empty() || c.empty()) throw StructureError("empty class id in edge list");
    if (p == c) throw StructureError("self loop at node '" + c + "'");
    const int pi = intern(p);
    const int ci = intern(c);
    if (t.parent_[static_cast<size_t>(ci)] != -1) {
      if (t.parent_[static_cast<size_t>(ci)] == pi) {
        throw StructureError("duplicate edge '" + p + "' -> '" + c + "'");
      }
      throw StructureError("node '" + c + "' has multiple parents ('" +
                           t.ids_[static_cast<size_t>(t.parent_[static_cast<size_t>(ci)])] +
                           "' and '" + p + "')");
    }
    t.parent_[static_cast<size_t>(ci)] = pi;
  }
  if (t.ids_.empty()) throw StructureError("taxonomy has no nodes");

  std::vector<int> roots;
  for (size_t i = 0; i < t.ids_.size(); ++i) {
    if (t.parent_[i] == -1) roots.push_back(static_cast<int>(i));
  }
  if (roots.empty()) {
    throw StructureError("cycle detected: no root node (e.g. at '" + t.ids_.front() + "')");
  }
  if (roots.size() > 1) {
    throw StructureError("taxonomy has multiple roots ('" + t.ids_[static_cast<size_t>(roots[0])] +
                         "' and '" + t.ids_[static_cast<size_t>(roots[1])] + "')");
  }
  t.root_ = roots.front();

  const size_t n = t.ids_.size();
  t.children_.assign(n, {});
  for (size_t i = 0; i < n; ++i) {
    if (t.parent_[i] >= 0) t.children_[static_cast<size_t>(t.parent_[i])].push_back(static_cast<int>(i));
  }

  // Iterative preorder; anything unreached sits on a cycle detached from root.
  t.depth_.assign(n, -1);
  t.enter_.assign(n, -1);
  t.exit_.assign(n, -1);
  int clock = 0;
  std::vector<std::pair<int, size_t>> stack{{t.root_, 0}};
  t.depth_[static_cast<size_t>(t.root_)] = 0;
  t.enter_[static_cast<size_t>(t.root_)] = clock++;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& kids = t.children_[static_cast<size_t>(node)];
    if (next < kids.size()) {
      const int child = kids[next++];
      t.depth_[static_cast<size_t>(child)] = t.depth_[static_cast<size_t>(node)] + 1;
      t.enter_[static_cast<size_t>(child)] = clock++;
      stack.emplace_back(child, 0);
    } else {
      t.exit_[static_cast<size_t>(node)] = clock;
      stack.pop_back();
    }
  }
  for (size_t i = 0; i < n; ++i) {
    if (t.depth_[i] < 0) throw StructureError("cycle detected at node '" + t.ids_[i] + "'");
  }
  return t;
}

int Taxonomy::IndexOf(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw LookupError("unknown class id '" + std::string(id) + "'");
  return it->second;
}

bool Taxonomy::Contains(std::string_view id) const {
  return index_.find(std::string(id)) != index_.end();
}

std::string Taxonomy::Parent(std::string_view id) const {
  const int p = parent_[static_cast<size_t>(IndexOf(id))];
  return p < 0 ? std::string() : ids_[static_cast<size_t>(p)];
}

std::vector<ClassId> Taxonomy::Children(std::string_view id) const {
  std::vector<ClassId> out;
  for (int c : children_[static_cast<size_t>(IndexOf(id))]) out.push_back(ids_[static_cast<size_t>(c)]);
  return out;
}

int Taxonomy::Depth(std::string_view id) const { return depth_[static_cast<size_t>(IndexOf(id))]; }

int Taxonomy::MaxDepth() const { return *std::max_element(depth_.begin(), depth_.end()); }

bool Taxonomy::IsLeaf(std::string_view id) const {
  return children_[static_cast<size_t>(IndexOf(id))].empty();
}

std::vector<ClassId> Taxonomy::Leaves() const {
  std::vector<ClassId> out;
  for (size_t i = 0; i < ids_.size(); ++i) {
    if (children_[i].empty()) out.push_back(ids_[i]);
  }
  return out;
}

int Taxonomy::AncestorIndex(int node, int level) const {
  for (int step = 0; step < level; ++step) {
    const int p = parent_[static_cast<size_t>(node)];
    if (p < 0) break;
    node = p;
  }
  return node;
}

const ClassId& Taxonomy::Ancestor(std::string_view id, PruneLevel level) const {
  return ids_[static_cast<size_t>(AncestorIndex(IndexOf(id), level.value))];
}

ClassSet Taxonomy::DescendantsInclusive(std::string_view id) const {
  const int u = IndexOf(id);
  ClassSet out;
  std::vector<int> stack{u};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    out.insert(ids_[static_cast<size_t>(v)]);
    for (int c : children_[static_cast<size_t>(v)]) stack.push_back(c);
  }
  return out;
}

bool Taxonomy::IsInSubtree(std::string_view node, std::string_view ancestor) const {
  const auto v = static_cast<size_t>(IndexOf(node));
  const auto u = static_cast<size_t>(IndexOf(ancestor));
  return enter_[u] <= enter_[v] && enter_[v] < exit_[u];
}

ClassSet Taxonomy::PruneLevelSet(const ClassSet& universe, const ClassSet& targets,
                                 PruneLevel level) const {
  std::vector<std::pair<int, int>> removed;
  removed.reserve(targets.size());
  for (const ClassId& c : targets) {
    const auto a = static_cast<size_t>(AncestorIndex(IndexOf(c), level.value));
    removed.emplace_back(enter_[a], exit_[a]);
  }
  ClassSet out;
  for (const ClassId& c : universe) {
    const int t = enter_[static_cast<size_t>(IndexOf(c))];
    const bool hit = std::any_of(removed.begin(), removed.end(),
                                 [t](const auto& r) { return r.first <= t && t < r.second; });
    if (!hit) out.insert(out.end(), c);
  }
  return out;
}

std::vector<std::pair<ClassId, ClassId>> Taxonomy::Edges() const {
  std::vector<std::pair<ClassId, ClassId>> out;
  std::vector<int> frontier{root_};
  for (size_t head = 0; head < frontier.size(); ++head) {
    const int u = frontier[head];
    for (int c : children_[static_cast<size_t>(u)]) {
      out.emplace_back(ids_[static_cast<size_t>(u)], ids_[static_cast<size_t>(c)]);
      frontier.push_back(c);
    }
  }
  return out;
}

Taxonomy ParseTaxonomy(std::istream& in) {
  std::vector<std::pair<ClassId, ClassId>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": expected 'parent<TAB>child'");
    }
    std::string parent = line.substr(0, tab);
    std::string child = line.substr(tab + 1);
    if (parent.empty() || child.empty()) {
      throw ParseError("line " + std::to_string(lineno) + ": empty class id");
    }
    edges.emplace_back(std::move(parent), std::move(child));
  }
  return Taxonomy::FromEdges(edges);
}

Taxonomy ParseTaxonomy(std::string_view text) {
  std::istringstream in{std::string(text)};
  return ParseTaxonomy(in);
}

Taxonomy LoadTaxonomyFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open taxonomy file '" + path + "'");
  return ParseTaxonomy(in);
}

void WriteTaxonomy(const Taxonomy& t, std::ostream& out) {
  for (const auto& [p, c] : t.Edges()) out << p << '\t' << c << '\n';
}

std::string TaxonomyToString(const Taxonomy& t) {
  std::ostringstream os;
  WriteTaxonomy(t, os);
  return os.str();
}

}  // namespace pseudoshot
