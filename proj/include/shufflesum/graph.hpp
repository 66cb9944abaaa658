#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "shufflesum/shuffler.hpp"

namespace shufflesum {

/// Undirected graph on the n players; an edge means some round moved a
/// message between the two endpoints. Edges are stored normalized (a < b),
/// sorted, deduplicated; self-loops are never stored.
struct CommGraph {
  std::size_t n = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

class UnionFind {
public:
  explicit UnionFind(std::size_t n) : parent_(n), count_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::size_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    parent_[b] = a;
    --count_;
  }

  std::size_t component_count() const { return count_; }

private:
  std::vector<std::size_t> parent_;
  std::size_t count_;
};

/// Edge {i, pi_j(i)} for every round j and every player i not fixed by pi_j.
inline CommGraph build_comm_graph(const RoundPermutations& rounds) {
  CommGraph g;
  if (rounds.empty()) return g;
  g.n = rounds.front().size();
  for (const Permutation& p : rounds) {
    for (std::size_t i = 0; i < g.n; ++i) {
      const std::uint32_t j = p(i);
      if (j == i) continue;
      g.edges.emplace_back(std::min<std::uint32_t>(i, j), std::max<std::uint32_t>(i, j));
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

/// Number of connected components; isolated vertices count.
inline std::size_t count_components(const CommGraph& g) {
  UnionFind uf(g.n);
  for (const auto& [a, b] : g.edges) uf.unite(a, b);
  return uf.component_count();
}

}  // namespace shufflesum
