#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ridematch::engines {

struct WeightedEdge {
  int u = 0;
  int v = 0;
  std::int64_t weight = 0;
};

/// Maximum-weight matching on a general undirected graph with `vertices`
/// vertices (Edmonds' blossom algorithm with dual variables, O(V^3)).
///
/// Not restricted to perfect or maximum-cardinality matchings: edges with
/// non-positive weight are never worth taking. Integer weights keep every
/// dual variable integral, so the optimum is exact. Returns mate[v], or -1
/// for an unmatched vertex. Self-loops and out-of-range endpoints throw.
std::vector<int> max_weight_matching(int vertices, std::span<const WeightedEdge> edges);

}  // namespace ridematch::engines
