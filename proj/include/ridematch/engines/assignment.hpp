#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ridematch::engines {

/// Minimum-cost assignment on a dense, row-major `rows` x `cols` cost matrix.
///
/// Shortest-augmenting-path Hungarian method with row/column potentials,
/// O(min^2 * max). Every vertex of the smaller side is matched, so the result
/// has exactly min(rows, cols) assigned rows; among those maximum-cardinality
/// assignments the total cost is minimal. Returns, per row, the assigned
/// column or -1.
std::vector<int> min_cost_assignment(std::span<const double> cost, std::size_t rows,
                                     std::size_t cols);

}  // namespace ridematch::engines
