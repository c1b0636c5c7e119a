#include "ridematch/engines/assignment.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace ridematch::engines {
namespace {

// n <= m. a(i, j) is 0-based. Returns col_of_row.
template <class CostFn>
std::vector<int> hungarian(std::size_t n, std::size_t m, CostFn a) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> col_of_row(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) col_of_row[p[j] - 1] = static_cast<int>(j - 1);
  }
  return col_of_row;
}

}  // namespace

std::vector<int> min_cost_assignment(std::span<const double> cost, std::size_t rows,
                                     std::size_t cols) {
  if (cost.size() != rows * cols) {
    throw std::invalid_argument("min_cost_assignment: cost size does not match rows*cols");
  }
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);

  if (rows <= cols) {
    return hungarian(rows, cols, [&](std::size_t i, std::size_t j) { return cost[i * cols + j]; });
  }
  // Transpose so the smaller side drives the augmentations.
  const auto row_of_col =
      hungarian(cols, rows, [&](std::size_t j, std::size_t i) { return cost[i * cols + j]; });
  std::vector<int> col_of_row(rows, -1);
  for (std::size_t j = 0; j < cols; ++j) {
    if (row_of_col[j] >= 0) col_of_row[static_cast<std::size_t>(row_of_col[j])] = static_cast<int>(j);
  }
  return col_of_row;
}

}  // namespace ridematch::engines
