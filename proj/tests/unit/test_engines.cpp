#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "ridematch/engines/assignment.hpp"
#include "ridematch/engines/blossom.hpp"

using ridematch::engines::max_weight_matching;
using ridematch::engines::min_cost_assignment;
using ridematch::engines::WeightedEdge;

namespace {

std::int64_t matching_weight(const std::vector<int>& mate, const std::vector<WeightedEdge>& edges) {
  std::int64_t total = 0;
  for (const auto& e : edges) {
    if (mate[e.u] == e.v) total += e.weight;
  }
  return total;
}

// Best total over all matchings, by recursion on the lowest free vertex.
std::int64_t brute_matching(int n, const std::vector<WeightedEdge>& edges) {
  std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n, std::numeric_limits<std::int64_t>::min()));
  for (const auto& e : edges) {
    w[e.u][e.v] = std::max(w[e.u][e.v], e.weight);
    w[e.v][e.u] = w[e.u][e.v];
  }
  std::vector<char> used(n, 0);
  std::function<std::int64_t(int)> rec = [&](int a) -> std::int64_t {
    while (a < n && used[a]) ++a;
    if (a == n) return 0;
    used[a] = 1;
    std::int64_t best = rec(a + 1);
    for (int b = a + 1; b < n; ++b) {
      if (used[b] || w[a][b] == std::numeric_limits<std::int64_t>::min()) continue;
      used[b] = 1;
      best = std::max(best, w[a][b] + rec(a + 1));
      used[b] = 0;
    }
    used[a] = 0;
    return best;
  };
  return rec(0);
}

}  // namespace

TEST(Blossom, EmptyAndSingleEdge) {
  EXPECT_TRUE(max_weight_matching(0, {}).empty());
  const std::vector<WeightedEdge> one{{0, 1, 5}};
  const auto mate = max_weight_matching(3, one);
  EXPECT_EQ(mate, (std::vector<int>{1, 0, -1}));
}

TEST(Blossom, PathPrefersTwoOuterEdges) {
  const std::vector<WeightedEdge> e{{0, 1, 7}, {1, 2, 9}, {2, 3, 7}};
  const auto mate = max_weight_matching(4, e);
  EXPECT_EQ(mate, (std::vector<int>{1, 0, 3, 2}));
}

TEST(Blossom, NonPositiveEdgesIgnored) {
  const std::vector<WeightedEdge> e{{0, 1, 0}, {1, 2, -3}};
  EXPECT_EQ(max_weight_matching(3, e), (std::vector<int>{-1, -1, -1}));
}

TEST(Blossom, OddCycleNeedsBlossom) {
  // Triangle plus pendant edges: optimum uses 0-1 and 2-3.
  const std::vector<WeightedEdge> e{{0, 1, 6}, {1, 2, 6}, {0, 2, 6}, {2, 3, 5}, {0, 4, 1}};
  const auto mate = max_weight_matching(5, e);
  EXPECT_EQ(matching_weight(mate, e), brute_matching(5, e));
}

TEST(Blossom, RejectsBadEdges) {
  const std::vector<WeightedEdge> loop{{1, 1, 3}};
  EXPECT_THROW(max_weight_matching(2, loop), std::invalid_argument);
  const std::vector<WeightedEdge> out{{0, 4, 3}};
  EXPECT_THROW(max_weight_matching(2, out), std::invalid_argument);
}

TEST(Blossom, MatchesExhaustiveSearchOnRandomGraphs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 11)(rng);
    const double density = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
    const int wmax = trial % 3 == 0 ? 3 : 1000;  // small range forces ties
    std::vector<WeightedEdge> e;
    for (int u = 0; u < n; ++u) {
      for (int v = u + 1; v < n; ++v) {
        if (std::uniform_real_distribution<double>(0, 1)(rng) < density) {
          e.push_back({u, v, std::uniform_int_distribution<int>(1, wmax)(rng)});
        }
      }
    }
    const auto mate = max_weight_matching(n, e);
    for (int v = 0; v < n; ++v) {
      if (mate[v] >= 0) {
        ASSERT_EQ(mate[mate[v]], v);
      }
    }
    ASSERT_EQ(matching_weight(mate, e), brute_matching(n, e)) << "trial " << trial;
  }
}

TEST(Assignment, EmptySides) {
  EXPECT_EQ(min_cost_assignment({}, 0, 3), std::vector<int>{});
  EXPECT_EQ(min_cost_assignment({}, 2, 0), (std::vector<int>{-1, -1}));
  const std::vector<double> c(5);
  EXPECT_THROW(min_cost_assignment(c, 2, 3), std::invalid_argument);
}

TEST(Assignment, MatchesPermutationSearch) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t r = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    const std::size_t c = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    std::vector<double> cost(r * c);
    for (auto& x : cost) x = std::uniform_real_distribution<double>(0, 100)(rng);
    const auto got = min_cost_assignment(cost, r, c);

    double got_total = 0.0;
    std::size_t assigned = 0;
    std::vector<char> col_used(c, 0);
    for (std::size_t i = 0; i < r; ++i) {
      if (got[i] < 0) continue;
      ASSERT_FALSE(col_used[got[i]]);
      col_used[got[i]] = 1;
      got_total += cost[i * c + got[i]];
      ++assigned;
    }
    ASSERT_EQ(assigned, std::min(r, c));

    // Oracle: permute the larger side, take the first min(r,c) slots.
    double best = std::numeric_limits<double>::infinity();
    const std::size_t big = std::max(r, c);
    std::vector<std::size_t> perm(big);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double t = 0.0;
      for (std::size_t k = 0; k < std::min(r, c); ++k) {
        t += r <= c ? cost[k * c + perm[k]] : cost[perm[k] * c + k];
      }
      best = std::min(best, t);
    } while (std::next_permutation(perm.begin(), perm.end()));
    ASSERT_NEAR(got_total, best, 1e-9 * std::max(1.0, best));
  }
}
