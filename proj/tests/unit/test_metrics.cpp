#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "../support/fixtures.hpp"
#include "ridematch/metrics.hpp"

using namespace ridematch;
using ridematch::testing::driver_at;
using ridematch::testing::episode_of;
using ridematch::testing::order_at;
using ridematch::testing::single_zone;
using ridematch::testing::two_zones;

TEST(Metrics, SingleOrderArithmetic) {
  MatchEnv env(single_zone(0.0, 1, 400));
  env.reset(episode_of({order_at(0, {2, 0}, {2, 1}, 2)}, {driver_at(0, {0, 0})}));
  while (!env.done()) env.step(env.t() == 10 ? 1 : 0);
  const EpisodeMetrics m = summarize_episode(env, 0.0, 0.0);
  EXPECT_EQ(m.served_count, 1);
  EXPECT_DOUBLE_EQ(*m.avg_matching_time, 8.0);
  EXPECT_DOUBLE_EQ(*m.avg_pickup_time, 180.0);
  EXPECT_DOUBLE_EQ(*m.avg_total_waiting_time, 188.0);
  EXPECT_DOUBLE_EQ(*m.avg_detour_delay, 0.0);
  EXPECT_EQ(m.match_intervals.size(), 0u);
}

TEST(Metrics, PooledDetourDelay) {
  Scenario s = single_zone(0.0, 1, 50, ServiceMode::pooling);
  // Same origin; j is dropped first at (3,0), so i rides 7 km for a 5 km trip.
  MatchEnv env(s);
  env.reset(episode_of({order_at(0, {0, 0}, {3, 4}, 0), order_at(1, {0, 0}, {3, 0}, 0)},
                       {driver_at(0, {0, 0})}));
  env.step(1);
  const auto& recs = env.passengers();
  ASSERT_TRUE(recs[0].served() && recs[1].served());
  EXPECT_TRUE(recs[0].pooled);
  EXPECT_NEAR(recs[0].detour_seconds, 180.0, 1e-9);
  EXPECT_NEAR(recs[1].detour_seconds, 0.0, 1e-9);
  while (!env.done()) env.step(0);
  EXPECT_NEAR(*summarize_episode(env, 0.0, 0.0).avg_detour_delay, 90.0, 1e-9);
}

TEST(Metrics, ZeroDemandReportsAbsentAverages) {
  const AggregateReport r = evaluate(TimingPolicy::first_dispatch(), single_zone(0.0, 3, 30), 4, 1);
  EXPECT_EQ(r.episodes, 4);
  EXPECT_EQ(r.at("served_count").mean, 0.0);
  EXPECT_EQ(r.at("avg_total_waiting_time").n, 0);
  EXPECT_EQ(r.at("total_waiting_time").mean, 0.0);
  EXPECT_EQ(r.at("natural_return").mean, 0.0);
  EXPECT_THROW(evaluate(TimingPolicy::first_dispatch(), single_zone(0.0, 3, 30), 0, 1),
               std::invalid_argument);
}

TEST(Metrics, EvaluateIsPairedAndThreadIndependent) {
  const Scenario s = two_zones(0.3, 5, 120, ServiceMode::pooling);
  const auto p = TimingPolicy::fixed_interval(10);
  const AggregateReport a = evaluate(p, s, 6, 9, 1);
  const AggregateReport b = evaluate(p, s, 6, 9, 3);
  EXPECT_EQ(report_to_json(a), report_to_json(b));
  // Intervals of 10 ticks: 11 dispatches at 9, 19, ..., 119 per episode.
  EXPECT_EQ(a.match_intervals.size(), 6u * 11u);
  for (int iv : a.match_intervals) EXPECT_EQ(iv, 10);
  EXPECT_NEAR(a.at("action_rate").mean, 12.0 / 120.0, 1e-12);
}

TEST(Metrics, NaturalReturnMatchesEnvironment) {
  const Scenario s = two_zones(0.3, 5, 100, ServiceMode::hailing);
  const EpisodeData ep = generate_episode(s, eval_episode_seed(4, 0));
  Engine rng(0);
  const EpisodeMetrics m = run_episode(TimingPolicy::fixed_interval(7), s, ep, rng);
  MatchEnv env(s);
  env.reset(ep);
  double g = 0.0;
  while (!env.done()) g += env.step(TimingPolicy::fixed_interval(7).decide(DecisionContext::from(env), rng)).reward;
  EXPECT_EQ(m.natural_return, g);
  EXPECT_LT(g, 0.0);
}

TEST(Metrics, QuartilesAndHistogram) {
  const Quartiles q = quartiles({4, 1, 3, 2});
  EXPECT_DOUBLE_EQ(q.q1, 1.75);
  EXPECT_DOUBLE_EQ(q.median, 2.5);
  EXPECT_DOUBLE_EQ(q.q3, 3.25);
  EXPECT_DOUBLE_EQ(q.iqr(), 1.5);
  EXPECT_EQ(quartiles({}).iqr(), 0.0);
  EXPECT_EQ(histogram({0, 9, 10, 25, 500}, 10, 3), (std::vector<int>{2, 1, 2}));
}

TEST(Metrics, CompareMarksBestAndDiffs) {
  const Scenario s = two_zones(0.3, 4, 120, ServiceMode::hailing);
  const auto a = evaluate(TimingPolicy::first_dispatch(), s, 5, 3);
  const auto b = evaluate(TimingPolicy::fixed_interval(30), s, 5, 3);
  const Comparison same = compare({a, a});
  for (const auto& row : same.rows) EXPECT_EQ(row.diff_vs_baseline, 0.0);
  const Comparison c = compare({a, b});
  EXPECT_EQ(c.baseline, "first-dispatch");
  for (const auto& row : c.rows) {
    if (row.metric != "avg_matching_time") continue;
    EXPECT_EQ(row.best, row.label == "first-dispatch");
  }
  std::ostringstream csv;
  write_csv(c, csv);
  const std::string table = csv.str();
  EXPECT_EQ(table.rfind("strategy,episodes,avg_pickup_time_mean,avg_pickup_time_se,", 0), 0u);
  EXPECT_NE(table.find("avg_pickup_time_diff_vs_first-dispatch,avg_pickup_time_best"), std::string::npos);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  EXPECT_NE(table.find("\nfixed:30,5,"), std::string::npos);

  const auto other_seed = evaluate(TimingPolicy::first_dispatch(), s, 5, 4);
  EXPECT_THROW(compare({a, other_seed}), std::invalid_argument);
  EXPECT_THROW(compare({}), std::invalid_argument);
  EXPECT_EQ(compare({a}).rows.size(), metric_names().size());
}

TEST(Metrics, StandardErrorOracle) {
  std::vector<EpisodeMetrics> eps(3);
  eps[0].served_count = 1;
  eps[1].served_count = 2;
  eps[2].served_count = 6;
  const AggregateReport r = aggregate("x", "s", 1, eps);
  EXPECT_DOUBLE_EQ(r.at("served_count").mean, 3.0);
  // sample variance 7, se = sqrt(7 / 3)
  EXPECT_DOUBLE_EQ(r.at("served_count").se, std::sqrt(7.0 / 3.0));
  EXPECT_EQ(r.at("served_count").n, 3);
}
