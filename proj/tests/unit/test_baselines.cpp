#include <gtest/gtest.h>

#include <filesystem>

#include "../support/fixtures.hpp"
#include "ridematch/baselines.hpp"

using namespace ridematch;

namespace {

DecisionContext at(int t, int last, bool matched = true) { return {t, last, matched, {}}; }

std::vector<int> schedule(const TimingPolicy& p, int horizon) {
  MatchEnv env(ridematch::testing::single_zone(0.0, 0, horizon));
  env.reset({});
  Engine rng(1);
  std::vector<int> ones;
  while (!env.done()) {
    const int t = env.t();
    if (p.decide(DecisionContext::from(env), rng)) ones.push_back(t);
    env.step(p.decide(DecisionContext::from(env), rng));
  }
  return ones;
}

}  // namespace

TEST(Baselines, FirstDispatchAlwaysMatches) {
  Engine rng(1);
  const auto p = TimingPolicy::first_dispatch();
  for (int t : {0, 1, 77, 599}) EXPECT_EQ(p.decide(at(t, t), rng), 1);
  EXPECT_EQ(p.label(), "first-dispatch");
}

TEST(Baselines, FixedIntervalThreshold) {
  Engine rng(1);
  const auto p = TimingPolicy::fixed_interval(15);
  EXPECT_EQ(p.decide(at(114, 100), rng), 0);
  EXPECT_EQ(p.decide(at(115, 100), rng), 1);
  EXPECT_EQ(p.label(), "fixed:15");
  EXPECT_THROW(TimingPolicy::fixed_interval(0), std::invalid_argument);
}

TEST(Baselines, FixedScheduleOverAnEpisode) {
  EXPECT_EQ(schedule(TimingPolicy::fixed_interval(1), 5), (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(schedule(TimingPolicy::first_dispatch(), 5), (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(schedule(TimingPolicy::fixed_interval(5), 20), (std::vector<int>{4, 9, 14, 19}));
}

TEST(Baselines, ParsePolicySpecs) {
  EXPECT_EQ(parse_policy("first-dispatch").kind(), PolicyKind::first_dispatch);
  const auto f = parse_policy("fixed:15");
  EXPECT_EQ(f.kind(), PolicyKind::fixed_interval);
  EXPECT_EQ(f.interval(), 15);
  for (const char* bad : {"fixed:", "fixed:0", "fixed:1.5", "fixed:-3", "learned:", "greedy"}) {
    EXPECT_THROW(parse_policy(bad), std::invalid_argument) << bad;
  }
  EXPECT_THROW(parse_policy("learned:/nonexistent/policy.ckpt"), std::runtime_error);
}

TEST(Baselines, LearnedPolicyLoadsCheckpoint) {
  const auto path = std::filesystem::temp_directory_path() / "ridematch_baseline_policy.ckpt";
  PolicyParams p = init_params(2, 4);
  // Push the actor bias far positive: always dispatch.
  p.theta[p.trunk_size() - 1] = 50.0;
  save_checkpoint(p, path);
  const auto learned = parse_policy("learned:" + path.string());
  EXPECT_EQ(learned.kind(), PolicyKind::learned);
  EXPECT_FALSE(learned.stochastic());
  EXPECT_EQ(learned.label(), "learned:" + path.string());
  Engine rng(3);
  EXPECT_EQ(learned.decide(at(10, 0), rng), 1);
  std::filesystem::remove(path);
}

TEST(Baselines, LearnedThresholdAndSampling) {
  PolicyParams p = init_params(2, 4);
  p.theta[p.trunk_size() - 1] = -50.0;
  const auto det = TimingPolicy::learned(std::make_shared<const PolicyParams>(p));
  Engine rng(3);
  EXPECT_EQ(det.decide(at(10, 0), rng), 0);

  // Zero actor head: p = 0.5 exactly, deterministic rule picks 1.
  PolicyParams half = init_params(2, 4);
  for (std::size_t k = half.trunk_size() - 5; k < half.trunk_size(); ++k) half.theta[k] = 0.0;
  const auto params = std::make_shared<const PolicyParams>(half);
  EXPECT_EQ(TimingPolicy::learned(params).decide(at(1, 0), rng), 1);
  const auto sto = TimingPolicy::learned(params, true);
  int ones = 0;
  for (int k = 0; k < 4000; ++k) ones += sto.decide(at(1, 0), rng);
  EXPECT_NEAR(ones / 4000.0, 0.5, 0.03);
}
