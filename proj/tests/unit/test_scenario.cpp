#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <string>

#include "../support/fixtures.hpp"
#include "ridematch/scenario.hpp"

using namespace ridematch;
using ridematch::testing::single_zone;

namespace {

const char* kTwoZone = R"({
  "name": "two",
  "zones": [{"id": 0, "cx": 0, "cy": 0, "radius": 1},
            {"id": 1, "cx": 3, "cy": 0, "radius": 1}],
  "lambda": [0.1, [0.2]],
  "od": [[0.5, 0.5], [0.5, 0.5]],
  "fleet_size": 4,
  "spawn_weights": [1, 1],
  "sim": {"mode": "pooling", "horizon": 120, "tau": 0.25}
})";

std::string with_od(const std::string& row) {
  std::string s = kTwoZone;
  const std::string from = R"("od": [[0.5, 0.5], )";
  s.replace(s.find(from), from.size(), R"("od": [)" + row + ", ");
  return s;
}

}  // namespace

TEST(ScenarioParse, TwoZoneAccepted) {
  const Scenario s = parse_scenario(kTwoZone);
  EXPECT_EQ(s.name, "two");
  ASSERT_EQ(s.zones.size(), 2u);
  EXPECT_EQ(s.lambda[0].size(), 1u);  // bare number is one bucket
  EXPECT_EQ(s.sim.mode, ServiceMode::pooling);
  EXPECT_EQ(s.sim.horizon, 120);
  EXPECT_DOUBLE_EQ(s.sim.tau, 0.25);
  EXPECT_DOUBLE_EQ(s.sim.phi, 1.0);
}

TEST(ScenarioParse, MinimalZeroDemand) {
  const Scenario s = parse_scenario(R"({"zones": [{"id": 7, "cx": 0, "cy": 0, "radius": 0}],
    "lambda": [0], "od": [[0]], "fleet_size": 0, "spawn_weights": [0]})");
  EXPECT_TRUE(sample_arrivals(s, 1).empty());
}

TEST(ScenarioParse, RowSumErrorNamesZone) {
  try {
    parse_scenario(with_od("[0.6, 0.6]"));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("zone 0"), std::string::npos) << e.what();
  }
}

TEST(ScenarioParse, SyntaxErrorCarriesLine) {
  try {
    parse_scenario("{\n\"zones\": [\n,]}", "f.json");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(std::string(e.what()).rfind("f.json:3", 0), 0u) << e.what();
  }
}

TEST(ScenarioParse, MissingFieldNamesPath) {
  try {
    parse_scenario(R"({"zones": [{"id": 0, "cx": 0, "radius": 1}]})");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "zones[0].cy");
  }
}

TEST(ScenarioParse, WrongTypeAndBadMode) {
  std::string bad = kTwoZone;
  bad.replace(bad.find("\"fleet_size\": 4"), 15, "\"fleet_size\": \"4\"");
  EXPECT_THROW(parse_scenario(bad), SchemaError);
  std::string mode = kTwoZone;
  mode.replace(mode.find("pooling"), 7, "carpool");
  EXPECT_THROW(parse_scenario(mode), SchemaError);
}

TEST(ScenarioParse, RoundTrip) {
  const Scenario a = parse_scenario(kTwoZone);
  const Scenario b = parse_scenario(scenario_to_json(a));
  EXPECT_EQ(scenario_to_json(a), scenario_to_json(b));
}

TEST(ScenarioParse, LoadMissingFileNamesPath) {
  try {
    load_scenario("/nonexistent/dir/x.json");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/x.json"), std::string::npos);
  }
}

TEST(ScenarioValidate, Invariants) {
  Scenario s = single_zone(0.1, 1);
  EXPECT_NO_THROW(validate(s));
  Scenario neg = s;
  neg.lambda = {{-0.1}};
  EXPECT_THROW(validate(neg), ValidationError);
  Scenario zero_w = s;
  zero_w.spawn_weights = {0.0};
  EXPECT_THROW(validate(zero_w), ValidationError);
  Scenario degenerate = s;
  degenerate.zones[0].radius = 0.0;
  EXPECT_THROW(validate(degenerate), ValidationError);
  Scenario ragged = ridematch::testing::two_zones(0.1, 2, 100, ServiceMode::hailing);
  ragged.lambda[1] = {0.1};
  EXPECT_THROW(validate(ragged), ValidationError);
  Scenario scale = s;
  scale.obs_scale.pool = 0.0;
  EXPECT_THROW(validate(scale), ValidationError);
}

TEST(ScenarioRate, BucketsSpanHorizon) {
  Scenario s = single_zone(0.0, 0, 600);
  s.lambda = {{1.0, 2.0, 3.0}};
  EXPECT_DOUBLE_EQ(s.rate(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.rate(0, 199), 1.0);
  EXPECT_DOUBLE_EQ(s.rate(0, 200), 2.0);
  EXPECT_DOUBLE_EQ(s.rate(0, 599), 3.0);
}

TEST(SampleArrivals, PoissonMeanOracle) {
  // 1000 episodes of a 600-tick, 0.1/tick process: count ~ Poisson(60).
  const Scenario s = single_zone(0.1, 0, 600);
  const int n = 1000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += static_cast<double>(sample_arrivals(s, 1000 + k).size());
  const double se = std::sqrt(60.0 / n);
  EXPECT_NEAR(sum / n, 60.0, 3.0 * se);
}

TEST(SampleArrivals, WellFormedAndDeterministic) {
  const Scenario s = ridematch::testing::two_zones(0.3, 5, 200, ServiceMode::hailing);
  const auto a = sample_arrivals(s, 42);
  const auto b = sample_arrivals(s, 42);
  ASSERT_EQ(a.size(), b.size());
  ASSERT_FALSE(a.empty());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].id, static_cast<int>(k));
    EXPECT_EQ(a[k].origin, b[k].origin);
    EXPECT_EQ(a[k].destination, b[k].destination);
    EXPECT_TRUE(a[k].valid());
    EXPECT_EQ(a[k].cancel_deadline - a[k].request_time, s.sim.cancel_ticks());
    if (k > 0) {
      EXPECT_LE(a[k - 1].request_time, a[k].request_time);
    }
  }
}

TEST(SampleArrivals, DistinctSeedsDiffer) {
  const Scenario s = single_zone(0.2, 0, 300);
  int same = 0;
  for (int k = 0; k < 100; ++k) {
    const auto a = sample_arrivals(s, 2 * k), b = sample_arrivals(s, 2 * k + 1);
    if (a.size() == b.size() && !a.empty() && a[0].origin == b[0].origin) ++same;
  }
  EXPECT_EQ(same, 0);
}

TEST(SampleDrivers, ZoneWeights) {
  Scenario s = ridematch::testing::two_zones(0.0, 50, 10, ServiceMode::hailing);
  s.spawn_weights = {1.0, 0.0};
  for (const auto& d : sample_drivers(s, 3)) {
    EXPECT_LE(distance(d.position, s.zones[0].centroid), s.zones[0].radius + 1e-12);
    EXPECT_TRUE(d.idle());
  }
  s.fleet_size = 0;
  EXPECT_TRUE(sample_drivers(s, 3).empty());
}

TEST(SampleDrivers, EvenSplitOracle) {
  Scenario s = ridematch::testing::two_zones(0.0, 1000, 10, ServiceMode::hailing);
  const int seeds = 20;
  double share = 0.0;
  for (int k = 0; k < seeds; ++k) {
    int zone0 = 0;
    for (const auto& d : sample_drivers(s, k)) zone0 += d.position.x < 2.0;
    share += zone0 / 1000.0;
  }
  const double se = std::sqrt(0.25 / (1000.0 * seeds));
  EXPECT_NEAR(share / seeds, 0.5, 3.0 * se);
}

TEST(Episode, JsonRoundTrip) {
  const Scenario s = ridematch::testing::two_zones(0.2, 3, 100, ServiceMode::pooling);
  const EpisodeData e = generate_episode(s, 9);
  const std::string text = episode_to_json(e);
  const EpisodeData back = parse_episode(text);
  EXPECT_EQ(episode_to_json(back), text);
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.initial_drivers.size(), 3u);
}

TEST(Episode, EmptyScenario) {
  const EpisodeData e = generate_episode(single_zone(0.0, 0, 10), 1);
  EXPECT_TRUE(e.arrivals.empty());
  EXPECT_TRUE(e.initial_drivers.empty());
}
