#include <gtest/gtest.h>

#include <random>

#include "../support/oracles.hpp"
#include "ridematch/matching.hpp"

using namespace ridematch;
using ridematch::testing::exhaustive_sequence;
using ridematch::testing::random_order;
using ridematch::testing::random_pool;

namespace {

Order make(int id, Point o, Point d) { return Order{id, o, d, 0, 300, OrderStatus::waiting}; }

DriverState driver(int id, Point p) { return DriverState{id, p, DriverStatus::idle, 0.0}; }

// Pool whose pair DDRs are prescribed through a lookup; used for weight-level examples.
double total(const PairingResult& r) { return r.total_ddr; }

}  // namespace

TEST(DdrPair, CoincidentTrips) {
  const auto c = ddr_pair(make(1, {0, 0}, {0, 10}), make(2, {0, 0}, {0, 10}), 0.6);
  ASSERT_TRUE(c);
  EXPECT_DOUBLE_EQ(c->ddr, 1.0);
  EXPECT_DOUBLE_EQ(c->detour_i, 0.0);
  EXPECT_DOUBLE_EQ(c->detour_j, 0.0);
}

TEST(DdrPair, NestedCollinear) {
  const auto c = ddr_pair(make(1, {0, 0}, {10, 0}), make(2, {2, 0}, {8, 0}), 0.6);
  ASSERT_TRUE(c);
  EXPECT_DOUBLE_EQ(c->ddr, 1.0);
  EXPECT_EQ(c->sequence[0].order_id, 1);
  EXPECT_EQ(c->sequence[1].order_id, 2);
  EXPECT_EQ(c->sequence[2].order_id, 2);
  EXPECT_EQ(c->sequence[2].kind, StopKind::dropoff);
  EXPECT_EQ(c->sequence[3].order_id, 1);
  EXPECT_DOUBLE_EQ(c->detour_i, 0.0);
  EXPECT_DOUBLE_EQ(c->detour_j, 0.0);
}

TEST(DdrPair, ParallelTripsAgreeWithOracle) {
  const Order i = make(1, {0, 0}, {10, 0});
  const Order j = make(2, {0, 6}, {10, 6});
  const auto c = best_pair_sequence(i, j);
  const auto o = exhaustive_sequence(i, j);
  EXPECT_NEAR(c.ddr, o.ddr, 1e-12);
  EXPECT_NEAR(c.detour_i + c.detour_j, o.detour_i + o.detour_j, 1e-9);
  EXPECT_FALSE(ddr_pair(i, j, 0.7).has_value());  // 10/16 < 0.7
}

TEST(DdrPair, SameIdThrows) {
  const Order i = make(1, {0, 0}, {1, 0});
  EXPECT_THROW(ddr_pair(i, i, 0.5), std::invalid_argument);
}

TEST(DdrPair, MatchesOracleSymmetricAndBounded) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5000; ++trial) {
    const Order i = random_order(rng, 1, 10.0);
    const Order j = random_order(rng, 2, 10.0);
    const auto c = best_pair_sequence(i, j);
    const auto o = exhaustive_sequence(i, j);
    ASSERT_NEAR(c.ddr, o.ddr, 1e-9);
    ASSERT_GT(c.ddr, 0.0);
    ASSERT_LE(c.ddr, 1.0);
    ASSERT_GE(c.detour_i, 0.0);
    ASSERT_GE(c.detour_j, 0.0);
    ASSERT_EQ(c.sequence[0].kind, StopKind::pickup);
    ASSERT_EQ(c.sequence[1].kind, StopKind::pickup);
    ASSERT_EQ(best_pair_sequence(j, i).ddr, c.ddr);
  }
}

TEST(PairPassengers, SmallPools) {
  EXPECT_TRUE(pair_passengers({}, 0.6).pairs.empty());
  const std::vector<Order> one{make(7, {0, 0}, {1, 0})};
  const auto r = pair_passengers(one, 0.6);
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_EQ(r.singletons, std::vector<int>{7});
}

TEST(PairPassengers, TwoFeasibleOrdersPair) {
  const std::vector<Order> two{make(1, {0, 0}, {10, 0}), make(2, {2, 0}, {8, 0})};
  const auto r = pair_passengers(two, 0.6);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_TRUE(r.singletons.empty());
  EXPECT_EQ(brute_force_pairing(two, 0.6).pairs.size(), 1u);
}

TEST(PairPassengers, EqualsBruteForce) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = std::uniform_int_distribution<int>(0, 10)(rng);
    const auto pool = random_pool(rng, n);
    const auto fast = pair_passengers(pool, 0.6);
    const auto slow = brute_force_pairing(pool, 0.6);
    ASSERT_NEAR(total(fast), total(slow), 1e-9) << "trial " << trial;
    ASSERT_EQ(fast.singletons.size() + 2 * fast.pairs.size(), pool.size());
    for (const auto& p : fast.pairs) ASSERT_GE(p.ddr, 0.6);
  }
}

TEST(BruteForcePairing, TooLarge) {
  std::mt19937_64 rng(1);
  const auto pool = random_pool(rng, 13);
  EXPECT_THROW(brute_force_pairing(pool, 0.6), std::length_error);
}

TEST(AssignDrivers, SingleMatch) {
  const std::vector<Order> o{make(1, {2, 0}, {5, 0})};
  const auto e = make_single_entities(o);
  const std::vector<DriverState> d{driver(9, {0, 0})};
  const auto r = assign_drivers(e, d, 40.0);
  ASSERT_EQ(r.matches.size(), 1u);
  EXPECT_EQ(r.matches[0].driver_id, 9);
  EXPECT_DOUBLE_EQ(r.matches[0].pickup_time, 180.0);
  EXPECT_DOUBLE_EQ(f_pick(e, d, 40.0), 180.0);
}

TEST(AssignDrivers, CrossFree) {
  const std::vector<Order> o{make(1, {1, 0}, {1, 5}), make(2, {9, 0}, {9, 5})};
  const auto e = make_single_entities(o);
  const std::vector<DriverState> d{driver(0, {0, 0}), driver(1, {10, 0})};
  const auto r = assign_drivers(e, d, 40.0);
  EXPECT_NEAR(r.total_pickup_time, 180.0, 1e-9);
  EXPECT_EQ(r.matches[0].driver_id, 0);
  EXPECT_EQ(r.matches[1].driver_id, 1);
}

TEST(AssignDrivers, EmptySides) {
  const std::vector<Order> o{make(1, {1, 0}, {1, 5})};
  const auto e = make_single_entities(o);
  EXPECT_DOUBLE_EQ(f_pick(e, {}, 40.0), 0.0);
  const auto r = brute_force_assignment(e, {}, 40.0);
  EXPECT_TRUE(r.matches.empty());
  EXPECT_EQ(r.unmatched_entities, std::vector<int>{0});
}

TEST(AssignDrivers, EqualsBruteForceWithMaxCardinality) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 800; ++trial) {
    const int ne = std::uniform_int_distribution<int>(0, 6)(rng);
    const int nd = std::uniform_int_distribution<int>(0, 6)(rng);
    std::vector<Order> orders;
    for (int k = 0; k < ne; ++k) orders.push_back(random_order(rng, k, 10.0));
    std::vector<DriverState> drivers;
    for (int k = 0; k < nd; ++k) drivers.push_back(driver(50 + k, {u(rng), u(rng)}));
    const auto e = make_single_entities(orders);
    const auto fast = assign_drivers(e, drivers, 40.0);
    const auto slow = brute_force_assignment(e, drivers, 40.0);
    ASSERT_EQ(fast.matches.size(), static_cast<std::size_t>(std::min(ne, nd)));
    ASSERT_EQ(fast.unmatched_entities.size() + fast.matches.size(), e.size());
    ASSERT_EQ(fast.unmatched_drivers.size() + fast.matches.size(), drivers.size());
    ASSERT_NEAR(fast.total_pickup_time, slow.total_pickup_time,
                1e-9 * std::max(1.0, slow.total_pickup_time));
  }
}

TEST(FDetour, Arithmetic) {
  PairingResult r;
  EXPECT_DOUBLE_EQ(f_detour(r, 40.0), 0.0);
  PairCandidate c;
  c.detour_i = 2.0;
  r.pairs.push_back(c);
  EXPECT_DOUBLE_EQ(f_detour(r, 40.0), 180.0);
}

TEST(FDetour, RecomputedFromStoredSequences) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pool = random_pool(rng, 8);
    const auto r = pair_passengers(pool, 0.6);
    double expect = 0.0;
    for (const auto& p : r.pairs) {
      std::vector<Point> pts;
      for (const auto& s : p.sequence) pts.push_back(s.at);
      for (int id : {p.i, p.j}) {
        int from = 0, to = 0;
        for (int k = 0; k < 4; ++k) {
          if (p.sequence[k].order_id == id) (p.sequence[k].kind == StopKind::pickup ? from : to) = k;
        }
        const Order& o = *std::find_if(pool.begin(), pool.end(), [&](const Order& x) { return x.id == id; });
        const double ride = route_distance(std::span<const Point>(pts.data() + from, to - from + 1));
        expect += travel_time(std::max(0.0, ride - distance(o.origin, o.destination)), 40.0);
      }
    }
    ASSERT_NEAR(f_detour(r, 40.0), expect, 1e-9);
  }
}

TEST(Matching, ScalingCoordinatesScalesCosts) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto pool = random_pool(rng, 8);
    std::vector<DriverState> drivers;
    std::uniform_real_distribution<double> u(0, 10);
    for (int k = 0; k < 5; ++k) drivers.push_back(driver(k, {u(rng), u(rng)}));
    const double c = 2.5;
    auto scaled_pool = pool;
    for (auto& o : scaled_pool) {
      o.origin = {o.origin.x * c, o.origin.y * c};
      o.destination = {o.destination.x * c, o.destination.y * c};
    }
    auto scaled_drivers = drivers;
    for (auto& d : scaled_drivers) d.position = {d.position.x * c, d.position.y * c};

    const auto p1 = pair_passengers(pool, 0.6);
    const auto p2 = pair_passengers(scaled_pool, 0.6);
    ASSERT_NEAR(p1.total_ddr, p2.total_ddr, 1e-9);
    ASSERT_NEAR(f_detour(p2, 40.0), c * f_detour(p1, 40.0), 1e-6);
    const auto e1 = make_pool_entities(pool, p1, 40.0, true);
    const auto e2 = make_pool_entities(scaled_pool, p2, 40.0, true);
    ASSERT_NEAR(f_pick(e2, scaled_drivers, 40.0), c * f_pick(e1, drivers, 40.0), 1e-6);
  }
}

TEST(PoolEntities, PairsThenSingletons) {
  const std::vector<Order> pool{make(1, {0, 0}, {10, 0}), make(2, {2, 0}, {8, 0}),
                                make(3, {50, 50}, {40, 40})};
  const auto r = pair_passengers(pool, 0.6);
  const auto with_solo = make_pool_entities(pool, r, 40.0, true);
  ASSERT_EQ(with_solo.size(), 2u);
  EXPECT_EQ(with_solo[0].kind, EntityKind::pair);
  EXPECT_EQ(with_solo[0].chain.size(), 4u);
  EXPECT_EQ(with_solo[1].members, std::vector<int>{3});
  EXPECT_EQ(make_pool_entities(pool, r, 40.0, false).size(), 1u);
}
