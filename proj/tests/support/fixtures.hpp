#pragma once

// Hand-built scenarios and episodes for unit tests.

#include <string>
#include <vector>

#include "ridematch/scenario.hpp"

namespace ridematch::testing {

/// One zone of radius 1 km at the origin, constant rate `lambda`.
inline Scenario single_zone(double lambda, int fleet, int horizon = 600,
                            ServiceMode mode = ServiceMode::hailing) {
  Scenario s;
  s.name = "single";
  s.zones = {{0, {0.0, 0.0}, 1.0}};
  s.lambda = {{lambda}};
  s.od = {{1.0}};
  s.fleet_size = fleet;
  s.spawn_weights = {1.0};
  s.sim.horizon = horizon;
  s.sim.mode = mode;
  return s;
}

/// Two zones 4 km apart with the given rates, uniform od.
inline Scenario two_zones(double lambda, int fleet, int horizon, ServiceMode mode) {
  Scenario s;
  s.name = "pair";
  s.zones = {{0, {0.0, 0.0}, 1.5}, {1, {4.0, 0.0}, 1.5}};
  s.lambda = {{lambda, 2 * lambda}, {lambda, lambda / 2}};
  s.od = {{0.5, 0.5}, {0.5, 0.5}};
  s.fleet_size = fleet;
  s.spawn_weights = {1.0, 1.0};
  s.sim.horizon = horizon;
  s.sim.mode = mode;
  return s;
}

inline Order order_at(int id, Point o, Point d, int t, int cancel_ticks = 300) {
  return Order{id, o, d, t, t + cancel_ticks, OrderStatus::waiting};
}

inline DriverState driver_at(int id, Point p) { return DriverState{id, p, DriverStatus::idle, 0.0}; }

inline EpisodeData episode_of(std::vector<Order> orders, std::vector<DriverState> drivers) {
  EpisodeData e;
  e.arrivals = std::move(orders);
  e.initial_drivers = std::move(drivers);
  return e;
}

}  // namespace ridematch::testing
