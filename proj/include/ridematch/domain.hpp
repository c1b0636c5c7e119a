#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ridematch {

/// A location in a local planar frame, in kilometers.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Straight-line distance in kilometers.
inline double distance(Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return std::sqrt(dx * dx + dy * dy);
}

/// Length of the polyline visiting `points` in order. Needs at least two points.
double route_distance(std::span<const Point> points);

/// Seconds needed to cover `km` at `speed_kmh`.
double travel_time(double km, double speed_kmh);

struct Zone {
  int id = 0;
  Point centroid;
  double radius = 0.0;  // km
};

enum class OrderStatus : std::uint8_t { waiting, paired, assigned, cancelled, completed };

std::string_view to_string(OrderStatus s);

/// A passenger request. Times are tick indices.
struct Order {
  int id = 0;
  Point origin;
  Point destination;
  int request_time = 0;
  int cancel_deadline = 0;
  OrderStatus status = OrderStatus::waiting;

  /// Throws std::logic_error on a transition the lifecycle does not allow.
  void transition(OrderStatus next);
  bool valid() const;
};

enum class DriverStatus : std::uint8_t { idle, enroute, serving };

struct DriverState {
  int id = 0;
  Point position;
  DriverStatus status = DriverStatus::idle;
  double busy_until = 0.0;  // seconds

  bool idle() const { return status == DriverStatus::idle; }
};

enum class ServiceMode : std::uint8_t { hailing, pooling };

std::string_view to_string(ServiceMode m);
ServiceMode parse_service_mode(std::string_view s);

struct SimParams {
  double speed = 40.0;         // km/h
  double cancel_after = 300.0; // seconds
  double tick = 1.0;           // seconds per step
  int horizon = 600;           // steps per episode
  ServiceMode mode = ServiceMode::hailing;
  double phi = 1.0;
  double tau = 0.5;
  double ddr_threshold = 0.6;
  bool allow_solo_in_pooling = true;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Number of whole ticks an order stays in the pool before cancelling.
  int cancel_ticks() const;
};

}  // namespace ridematch
