#include "ridematch/domain.hpp"

#include <algorithm>
#include <cmath>

namespace ridematch {

double route_distance(std::span<const Point> points) {
  if (points.size() < 2) {
    throw std::invalid_argument("route_distance: need at least two points");
  }
  double total = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) {
    total += distance(points[k - 1], points[k]);
  }
  return total;
}

double travel_time(double km, double speed_kmh) {
  if (!(speed_kmh > 0.0)) {
    throw std::invalid_argument("travel_time: speed must be positive");
  }
  if (km < 0.0) {
    throw std::invalid_argument("travel_time: distance must be non-negative");
  }
  return km * 3600.0 / speed_kmh;
}

std::string_view to_string(OrderStatus s) {
  switch (s) {
    case OrderStatus::waiting: return "waiting";
    case OrderStatus::paired: return "paired";
    case OrderStatus::assigned: return "assigned";
    case OrderStatus::cancelled: return "cancelled";
    case OrderStatus::completed: return "completed";
  }
  return "?";
}

void Order::transition(OrderStatus next) {
  bool ok = false;
  switch (status) {
    case OrderStatus::waiting:
      ok = next == OrderStatus::paired || next == OrderStatus::assigned ||
           next == OrderStatus::cancelled;
      break;
    case OrderStatus::paired:
      ok = next == OrderStatus::assigned;
      break;
    case OrderStatus::assigned:
      ok = next == OrderStatus::completed;
      break;
    case OrderStatus::cancelled:
    case OrderStatus::completed:
      break;
  }
  if (!ok) {
    throw std::logic_error("order " + std::to_string(id) + ": illegal transition " +
                           std::string(to_string(status)) + " -> " +
                           std::string(to_string(next)));
  }
  status = next;
}

bool Order::valid() const {
  return request_time < cancel_deadline && !(origin == destination) &&
         std::isfinite(origin.x) && std::isfinite(origin.y) && std::isfinite(destination.x) &&
         std::isfinite(destination.y);
}

std::string_view to_string(ServiceMode m) {
  return m == ServiceMode::hailing ? "hailing" : "pooling";
}

ServiceMode parse_service_mode(std::string_view s) {
  if (s == "hailing") return ServiceMode::hailing;
  if (s == "pooling") return ServiceMode::pooling;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected hailing|pooling)");
}

void SimParams::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("sim.") + what); };
  if (!(speed > 0.0) || !std::isfinite(speed)) fail("speed must be > 0");
  if (!(tick > 0.0) || !std::isfinite(tick)) fail("tick must be > 0");
  if (horizon < 1) fail("horizon must be >= 1");
  if (!(cancel_after > 0.0)) fail("cancel_after must be > 0");
  if (!(phi >= 0.0)) fail("phi must be >= 0");
  if (!(tau >= 0.0)) fail("tau must be >= 0");
  if (!(ddr_threshold > 0.0 && ddr_threshold <= 1.0)) fail("ddr_threshold must lie in (0,1]");
}

int SimParams::cancel_ticks() const {
  return std::max(1, static_cast<int>(std::lround(cancel_after / tick)));
}

}  // namespace ridematch
