#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "ridematch/domain.hpp"

namespace ridematch {

enum class StopKind : std::uint8_t { pickup, dropoff };

struct Stop {
  int order_id = 0;
  StopKind kind = StopKind::pickup;
  Point at;
};

/// A feasible shared ride for two orders. `sequence` is the best of the four
/// pickup-pickup-dropoff-dropoff orders; detours are in kilometers.
struct PairCandidate {
  int i = 0;
  int j = 0;
  double ddr = 0.0;
  std::array<Stop, 4> sequence{};
  double detour_i = 0.0;
  double detour_j = 0.0;
};

struct PairingResult {
  std::vector<PairCandidate> pairs;
  std::vector<int> singletons;
  double total_ddr = 0.0;
};

enum class EntityKind : std::uint8_t { single, pair };

/// A unit handed to one driver. `chain` lists every stop in service order.
struct RideEntity {
  int id = 0;
  EntityKind kind = EntityKind::single;
  std::vector<int> members;
  std::vector<Stop> chain;
  Point first_pickup;
  std::vector<double> detour_km;       // per member, 0 for singles
  std::vector<double> detour_seconds;  // per member, 0 for singles
};

struct DriverMatch {
  int driver_id = 0;
  int entity_id = 0;
  double pickup_time = 0.0;  // seconds, driver to first pickup
};

struct AssignmentResult {
  std::vector<DriverMatch> matches;  // ascending entity_id
  std::vector<int> unmatched_entities;
  std::vector<int> unmatched_drivers;
  double total_pickup_time = 0.0;
};

/// Best sequence for orders i and j regardless of any threshold. Candidates
/// are scanned in the order (i first, D_i first), (i first, D_j first),
/// (j first, D_j first), (j first, D_i first); a later one wins only when
/// strictly better. Throws std::invalid_argument when i and j share an id.
PairCandidate best_pair_sequence(const Order& i, const Order& j);

/// best_pair_sequence, or nullopt when its DDR is below `ddr_threshold`.
std::optional<PairCandidate> ddr_pair(const Order& i, const Order& j, double ddr_threshold);

/// Maximum-total-DDR pairing of `orders` over feasible pairs.
PairingResult pair_passengers(std::span<const Order> orders, double ddr_threshold);

/// Exhaustive pairing oracle; throws std::length_error above 12 orders.
PairingResult brute_force_pairing(std::span<const Order> orders, double ddr_threshold);

/// Hailing: one single per order, in pool order.
std::vector<RideEntity> make_single_entities(std::span<const Order> orders);

/// Pooling: one entity per pair (in pairing order), then singletons when
/// `allow_solo` is set. `orders` must contain every order named by `pairing`.
std::vector<RideEntity> make_pool_entities(std::span<const Order> orders,
                                           const PairingResult& pairing, double speed,
                                           bool allow_solo);

/// Maximum-cardinality assignment of idle `drivers` to `entities` that
/// minimizes total pickup time among maximum-cardinality assignments.
AssignmentResult assign_drivers(std::span<const RideEntity> entities,
                                std::span<const DriverState> drivers, double speed);

/// Injection-enumeration oracle; throws std::length_error above 7 per side.
AssignmentResult brute_force_assignment(std::span<const RideEntity> entities,
                                        std::span<const DriverState> drivers, double speed);

/// Total pickup time of the optimal assignment; 0 when either side is empty.
double f_pick(std::span<const RideEntity> entities, std::span<const DriverState> drivers,
              double speed);

/// Sum over paired members of detour distance converted to seconds.
double f_detour(const PairingResult& pairing, double speed);

}  // namespace ridematch
