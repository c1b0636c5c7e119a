#include "ridematch/matching.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "ridematch/engines/assignment.hpp"
#include "ridematch/engines/blossom.hpp"
#include "ridematch/simd/kernels.hpp"

namespace ridematch {
namespace {

// DDR in (0,1] mapped to an even integer so the blossom duals stay integral.
// For DDR >= 0.5 the scaling is exact.
std::int64_t blossom_weight(double ddr) { return 2 * std::llround(std::ldexp(ddr, 53)); }

struct TripSoA {
  std::vector<double> ox, oy, dx, dy, direct;

  explicit TripSoA(std::span<const Order> orders) {
    const std::size_t n = orders.size();
    ox.resize(n);
    oy.resize(n);
    dx.resize(n);
    dy.resize(n);
    direct.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      ox[k] = orders[k].origin.x;
      oy[k] = orders[k].origin.y;
      dx[k] = orders[k].destination.x;
      dy[k] = orders[k].destination.y;
      direct[k] = distance(orders[k].origin, orders[k].destination);
    }
  }

  simd::TripColumns tail(std::size_t from) const {
    return {ox.data() + from, oy.data() + from, dx.data() + from, dy.data() + from,
            direct.data() + from, ox.size() - from};
  }
};

void finish_singletons(std::span<const Order> orders, PairingResult& r) {
  std::vector<char> used(orders.size(), 0);
  std::unordered_map<int, std::size_t> index;
  for (std::size_t k = 0; k < orders.size(); ++k) index.emplace(orders[k].id, k);
  for (const auto& p : r.pairs) {
    used[index.at(p.i)] = 1;
    used[index.at(p.j)] = 1;
  }
  for (std::size_t k = 0; k < orders.size(); ++k) {
    if (!used[k]) r.singletons.push_back(orders[k].id);
  }
  r.total_ddr = 0.0;
  for (const auto& p : r.pairs) r.total_ddr += p.ddr;
}

double clamp_detour(double ride, double direct) { return std::max(0.0, ride - direct); }

}  // namespace

PairCandidate best_pair_sequence(const Order& i, const Order& j) {
  if (i.id == j.id) throw std::invalid_argument("ddr_pair: an order cannot pair with itself");

  // Same operands and operation order as the pair_scores kernel.
  const double oo = distance(i.origin, j.origin);
  const double dd = distance(i.destination, j.destination);
  const double oj_di = distance(j.origin, i.destination);
  const double oi_dj = distance(i.origin, j.destination);
  const double di = distance(i.origin, i.destination);
  const double dj = distance(j.origin, j.destination);

  const double ride1_i = oo + oj_di, ride1_j = oj_di + dd;
  const double ride2_i = (oo + dj) + dd;
  const double ride3_j = oo + oi_dj, ride3_i = oi_dj + dd;
  const double ride4_j = (oo + di) + dd;

  const double s[4] = {
      std::min(std::min(1.0, di / ride1_i), std::min(1.0, dj / ride1_j)),
      std::min(1.0, di / ride2_i),
      std::min(std::min(1.0, dj / ride3_j), std::min(1.0, di / ride3_i)),
      std::min(1.0, dj / ride4_j),
  };
  int best = 0;
  for (int c = 1; c < 4; ++c) {
    if (s[c] > s[best]) best = c;
  }

  const Stop pi{i.id, StopKind::pickup, i.origin};
  const Stop pj{j.id, StopKind::pickup, j.origin};
  const Stop qi{i.id, StopKind::dropoff, i.destination};
  const Stop qj{j.id, StopKind::dropoff, j.destination};

  PairCandidate c;
  c.i = i.id;
  c.j = j.id;
  c.ddr = s[best];
  switch (best) {
    case 0:
      c.sequence = {pi, pj, qi, qj};
      c.detour_i = clamp_detour(ride1_i, di);
      c.detour_j = clamp_detour(ride1_j, dj);
      break;
    case 1:
      c.sequence = {pi, pj, qj, qi};
      c.detour_i = clamp_detour(ride2_i, di);
      break;
    case 2:
      c.sequence = {pj, pi, qj, qi};
      c.detour_i = clamp_detour(ride3_i, di);
      c.detour_j = clamp_detour(ride3_j, dj);
      break;
    default:
      c.sequence = {pj, pi, qi, qj};
      c.detour_j = clamp_detour(ride4_j, dj);
      break;
  }
  return c;
}

std::optional<PairCandidate> ddr_pair(const Order& i, const Order& j, double ddr_threshold) {
  PairCandidate c = best_pair_sequence(i, j);
  if (c.ddr < ddr_threshold) return std::nullopt;
  return c;
}

PairingResult pair_passengers(std::span<const Order> orders, double ddr_threshold) {
  PairingResult result;
  const std::size_t n = orders.size();
  if (n >= 2) {
    const TripSoA soa(orders);
    const auto& k = simd::kernels();
    std::vector<double> row(n);
    std::vector<engines::WeightedEdge> edges;
    for (std::size_t a = 0; a + 1 < n; ++a) {
      const simd::TripQuery q{soa.ox[a], soa.oy[a], soa.dx[a], soa.dy[a], soa.direct[a]};
      const auto cols = soa.tail(a + 1);
      k.pair_scores(q, cols, row.data());
      for (std::size_t b = 0; b < cols.size; ++b) {
        if (row[b] >= ddr_threshold) {
          edges.push_back({static_cast<int>(a), static_cast<int>(a + 1 + b), blossom_weight(row[b])});
        }
      }
    }
    const auto mate = engines::max_weight_matching(static_cast<int>(n), edges);
    for (std::size_t a = 0; a < n; ++a) {
      if (mate[a] > static_cast<int>(a)) {
        result.pairs.push_back(best_pair_sequence(orders[a], orders[mate[a]]));
      }
    }
  }
  finish_singletons(orders, result);
  return result;
}

PairingResult brute_force_pairing(std::span<const Order> orders, double ddr_threshold) {
  const std::size_t n = orders.size();
  if (n > 12) throw std::length_error("brute_force_pairing: at most 12 orders");

  std::vector<std::vector<std::optional<PairCandidate>>> cand(n, std::vector<std::optional<PairCandidate>>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) cand[a][b] = ddr_pair(orders[a], orders[b], ddr_threshold);
  }

  std::vector<char> used(n, 0);
  std::vector<std::pair<std::size_t, std::size_t>> current, best;
  double best_total = -1.0;

  std::function<void(std::size_t, double)> rec = [&](std::size_t a, double total) {
    while (a < n && used[a]) ++a;
    if (a == n) {
      if (total > best_total) {
        best_total = total;
        best = current;
      }
      return;
    }
    used[a] = 1;
    rec(a + 1, total);  // a stays single
    for (std::size_t b = a + 1; b < n; ++b) {
      if (used[b] || !cand[a][b]) continue;
      used[b] = 1;
      current.emplace_back(a, b);
      rec(a + 1, total + cand[a][b]->ddr);
      current.pop_back();
      used[b] = 0;
    }
    used[a] = 0;
  };
  rec(0, 0.0);

  PairingResult result;
  std::sort(best.begin(), best.end());
  for (const auto& [a, b] : best) result.pairs.push_back(*cand[a][b]);
  finish_singletons(orders, result);
  return result;
}

std::vector<RideEntity> make_single_entities(std::span<const Order> orders) {
  std::vector<RideEntity> out;
  out.reserve(orders.size());
  for (const auto& o : orders) {
    RideEntity e;
    e.id = static_cast<int>(out.size());
    e.kind = EntityKind::single;
    e.members = {o.id};
    e.chain = {{o.id, StopKind::pickup, o.origin}, {o.id, StopKind::dropoff, o.destination}};
    e.first_pickup = o.origin;
    e.detour_km = {0.0};
    e.detour_seconds = {0.0};
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<RideEntity> make_pool_entities(std::span<const Order> orders,
                                           const PairingResult& pairing, double speed,
                                           bool allow_solo) {
  std::vector<RideEntity> out;
  out.reserve(pairing.pairs.size() + (allow_solo ? pairing.singletons.size() : 0));
  for (const auto& p : pairing.pairs) {
    RideEntity e;
    e.id = static_cast<int>(out.size());
    e.kind = EntityKind::pair;
    e.members = {p.i, p.j};
    e.chain.assign(p.sequence.begin(), p.sequence.end());
    e.first_pickup = p.sequence[0].at;
    e.detour_km = {p.detour_i, p.detour_j};
    e.detour_seconds = {travel_time(p.detour_i, speed), travel_time(p.detour_j, speed)};
    out.push_back(std::move(e));
  }
  if (allow_solo) {
    std::unordered_map<int, const Order*> by_id;
    for (const auto& o : orders) by_id.emplace(o.id, &o);
    for (int id : pairing.singletons) {
      const Order& o = *by_id.at(id);
      auto single = make_single_entities(std::span<const Order>(&o, 1));
      single[0].id = static_cast<int>(out.size());
      out.push_back(std::move(single[0]));
    }
  }
  return out;
}

namespace {

std::vector<double> pickup_costs(std::span<const RideEntity> entities,
                                 std::span<const DriverState> drivers, double speed) {
  const std::size_t m = entities.size();
  std::vector<double> xs(m), ys(m);
  for (std::size_t e = 0; e < m; ++e) {
    xs[e] = entities[e].first_pickup.x;
    ys[e] = entities[e].first_pickup.y;
  }
  std::vector<double> cost(drivers.size() * m);
  const auto& k = simd::kernels();
  for (std::size_t d = 0; d < drivers.size(); ++d) {
    double* row = cost.data() + d * m;
    k.distances(drivers[d].position.x, drivers[d].position.y, xs.data(), ys.data(), row, m);
    for (std::size_t e = 0; e < m; ++e) row[e] = travel_time(row[e], speed);
  }
  return cost;
}

AssignmentResult build_assignment(std::span<const RideEntity> entities,
                                  std::span<const DriverState> drivers,
                                  const std::vector<double>& cost,
                                  const std::vector<int>& driver_of_entity) {
  const std::size_t m = entities.size();
  AssignmentResult r;
  std::vector<char> driver_used(drivers.size(), 0);
  for (std::size_t e = 0; e < m; ++e) {
    const int d = driver_of_entity[e];
    if (d < 0) {
      r.unmatched_entities.push_back(entities[e].id);
      continue;
    }
    driver_used[d] = 1;
    const double t = cost[static_cast<std::size_t>(d) * m + e];
    r.matches.push_back({drivers[d].id, entities[e].id, t});
    r.total_pickup_time += t;
  }
  for (std::size_t d = 0; d < drivers.size(); ++d) {
    if (!driver_used[d]) r.unmatched_drivers.push_back(drivers[d].id);
  }
  return r;
}

}  // namespace

AssignmentResult assign_drivers(std::span<const RideEntity> entities,
                                std::span<const DriverState> drivers, double speed) {
  const std::size_t m = entities.size();
  const auto cost = pickup_costs(entities, drivers, speed);
  const auto col_of_row = engines::min_cost_assignment(cost, drivers.size(), m);
  std::vector<int> driver_of_entity(m, -1);
  for (std::size_t d = 0; d < col_of_row.size(); ++d) {
    if (col_of_row[d] >= 0) driver_of_entity[col_of_row[d]] = static_cast<int>(d);
  }
  return build_assignment(entities, drivers, cost, driver_of_entity);
}

AssignmentResult brute_force_assignment(std::span<const RideEntity> entities,
                                        std::span<const DriverState> drivers, double speed) {
  const std::size_t m = entities.size();
  const std::size_t nd = drivers.size();
  if (m > 7 || nd > 7) throw std::length_error("brute_force_assignment: at most 7 per side");
  const auto cost = pickup_costs(entities, drivers, speed);

  // Inject the smaller side into the larger one.
  const bool by_entity = m <= nd;
  const std::size_t small = by_entity ? m : nd;
  const std::size_t large = by_entity ? nd : m;
  auto c = [&](std::size_t s, std::size_t l) {
    return by_entity ? cost[l * m + s] : cost[s * m + l];
  };

  std::vector<int> pick(small, -1), best_pick;
  std::vector<char> taken(large, 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, double)> rec = [&](std::size_t s, double total) {
    if (s == small) {
      if (total < best) {
        best = total;
        best_pick = pick;
      }
      return;
    }
    for (std::size_t l = 0; l < large; ++l) {
      if (taken[l]) continue;
      taken[l] = 1;
      pick[s] = static_cast<int>(l);
      rec(s + 1, total + c(s, l));
      taken[l] = 0;
    }
  };
  rec(0, 0.0);

  std::vector<int> driver_of_entity(m, -1);
  for (std::size_t s = 0; s < small; ++s) {
    if (by_entity) {
      driver_of_entity[s] = best_pick[s];
    } else {
      driver_of_entity[best_pick[s]] = static_cast<int>(s);
    }
  }
  return build_assignment(entities, drivers, cost, driver_of_entity);
}

double f_pick(std::span<const RideEntity> entities, std::span<const DriverState> drivers,
              double speed) {
  if (entities.empty() || drivers.empty()) return 0.0;
  return assign_drivers(entities, drivers, speed).total_pickup_time;
}

double f_detour(const PairingResult& pairing, double speed) {
  double total = 0.0;
  for (const auto& p : pairing.pairs) {
    total += travel_time(p.detour_i, speed) + travel_time(p.detour_j, speed);
  }
  return total;
}

}  // namespace ridematch
