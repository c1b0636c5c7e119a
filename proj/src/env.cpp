#include "ridematch/env.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace ridematch {

DispatchPlan plan_dispatch(std::span<const Order> pool, std::span<const DriverState> idle,
                           const SimParams& sim) {
  DispatchPlan plan;
  if (pool.empty()) return plan;
  if (sim.mode == ServiceMode::pooling) {
    plan.pairing = pair_passengers(pool, sim.ddr_threshold);
    plan.entities = make_pool_entities(pool, plan.pairing, sim.speed, sim.allow_solo_in_pooling);
  } else {
    plan.entities = make_single_entities(pool);
  }
  if (idle.empty() || plan.entities.empty()) {
    for (const auto& e : plan.entities) plan.assignment.unmatched_entities.push_back(e.id);
    return plan;
  }
  plan.assignment = assign_drivers(plan.entities, idle, sim.speed);
  plan.f_pick = plan.assignment.total_pickup_time;
  for (const auto& m : plan.assignment.matches) {
    for (double d : plan.entities[m.entity_id].detour_seconds) plan.f_detour += d;
  }
  return plan;
}

double reward_hailing(const SimParams& sim, int action, int unmatched_after, double f_pick) {
  const double r_m = sim.tick * unmatched_after;
  const double r_w = action == 1 ? f_pick : 0.0;
  return -(sim.phi * r_m + r_w);
}

double reward_pooling(const SimParams& sim, int action, int unmatched_after, double f_pick,
                      double f_detour) {
  const double r_m = sim.tick * unmatched_after;
  const double r_w = action == 1 ? f_pick : 0.0;
  const double r_d = action == 1 ? f_detour : 0.0;
  return -(sim.phi * r_m + sim.tau * r_d + r_w);
}

double pbrs_shape(double reward, double phi_now, double phi_next, bool is_terminal_step,
                  double phi_initial) {
  if (is_terminal_step) return reward - phi_now + phi_initial;
  return reward + phi_next - phi_now;
}

MatchEnv::MatchEnv(const Scenario& scenario, EnvOptions options)
    : sim_(scenario.sim), scale_(scenario.obs_scale), options_(options) {
  sim_.validate();
}

Observation MatchEnv::reset(const EpisodeData& episode) {
  orders_ = episode.arrivals;
  for (std::size_t k = 0; k < orders_.size(); ++k) {
    if (orders_[k].id != static_cast<int>(k)) {
      throw std::invalid_argument("episode arrivals must carry ids 0..n-1 in order");
    }
    orders_[k].status = OrderStatus::waiting;
  }
  drivers_ = episode.initial_drivers;
  for (std::size_t k = 0; k < drivers_.size(); ++k) {
    if (drivers_[k].id != static_cast<int>(k)) {
      throw std::invalid_argument("episode drivers must carry ids 0..n-1 in order");
    }
    drivers_[k].status = DriverStatus::idle;
    drivers_[k].busy_until = 0.0;
  }
  pool_.clear();
  trips_.clear();
  match_ticks_.clear();
  records_.assign(orders_.size(), PassengerRecord{});
  for (std::size_t k = 0; k < orders_.size(); ++k) {
    records_[k].order_id = orders_[k].id;
    records_[k].request_tick = orders_[k].request_time;
  }
  t_ = 0;
  last_match_tick_ = 0;
  matched_before_ = false;
  next_arrival_ = 0;
  episode_loaded_ = true;
  phi_current_ = options_.shaping ? compute_potential() : 0.0;
  phi_initial_ = phi_current_;
  return observe();
}

StepOutcome MatchEnv::step(int action) {
  if (!episode_loaded_ || done()) throw std::logic_error("step called on a finished episode");
  if (action != 0 && action != 1) throw std::invalid_argument("action must be 0 or 1");

  const int tick = t_;
  inject(tick);
  StepOutcome out;
  out.info.cancelled_count = cancel_expired(tick);

  if (action == 1) {
    const auto pool = waiting_orders();
    const auto idle = idle_drivers();
    const DispatchPlan plan = plan_dispatch(pool, idle, sim_);
    out.info.f_pick = plan.f_pick;
    out.info.f_detour = plan.f_detour;
    out.info.entities_dispatched = static_cast<int>(plan.assignment.matches.size());
    const std::size_t before = pool_.size();
    dispatch(plan, tick);
    out.info.matched_count = static_cast<int>(before - pool_.size());
    last_match_tick_ = tick;
    matched_before_ = true;
    match_ticks_.push_back(tick);
  }
  out.info.unmatched_after = static_cast<int>(pool_.size());

  ++t_;
  release_drivers(t_ * sim_.tick);

  out.reward = sim_.mode == ServiceMode::pooling
                   ? reward_pooling(sim_, action, out.info.unmatched_after, out.info.f_pick,
                                    out.info.f_detour)
                   : reward_hailing(sim_, action, out.info.unmatched_after, out.info.f_pick);
  out.done = done();
  if (options_.shaping) {
    const double phi_now = phi_current_;
    const double phi_next = out.done ? 0.0 : compute_potential();
    out.shaped_reward = pbrs_shape(out.reward, phi_now, phi_next, out.done, phi_initial_);
    phi_current_ = phi_next;
  } else {
    out.shaped_reward = out.reward;
  }
  out.observation = observe();
  if (options_.trace) write_trace(action, out);
  return out;
}

void MatchEnv::inject(int tick) {
  while (next_arrival_ < static_cast<int>(orders_.size()) &&
         orders_[next_arrival_].request_time <= tick) {
    pool_.push_back(static_cast<std::size_t>(next_arrival_));
    ++next_arrival_;
  }
}

int MatchEnv::cancel_expired(int tick) {
  int cancelled = 0;
  std::erase_if(pool_, [&](std::size_t k) {
    if (orders_[k].cancel_deadline > tick) return false;
    orders_[k].transition(OrderStatus::cancelled);
    records_[k].cancel_tick = tick;
    ++cancelled;
    return true;
  });
  return cancelled;
}

void MatchEnv::dispatch(const DispatchPlan& plan, int tick) {
  const double now = tick * sim_.tick;
  for (const auto& m : plan.assignment.matches) {
    const RideEntity& e = plan.entities[m.entity_id];
    DriverState& d = drivers_[m.driver_id];

    // Boarding offsets along the chain, measured from the first pickup.
    double along = 0.0;
    for (std::size_t s = 0; s < e.chain.size(); ++s) {
      if (s > 0) along += travel_time(distance(e.chain[s - 1].at, e.chain[s].at), sim_.speed);
      const Stop& stop = e.chain[s];
      if (stop.kind != StopKind::pickup) continue;
      PassengerRecord& r = records_[stop.order_id];
      r.match_tick = tick;
      r.matching_seconds = (tick - r.request_tick) * sim_.tick;
      r.pickup_seconds = m.pickup_time + along;
      r.pooled = e.kind == EntityKind::pair;
    }
    for (std::size_t k = 0; k < e.members.size(); ++k) {
      records_[e.members[k]].detour_seconds = e.detour_seconds[k];
      Order& o = orders_[e.members[k]];
      if (e.kind == EntityKind::pair) o.transition(OrderStatus::paired);
      o.transition(OrderStatus::assigned);
    }

    d.status = DriverStatus::enroute;
    d.busy_until = now + m.pickup_time + along;
    d.position = e.chain.back().at;
    trips_.push_back({static_cast<std::size_t>(m.driver_id), e.members, d.busy_until});
  }
  std::erase_if(pool_, [&](std::size_t k) { return orders_[k].status != OrderStatus::waiting; });
}

void MatchEnv::release_drivers(double now) {
  std::erase_if(trips_, [&](const Trip& trip) {
    if (trip.completes_at > now) return false;
    DriverState& d = drivers_[trip.driver];
    d.status = DriverStatus::idle;
    d.busy_until = trip.completes_at;
    for (int id : trip.members) orders_[id].transition(OrderStatus::completed);
    return true;
  });
}

std::vector<Order> MatchEnv::waiting_orders() const {
  std::vector<Order> out;
  out.reserve(pool_.size());
  for (std::size_t k : pool_) out.push_back(orders_[k]);
  return out;
}

std::vector<DriverState> MatchEnv::idle_drivers() const {
  std::vector<DriverState> out;
  for (const auto& d : drivers_) {
    if (d.idle()) out.push_back(d);
  }
  return out;
}

int MatchEnv::idle_driver_count() const {
  return static_cast<int>(std::count_if(drivers_.begin(), drivers_.end(),
                                        [](const DriverState& d) { return d.idle(); }));
}

double MatchEnv::compute_potential() const {
  if (pool_.empty()) return 0.0;
  const auto idle = idle_drivers();
  if (idle.empty()) return 0.0;
  const DispatchPlan plan = plan_dispatch(waiting_orders(), idle, sim_);
  if (sim_.mode == ServiceMode::pooling) return -(plan.f_pick + plan.f_detour);
  return -plan.f_pick;
}

double MatchEnv::potential() const { return compute_potential(); }

Observation MatchEnv::observe() const {
  double sum_wait = 0.0;
  double max_wait = 0.0;
  for (std::size_t k : pool_) {
    const double w = (t_ - orders_[k].request_time) * sim_.tick;
    sum_wait += w;
    max_wait = std::max(max_wait, w);
  }
  const double n = static_cast<double>(pool_.size());
  const double mean_wait = pool_.empty() ? 0.0 : sum_wait / n;
  return {static_cast<double>(t_) / sim_.horizon,
          (t_ - last_match_tick_) * sim_.tick / scale_.since_match,
          n / scale_.pool,
          mean_wait / scale_.mean_wait,
          max_wait / scale_.max_wait,
          idle_driver_count() / scale_.drivers};
}

void MatchEnv::write_trace(int action, const StepOutcome& out) const {
  nlohmann::json j;
  j["t"] = t_ - 1;
  j["mode"] = to_string(sim_.mode);
  j["reward_path"] = sim_.mode == ServiceMode::pooling ? "pooling" : "hailing";
  j["action"] = action;
  j["N_p"] = pool_.size();
  j["N_d"] = idle_driver_count();
  j["reward"] = out.reward;
  j["shaped"] = out.shaped_reward;
  j["matches"] = out.info.matched_count;
  j["f_pick"] = out.info.f_pick;
  j["f_detour"] = out.info.f_detour;
  j["cancelled"] = out.info.cancelled_count;
  *options_.trace << j.dump() << '\n';
}

}  // namespace ridematch
