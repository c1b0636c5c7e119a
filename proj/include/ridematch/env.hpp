#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <vector>

#include "ridematch/domain.hpp"
#include "ridematch/matching.hpp"
#include "ridematch/scenario.hpp"

namespace ridematch {

/// [T_t, dT_t, N_p, mean wait, max wait, N_d], each divided by its scale.
using Observation = std::array<double, 6>;
inline constexpr std::size_t kObservationSize = 6;

struct StepInfo {
  int matched_count = 0;     // orders dispatched this step
  int entities_dispatched = 0;
  int cancelled_count = 0;   // orders cancelled this step
  int unmatched_after = 0;   // pool size after the action
  double f_pick = 0.0;       // seconds, 0 when a = 0
  double f_detour = 0.0;     // seconds, 0 when a = 0
};

struct StepOutcome {
  Observation observation{};
  double reward = 0.0;  // natural, <= 0
  double shaped_reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// What happened to one order over an episode. Times are seconds.
struct PassengerRecord {
  int order_id = 0;
  int request_tick = 0;
  int match_tick = -1;   // -1 while unmatched
  int cancel_tick = -1;  // -1 unless cancelled
  bool pooled = false;
  double pickup_seconds = 0.0;  // match to true boarding
  double detour_seconds = 0.0;
  double matching_seconds = 0.0;

  bool served() const { return match_tick >= 0; }
  bool cancelled() const { return cancel_tick >= 0; }
};

/// Outcome of dispatching a pool to the idle drivers: the exact pairing (in
/// pooling mode), the entities and the optimal assignment. Costs count only
/// entities that received a driver.
struct DispatchPlan {
  PairingResult pairing;
  std::vector<RideEntity> entities;
  AssignmentResult assignment;
  double f_pick = 0.0;
  double f_detour = 0.0;
};

DispatchPlan plan_dispatch(std::span<const Order> pool, std::span<const DriverState> idle,
                           const SimParams& sim);

/// -(phi * R_m + R_w) with R_m = tick * unmatched_after and R_w = f_pick when a = 1.
double reward_hailing(const SimParams& sim, int action, int unmatched_after, double f_pick);

/// Hailing penalty plus tau * f_detour when a = 1.
double reward_pooling(const SimParams& sim, int action, int unmatched_after, double f_pick,
                      double f_detour);

/// Finite-horizon shaping: r + phi_next - phi_now, or r - phi_now + phi_initial
/// on the last step of the episode.
double pbrs_shape(double reward, double phi_now, double phi_next, bool is_terminal_step,
                  double phi_initial);

struct EnvOptions {
  bool shaping = true;  // when false, shaped_reward == reward and no potential is computed
  std::ostream* trace = nullptr;  // one JSON object per step
};

/// The match-timing MDP over one episode at a time. Single-threaded; separate
/// instances share nothing.
class MatchEnv {
 public:
  explicit MatchEnv(const Scenario& scenario, EnvOptions options = {});

  Observation reset(const EpisodeData& episode);
  /// Throws std::logic_error after the episode is done.
  StepOutcome step(int action);

  Observation observe() const;
  /// Potential of the current state: -f_pick, or -(f_pick + f_detour) when pooling.
  double potential() const;

  int t() const { return t_; }
  int last_match_tick() const { return last_match_tick_; }
  bool matched_before() const { return matched_before_; }
  bool done() const { return t_ >= sim_.horizon; }
  const SimParams& sim() const { return sim_; }

  std::vector<Order> waiting_orders() const;
  const std::vector<DriverState>& drivers() const { return drivers_; }
  std::vector<DriverState> idle_drivers() const;
  int idle_driver_count() const;

  const std::vector<PassengerRecord>& passengers() const { return records_; }
  /// Ticks at which the action was 1, in order.
  const std::vector<int>& match_ticks() const { return match_ticks_; }
  int injected_count() const { return next_arrival_; }
  int total_arrivals() const { return static_cast<int>(orders_.size()); }

 private:
  struct Trip {
    std::size_t driver;
    std::vector<int> members;
    double completes_at;  // seconds
  };

  void inject(int tick);
  int cancel_expired(int tick);
  void dispatch(const DispatchPlan& plan, int tick);
  void release_drivers(double now);
  double compute_potential() const;
  void write_trace(int action, const StepOutcome& out) const;

  SimParams sim_;
  ObservationScale scale_;
  EnvOptions options_;

  std::vector<Order> orders_;  // index = order id
  std::vector<std::size_t> pool_;  // indices into orders_, ascending
  std::vector<DriverState> drivers_;
  std::vector<Trip> trips_;
  std::vector<PassengerRecord> records_;
  std::vector<int> match_ticks_;

  int t_ = 0;
  int last_match_tick_ = 0;
  bool matched_before_ = false;
  int next_arrival_ = 0;
  bool episode_loaded_ = false;
  double phi_initial_ = 0.0;
  double phi_current_ = 0.0;
};

}  // namespace ridematch
