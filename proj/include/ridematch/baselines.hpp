#pragma once

#include <memory>
#include <string>

#include "ridematch/env.hpp"
#include "ridematch/policy.hpp"
#include "ridematch/rng.hpp"

namespace ridematch {

/// Everything a timing rule may look at when choosing the action at tick t.
struct DecisionContext {
  int t = 0;
  int last_match_tick = 0;
  bool matched_before = false;  // false until the first a = 1
  Observation observation{};

  static DecisionContext from(const MatchEnv& env);
};

enum class PolicyKind { first_dispatch, fixed_interval, learned };

class TimingPolicy {
 public:
  static TimingPolicy first_dispatch();
  /// `ticks` >= 1. Before the first match the window is measured from tick -1,
  /// so fixed_interval(1) acts on every tick like first_dispatch.
  static TimingPolicy fixed_interval(int ticks);
  /// Deterministic: a = 1 iff p >= 0.5. Stochastic: a ~ Bernoulli(p).
  static TimingPolicy learned(std::shared_ptr<const PolicyParams> params, bool stochastic = false);

  /// `rng` is only drawn from by a stochastic learned policy.
  int decide(const DecisionContext& ctx, Engine& rng) const;

  PolicyKind kind() const { return kind_; }
  int interval() const { return interval_; }
  bool stochastic() const { return stochastic_; }
  const PolicyParams* params() const { return params_.get(); }
  std::string label() const;

 private:
  PolicyKind kind_ = PolicyKind::first_dispatch;
  int interval_ = 1;
  bool stochastic_ = false;
  std::shared_ptr<const PolicyParams> params_;
  std::string source_;

  friend TimingPolicy parse_policy(const std::string& spec, bool stochastic);
};

/// "first-dispatch", "fixed:K" (K ticks) or "learned:PATH". Throws
/// std::invalid_argument on a malformed spec; checkpoint errors propagate.
TimingPolicy parse_policy(const std::string& spec, bool stochastic = false);

}  // namespace ridematch
