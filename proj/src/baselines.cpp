#include "ridematch/baselines.hpp"

#include <charconv>
#include <random>
#include <stdexcept>

namespace ridematch {

DecisionContext DecisionContext::from(const MatchEnv& env) {
  return {env.t(), env.last_match_tick(), env.matched_before(), env.observe()};
}

TimingPolicy TimingPolicy::first_dispatch() { return {}; }

TimingPolicy TimingPolicy::fixed_interval(int ticks) {
  if (ticks < 1) throw std::invalid_argument("fixed interval must be at least 1 tick");
  TimingPolicy p;
  p.kind_ = PolicyKind::fixed_interval;
  p.interval_ = ticks;
  return p;
}

TimingPolicy TimingPolicy::learned(std::shared_ptr<const PolicyParams> params, bool stochastic) {
  if (!params) throw std::invalid_argument("learned policy needs parameters");
  TimingPolicy p;
  p.kind_ = PolicyKind::learned;
  p.params_ = std::move(params);
  p.stochastic_ = stochastic;
  return p;
}

int TimingPolicy::decide(const DecisionContext& ctx, Engine& rng) const {
  switch (kind_) {
    case PolicyKind::first_dispatch:
      return 1;
    case PolicyKind::fixed_interval: {
      const int since = ctx.t - (ctx.matched_before ? ctx.last_match_tick : -1);
      return since >= interval_ ? 1 : 0;
    }
    case PolicyKind::learned: {
      const double p = forward(*params_, ctx.observation).p;
      if (stochastic_) return std::bernoulli_distribution(p)(rng) ? 1 : 0;
      return p >= 0.5 ? 1 : 0;
    }
  }
  return 0;
}

std::string TimingPolicy::label() const {
  switch (kind_) {
    case PolicyKind::first_dispatch: return "first-dispatch";
    case PolicyKind::fixed_interval: return "fixed:" + std::to_string(interval_);
    case PolicyKind::learned: return source_.empty() ? "learned" : "learned:" + source_;
  }
  return "?";
}

TimingPolicy parse_policy(const std::string& spec, bool stochastic) {
  if (spec == "first-dispatch") return TimingPolicy::first_dispatch();
  if (spec.rfind("fixed:", 0) == 0) {
    const std::string n = spec.substr(6);
    int k = 0;
    const auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), k);
    if (ec != std::errc() || ptr != n.data() + n.size() || k < 1) {
      throw std::invalid_argument("bad policy '" + spec + "': fixed:K needs an integer K >= 1");
    }
    return TimingPolicy::fixed_interval(k);
  }
  if (spec.rfind("learned:", 0) == 0) {
    const std::string path = spec.substr(8);
    if (path.empty()) throw std::invalid_argument("bad policy '" + spec + "': missing checkpoint path");
    auto p = TimingPolicy::learned(std::make_shared<const PolicyParams>(load_checkpoint(path)), stochastic);
    p.source_ = path;
    return p;
  }
  throw std::invalid_argument("bad policy '" + spec + "' (expected first-dispatch, fixed:K or learned:PATH)");
}

}  // namespace ridematch
