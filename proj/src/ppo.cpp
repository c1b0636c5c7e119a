#include "ridematch/ppo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "json.hpp"
#include "ridematch/simd/kernels.hpp"

namespace ridematch {

void PpoConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("ppo config: " + field + " " + why);
  };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate", "must be > 0");
  if (num_envs < 1) fail("num_envs", "must be >= 1");
  if (num_steps < 1) fail("num_steps", "must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma", "must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda", "must be in [0, 1]");
  if (num_minibatches < 1) fail("num_minibatches", "must be >= 1");
  if (batch_size() % num_minibatches != 0) fail("num_minibatches", "must divide num_envs * num_steps");
  if (update_epochs < 1) fail("update_epochs", "must be >= 1");
  if (!(clip_coef > 0.0 && clip_coef < 1.0)) fail("clip_coef", "must be in (0, 1)");
  if (!(ent_coef >= 0.0)) fail("ent_coef", "must be >= 0");
  if (!(vf_coef >= 0.0)) fail("vf_coef", "must be >= 0");
  if (!(max_grad_norm > 0.0)) fail("max_grad_norm", "must be > 0");
  if (iterations < 0) fail("iterations", "must be >= 0");
  if (total_episodes < 0) fail("total_episodes", "must be >= 0");
  if (!(reward_scale > 0.0) || !std::isfinite(reward_scale)) fail("reward_scale", "must be > 0");
  if (hidden < 1) fail("hidden", "must be >= 1");
  if (jobs < 1) fail("jobs", "must be >= 1");
  if (checkpoint_every < 0) fail("checkpoint_every", "must be >= 0");
}

int PpoConfig::resolved_iterations(int horizon) const {
  if (total_episodes <= 0) return iterations;
  const std::int64_t steps = static_cast<std::int64_t>(total_episodes) * horizon;
  return static_cast<int>((steps + batch_size() - 1) / batch_size());
}

PpoConfig parse_ppo_config(const std::string& json_text, PpoConfig c) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("ppo config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("ppo config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto num = [&](double& out) {
      if (!value.is_number()) throw std::invalid_argument("ppo config: " + key + " must be a number");
      out = value.get<double>();
    };
    auto integer = [&](int& out) {
      if (!value.is_number_integer()) throw std::invalid_argument("ppo config: " + key + " must be an integer");
      out = value.get<int>();
    };
    auto flag = [&](bool& out) {
      if (!value.is_boolean()) throw std::invalid_argument("ppo config: " + key + " must be a boolean");
      out = value.get<bool>();
    };
    if (key == "learning_rate") num(c.learning_rate);
    else if (key == "num_envs") integer(c.num_envs);
    else if (key == "num_steps") integer(c.num_steps);
    else if (key == "gamma") num(c.gamma);
    else if (key == "gae_lambda") num(c.gae_lambda);
    else if (key == "num_minibatches") integer(c.num_minibatches);
    else if (key == "update_epochs") integer(c.update_epochs);
    else if (key == "clip_coef") num(c.clip_coef);
    else if (key == "ent_coef") num(c.ent_coef);
    else if (key == "vf_coef") num(c.vf_coef);
    else if (key == "max_grad_norm") num(c.max_grad_norm);
    else if (key == "anneal_lr") flag(c.anneal_lr);
    else if (key == "norm_adv") flag(c.norm_adv);
    else if (key == "clip_vloss") flag(c.clip_vloss);
    else if (key == "iterations") integer(c.iterations);
    else if (key == "total_episodes") integer(c.total_episodes);
    else if (key == "seed") {
      if (!value.is_number_unsigned()) throw std::invalid_argument("ppo config: seed must be a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "reward_scale") num(c.reward_scale);
    else if (key == "shaping") flag(c.shaping);
    else if (key == "hidden") integer(c.hidden);
    else if (key == "jobs") integer(c.jobs);
    else if (key == "checkpoint_every") integer(c.checkpoint_every);
    else throw std::invalid_argument("ppo config: unknown key " + key);
  }
  c.validate();
  return c;
}

std::string ppo_config_to_json(const PpoConfig& c) {
  nlohmann::ordered_json j;
  j["learning_rate"] = c.learning_rate;
  j["num_envs"] = c.num_envs;
  j["num_steps"] = c.num_steps;
  j["gamma"] = c.gamma;
  j["gae_lambda"] = c.gae_lambda;
  j["num_minibatches"] = c.num_minibatches;
  j["update_epochs"] = c.update_epochs;
  j["clip_coef"] = c.clip_coef;
  j["ent_coef"] = c.ent_coef;
  j["vf_coef"] = c.vf_coef;
  j["max_grad_norm"] = c.max_grad_norm;
  j["anneal_lr"] = c.anneal_lr;
  j["norm_adv"] = c.norm_adv;
  j["clip_vloss"] = c.clip_vloss;
  j["iterations"] = c.iterations;
  j["total_episodes"] = c.total_episodes;
  j["seed"] = c.seed;
  j["reward_scale"] = c.reward_scale;
  j["shaping"] = c.shaping;
  j["hidden"] = c.hidden;
  j["jobs"] = c.jobs;
  j["checkpoint_every"] = c.checkpoint_every;
  return j.dump();
}

void RolloutBuffer::resize(int envs, int steps) {
  num_envs = envs;
  num_steps = steps;
  const auto n = static_cast<std::size_t>(envs) * static_cast<std::size_t>(steps);
  observations.assign(n, Observation{});
  actions.assign(n, 0);
  log_probs.assign(n, 0.0);
  values.assign(n, 0.0);
  rewards.assign(n, 0.0);
  dones.assign(n, 0);
  bootstrap_values.assign(static_cast<std::size_t>(envs), 0.0);
}

VecEnv::VecEnv(const Scenario& scenario, int num_envs, std::uint64_t seed, bool shaping,
               std::ostream* trace)
    : scenario_(scenario), seed_(seed) {
  if (num_envs < 1) throw std::invalid_argument("VecEnv: num_envs must be >= 1");
  slots_.reserve(static_cast<std::size_t>(num_envs));
  for (int e = 0; e < num_envs; ++e) {
    const EnvOptions opts{.shaping = shaping, .trace = e == 0 ? trace : nullptr};
    slots_.push_back(Slot{MatchEnv(scenario_, opts), Observation{}, 0,
                          make_stream(seed, "train-action", static_cast<std::uint64_t>(e))});
    start_episode(static_cast<std::size_t>(e));
  }
}

void VecEnv::start_episode(std::size_t e) {
  Slot& s = slots_[e];
  const std::uint64_t index = (static_cast<std::uint64_t>(e) << 32) + s.episodes_started++;
  s.obs = s.env.reset(generate_episode(scenario_, derive_seed(seed_, "train-episode", index)));
  s.natural = 0.0;
  s.shaped = 0.0;
  s.ones = 0;
}

void collect_rollout(const PolicyParams& params, VecEnv& envs, int num_steps, double reward_scale,
                     int jobs, RolloutBuffer& buffer, std::vector<EpisodeRecord>& finished) {
  const int n_envs = envs.size();
  buffer.resize(n_envs, num_steps);
  std::vector<std::vector<std::pair<int, EpisodeRecord>>> done_per_env(static_cast<std::size_t>(n_envs));

  auto run_env = [&](int e) {
    auto& slot = envs.slots_[static_cast<std::size_t>(e)];
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < num_steps; ++t) {
      const std::size_t k = buffer.index(t, e);
      const ForwardResult f = forward(params, slot.obs);
      const int a = u(slot.action_rng) < f.p ? 1 : 0;
      buffer.observations[k] = slot.obs;
      buffer.actions[k] = a;
      buffer.log_probs[k] = log_prob(f.p, a);
      buffer.values[k] = f.v;
      const StepOutcome out = slot.env.step(a);
      buffer.rewards[k] = out.shaped_reward * reward_scale;
      buffer.dones[k] = out.done ? 1 : 0;
      slot.natural += out.reward;
      slot.shaped += out.shaped_reward;
      slot.ones += a;
      if (out.done) {
        EpisodeRecord r;
        r.env = e;
        r.natural_return = slot.natural;
        r.shaped_return = slot.shaped;
        r.action_rate = static_cast<double>(slot.ones) / slot.env.sim().horizon;
        done_per_env[static_cast<std::size_t>(e)].emplace_back(t, r);
        envs.start_episode(static_cast<std::size_t>(e));
      } else {
        slot.obs = out.observation;
      }
    }
    buffer.bootstrap_values[static_cast<std::size_t>(e)] = forward(params, slot.obs).v;
  };

  const int workers = std::clamp(jobs, 1, n_envs);
  if (workers == 1) {
    for (int e = 0; e < n_envs; ++e) run_env(e);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int e = next++; e < n_envs; e = next++) run_env(e);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<std::pair<int, EpisodeRecord>> all;
  for (auto& v : done_per_env) all.insert(all.end(), v.begin(), v.end());
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second.env < b.second.env;
  });
  for (auto& [t, r] : all) finished.push_back(r);
}

Advantages compute_gae(const RolloutBuffer& b, double gamma, double lambda) {
  Advantages out;
  out.advantages.assign(b.size(), 0.0);
  out.returns.assign(b.size(), 0.0);
  for (int e = 0; e < b.num_envs; ++e) {
    double next_adv = 0.0;
    double next_value = b.bootstrap_values[static_cast<std::size_t>(e)];
    for (int t = b.num_steps - 1; t >= 0; --t) {
      const std::size_t k = b.index(t, e);
      const double live = b.dones[k] ? 0.0 : 1.0;
      const double delta = b.rewards[k] + gamma * next_value * live - b.values[k];
      next_adv = delta + gamma * lambda * live * next_adv;
      out.advantages[k] = next_adv;
      out.returns[k] = next_adv + b.values[k];
      next_value = b.values[k];
    }
  }
  return out;
}

std::vector<double> normalize_advantages(std::span<const double> adv) {
  std::vector<double> out(adv.begin(), adv.end());
  if (out.empty()) return out;
  const double n = static_cast<double>(out.size());
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : out) ss += (a - mean) * (a - mean);
  const double sd = out.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  for (double& a : out) a = (a - mean) / (sd + 1e-8);
  return out;
}

LossResult ppo_loss(const PolicyParams& params, const Minibatch& batch, const PpoConfig& cfg,
                    Gradients* grads) {
  const std::size_t n = batch.actions.size();
  if (n == 0) throw std::invalid_argument("ppo_loss: empty minibatch");
  if (batch.observations.size() != n || batch.old_log_probs.size() != n ||
      batch.old_values.size() != n || batch.advantages.size() != n || batch.returns.size() != n) {
    throw std::invalid_argument("ppo_loss: minibatch columns differ in length");
  }
  if (grads && grads->size() != params.size()) throw std::invalid_argument("ppo_loss: gradient size mismatch");

  const std::vector<double> adv =
      cfg.norm_adv ? normalize_advantages(batch.advantages)
                   : std::vector<double>(batch.advantages.begin(), batch.advantages.end());
  const double inv_n = 1.0 / static_cast<double>(n);
  const double eps = cfg.clip_coef;

  LossResult r;
  double pg = 0.0, vloss = 0.0, ent = 0.0, kl = 0.0, clipped = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const ForwardResult f = forward(params, batch.observations[i]);
    const int a = batch.actions[i];
    const double logratio = log_prob(f.p, a) - batch.old_log_probs[i];
    const double ratio = std::exp(logratio);
    const double A = adv[i];

    // Policy term: max(-A r, -A clip(r)).
    const double unclipped = -A * ratio;
    const double clipped_term = -A * std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    pg += std::max(unclipped, clipped_term);
    const double d_pg_d_logp = unclipped >= clipped_term ? -A * ratio : 0.0;

    // Value term: 0.5 * max((v - R)^2, (v_old + clip(v - v_old) - R)^2) when clipping.
    const double R = batch.returns[i];
    const double err = f.v - R;
    double v_term = err * err;
    double d_v = err;
    if (cfg.clip_vloss) {
      const double delta = f.v - batch.old_values[i];
      const double cdelta = std::clamp(delta, -eps, eps);
      const double cerr = batch.old_values[i] + cdelta - R;
      if (cerr * cerr > v_term) {
        v_term = cerr * cerr;
        d_v = cdelta == delta ? cerr : 0.0;
      }
    }
    vloss += 0.5 * v_term;

    ent += entropy(f.p);
    kl += (ratio - 1.0) - logratio;
    if (std::abs(ratio - 1.0) > eps) clipped += 1.0;

    if (grads) {
      const double d_logit =
          inv_n * (d_pg_d_logp * log_prob_grad(f.p, a) - cfg.ent_coef * entropy_grad(f.p));
      const double d_value = inv_n * cfg.vf_coef * d_v;
      backward(params, f, d_logit, d_value, *grads);
    }
  }
  r.stats.policy_loss = pg * inv_n;
  r.stats.value_loss = vloss * inv_n;
  r.stats.entropy = ent * inv_n;
  r.stats.approx_kl = kl * inv_n;
  r.stats.clip_fraction = clipped * inv_n;
  r.loss = r.stats.policy_loss + cfg.vf_coef * r.stats.value_loss - cfg.ent_coef * r.stats.entropy;
  return r;
}

double optimizer_step(std::vector<double>& params, Gradients& grads, AdamState& state, double lr,
                      double max_grad_norm) {
  if (grads.size() != params.size()) throw std::invalid_argument("optimizer_step: size mismatch");
  for (double g : grads) {
    if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient; update skipped");
  }
  const double norm = std::sqrt(simd::sum_squares(grads));
  if (!std::isfinite(norm)) throw NonFiniteError("gradient norm overflow; update skipped");
  if (norm > max_grad_norm) simd::scale(grads, max_grad_norm / norm);

  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  simd::AdamCoeffs c;
  c.beta1 = AdamState::beta1;
  c.beta2 = AdamState::beta2;
  c.eps = AdamState::eps;
  c.step_size = lr / (1.0 - std::pow(AdamState::beta1, t));
  c.inv_sqrt_bias2 = 1.0 / std::sqrt(1.0 - std::pow(AdamState::beta2, t));
  simd::kernels().adam(params.data(), grads.data(), state.m.data(), state.v.data(), params.size(), c);
  return norm;
}

std::string iteration_to_json(const IterationLog& it) {
  nlohmann::ordered_json j;
  j["iteration"] = it.iteration;
  j["global_step"] = it.global_step;
  j["learning_rate"] = it.learning_rate;
  j["policy_loss"] = it.stats.policy_loss;
  j["value_loss"] = it.stats.value_loss;
  j["entropy"] = it.stats.entropy;
  j["approx_kl"] = it.stats.approx_kl;
  j["clip_fraction"] = it.stats.clip_fraction;
  j["grad_norm"] = it.stats.grad_norm;
  j["action_rate"] = it.action_rate;
  auto eps = nlohmann::ordered_json::array();
  for (const auto& e : it.episodes) {
    eps.push_back({{"env", e.env},
                   {"natural_return", e.natural_return},
                   {"shaped_return", e.shaped_return},
                   {"action_rate", e.action_rate}});
  }
  j["episodes"] = eps;
  return j.dump();
}

namespace {

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, const std::string& tag) {
  return dir / ("policy-" + tag + ".ckpt");
}

std::string iteration_tag(int it) {
  std::string s = std::to_string(it);
  return std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
}

}  // namespace

TrainResult train(const Scenario& scenario, const PpoConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  TrainResult result;
  result.params = init_params(derive_seed(cfg.seed, "policy-init"), cfg.hidden);
  const int iterations = cfg.resolved_iterations(scenario.sim.horizon);
  if (hooks.checkpoint_dir) std::filesystem::create_directories(*hooks.checkpoint_dir);

  VecEnv envs(scenario, cfg.num_envs, cfg.seed, cfg.shaping, hooks.trace);
  AdamState adam;
  Engine shuffle_rng = make_stream(cfg.seed, "minibatch-shuffle");
  RolloutBuffer buffer;
  std::vector<std::size_t> order(static_cast<std::size_t>(cfg.batch_size()));
  Gradients grads(result.params.size());
  const auto mb = static_cast<std::size_t>(cfg.minibatch_size());
  std::int64_t global_step = 0;

  for (int it = 1; it <= iterations; ++it) {
    IterationLog log;
    log.iteration = it;
    const double frac = cfg.anneal_lr ? 1.0 - static_cast<double>(it - 1) / iterations : 1.0;
    log.learning_rate = frac * cfg.learning_rate;

    collect_rollout(result.params, envs, cfg.num_steps, cfg.reward_scale, cfg.jobs, buffer, log.episodes);
    for (auto& e : log.episodes) e.iteration = it;
    global_step += cfg.batch_size();
    log.global_step = global_step;
    log.action_rate = static_cast<double>(std::accumulate(buffer.actions.begin(), buffer.actions.end(), 0)) /
                      static_cast<double>(buffer.size());

    const Advantages gae = compute_gae(buffer, cfg.gamma, cfg.gae_lambda);
    const PolicyParams before = result.params;
    const AdamState adam_before = adam;

    std::vector<Observation> obs(mb);
    std::vector<int> act(mb);
    std::vector<double> old_lp(mb), old_v(mb), adv(mb), ret(mb);
    UpdateStats sum;
    int updates = 0;
    try {
      for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (int m = 0; m < cfg.num_minibatches; ++m) {
          for (std::size_t i = 0; i < mb; ++i) {
            const std::size_t k = order[static_cast<std::size_t>(m) * mb + i];
            obs[i] = buffer.observations[k];
            act[i] = buffer.actions[k];
            old_lp[i] = buffer.log_probs[k];
            old_v[i] = buffer.values[k];
            adv[i] = gae.advantages[k];
            ret[i] = gae.returns[k];
          }
          std::fill(grads.begin(), grads.end(), 0.0);
          const LossResult loss = ppo_loss(result.params, {obs, act, old_lp, old_v, adv, ret}, cfg, &grads);
          if (!std::isfinite(loss.loss)) throw NonFiniteError("non-finite loss at iteration " + std::to_string(it));
          const double gn = optimizer_step(result.params.theta, grads, adam, log.learning_rate, cfg.max_grad_norm);
          sum.policy_loss += loss.stats.policy_loss;
          sum.value_loss += loss.stats.value_loss;
          sum.entropy += loss.stats.entropy;
          sum.approx_kl += loss.stats.approx_kl;
          sum.clip_fraction += loss.stats.clip_fraction;
          sum.grad_norm += gn;
          ++updates;
        }
      }
      for (double w : result.params.theta) {
        if (!std::isfinite(w)) throw NonFiniteError("non-finite parameter at iteration " + std::to_string(it));
      }
    } catch (const NonFiniteError& e) {
      result.params = before;
      adam = adam_before;
      result.halted = true;
      result.message = e.what();
      if (hooks.checkpoint_dir) save_checkpoint(result.params, checkpoint_path(*hooks.checkpoint_dir, "final"));
      return result;
    }

    const double k = 1.0 / updates;
    log.stats = {sum.policy_loss * k, sum.value_loss * k, sum.entropy * k,
                 sum.approx_kl * k,   sum.clip_fraction * k, sum.grad_norm * k};
    if (hooks.log) *hooks.log << iteration_to_json(log) << '\n' << std::flush;
    if (hooks.checkpoint_dir && cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0) {
      save_checkpoint(result.params, checkpoint_path(*hooks.checkpoint_dir, iteration_tag(it)));
    }
    if (hooks.on_iteration) hooks.on_iteration(log);
    result.log.push_back(std::move(log));
  }
  if (hooks.checkpoint_dir) save_checkpoint(result.params, checkpoint_path(*hooks.checkpoint_dir, "final"));
  return result;
}

}  // namespace ridematch
