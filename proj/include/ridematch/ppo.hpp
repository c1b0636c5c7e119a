#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ridematch/env.hpp"
#include "ridematch/policy.hpp"
#include "ridematch/rng.hpp"
#include "ridematch/scenario.hpp"

namespace ridematch {

struct PpoConfig {
  double learning_rate = 2.5e-4;
  int num_envs = 4;
  int num_steps = 120;
  double gamma = 1.0;
  double gae_lambda = 0.95;
  int num_minibatches = 8;
  int update_epochs = 4;
  double clip_coef = 0.2;
  double ent_coef = 0.01;
  double vf_coef = 0.5;
  double max_grad_norm = 1.0;
  bool anneal_lr = true;
  bool norm_adv = true;
  bool clip_vloss = true;
  // Length of training: total_episodes > 0 takes precedence and is converted
  // to whole iterations of num_envs * num_steps transitions.
  int iterations = 500;
  int total_episodes = 0;
  std::uint64_t seed = 1;
  // Rewards are multiplied by this before they reach the learner.
  double reward_scale = 1e-4;
  bool shaping = true;
  int hidden = 64;
  int jobs = 1;              // rollout worker threads, capped at num_envs
  int checkpoint_every = 100;  // iterations; 0 = final checkpoint only

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
  /// Iterations implied by the length fields for a given episode horizon.
  int resolved_iterations(int horizon) const;
  int batch_size() const { return num_envs * num_steps; }
  int minibatch_size() const { return batch_size() / num_minibatches; }
};

/// Applies the keys of a JSON object to `base`. Unknown keys and wrong types
/// throw std::invalid_argument.
PpoConfig parse_ppo_config(const std::string& json_text, PpoConfig base = {});
std::string ppo_config_to_json(const PpoConfig& c);

/// Transitions stored step-major: entry (step, env) lives at step * num_envs + env.
struct RolloutBuffer {
  int num_envs = 0;
  int num_steps = 0;
  std::vector<Observation> observations;
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;  // shaped and scaled
  std::vector<std::uint8_t> dones;  // 1 when the transition ends an episode
  std::vector<double> bootstrap_values;  // per env, value of the state after the last step

  void resize(int envs, int steps);
  std::size_t size() const { return actions.size(); }
  std::size_t index(int step, int env) const {
    return static_cast<std::size_t>(step) * static_cast<std::size_t>(num_envs) +
           static_cast<std::size_t>(env);
  }
};

/// Natural return of a finished training episode plus its shaped return and
/// the fraction of ticks with a = 1. Returns are unscaled.
struct EpisodeRecord {
  int env = 0;
  int iteration = 0;
  double natural_return = 0.0;
  double shaped_return = 0.0;
  double action_rate = 0.0;
};

/// The training environments. Env e plays episodes generated from
/// derive_seed(seed, "train-episode", e * 2^32 + k) for k = 0, 1, ... and
/// samples actions from its own stream, so results do not depend on how many
/// threads step the envs. `trace`, when set, receives env 0's step trace.
class VecEnv {
 public:
  VecEnv(const Scenario& scenario, int num_envs, std::uint64_t seed, bool shaping,
         std::ostream* trace = nullptr);

  int size() const { return static_cast<int>(slots_.size()); }
  const Observation& observation(int env) const { return slots_[static_cast<std::size_t>(env)].obs; }
  const MatchEnv& env(int e) const { return slots_[static_cast<std::size_t>(e)].env; }

 private:
  struct Slot {
    MatchEnv env;
    Observation obs{};
    std::uint64_t episodes_started = 0;
    Engine action_rng;
    double natural = 0.0;
    double shaped = 0.0;
    int ones = 0;
  };
  void start_episode(std::size_t e);

  Scenario scenario_;
  std::uint64_t seed_;
  std::vector<Slot> slots_;

  friend void collect_rollout(const PolicyParams&, VecEnv&, int, double, int, RolloutBuffer&,
                              std::vector<EpisodeRecord>&);
};

/// Steps every env num_steps times under the fixed policy `params`, starting a
/// fresh episode whenever one ends. Finished episodes are appended to
/// `finished` in (step, env) order.
void collect_rollout(const PolicyParams& params, VecEnv& envs, int num_steps, double reward_scale,
                     int jobs, RolloutBuffer& buffer, std::vector<EpisodeRecord>& finished);

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// delta_t = r_t + gamma * v_{t+1} * (1 - done_t) - v_t and
/// A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}, per env; returns = A + v.
Advantages compute_gae(const RolloutBuffer& buffer, double gamma, double lambda);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;  // before clipping
};

/// One minibatch as seen by the loss; all spans have the same length.
struct Minibatch {
  std::span<const Observation> observations;
  std::span<const int> actions;
  std::span<const double> old_log_probs;
  std::span<const double> old_values;
  std::span<const double> advantages;  // raw; normalized inside when norm_adv
  std::span<const double> returns;
};

struct LossResult {
  double loss = 0.0;  // -surrogate + vf_coef * value_loss - ent_coef * entropy
  UpdateStats stats;  // grad_norm left at 0
};

/// Mean-zero, unit sample-std copy of `adv` (1e-8 guard on the std).
std::vector<double> normalize_advantages(std::span<const double> adv);

/// Clipped-surrogate loss of `params` on `batch`. When `grads` is non-null the
/// exact gradient of `loss` is accumulated into it.
LossResult ppo_loss(const PolicyParams& params, const Minibatch& batch, const PpoConfig& config,
                    Gradients* grads);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double eps = 1e-5;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rescales `grads` to norm max_grad_norm when larger, then applies one Adam
/// step. Returns the norm before clipping. Throws NonFiniteError, leaving
/// params and state untouched, when a gradient is not finite.
double optimizer_step(std::vector<double>& params, Gradients& grads, AdamState& state, double lr,
                      double max_grad_norm);

struct IterationLog {
  int iteration = 0;
  std::int64_t global_step = 0;
  double learning_rate = 0.0;
  UpdateStats stats;
  double action_rate = 0.0;  // fraction of a = 1 in this iteration's rollout
  std::vector<EpisodeRecord> episodes;  // finished during this iteration's rollout
};

struct TrainResult {
  PolicyParams params;
  std::vector<IterationLog> log;
  bool halted = false;  // a non-finite loss or gradient stopped training
  std::string message;
};

struct TrainHooks {
  std::ostream* log = nullptr;  // one JSON object per iteration
  std::optional<std::filesystem::path> checkpoint_dir;
  std::function<void(const IterationLog&)> on_iteration;
  std::ostream* trace = nullptr;  // per-step trace of training env 0
};

std::string iteration_to_json(const IterationLog& it);

/// Runs PPO from init_params(derive_seed(seed, "policy-init"), hidden). On a
/// non-finite loss or gradient the update is discarded, the last good
/// parameters are checkpointed and the result is marked halted.
TrainResult train(const Scenario& scenario, const PpoConfig& config, const TrainHooks& hooks = {});

}  // namespace ridematch
