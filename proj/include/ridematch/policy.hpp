#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "ridematch/env.hpp"

namespace ridematch {

/// Two independent tanh MLPs over the observation: an actor whose scalar
/// output is the logit of P(a = 1) and a critic whose output is the value.
///
/// Flat layout of one trunk: W1[h x in], b1[h], W2[h x h], b2[h], W3[h x h],
/// b3[h], W4[1 x h], b4[1]; weights row-major. The actor trunk comes first,
/// then the critic trunk.
struct PolicyParams {
  int input = static_cast<int>(kObservationSize);
  int hidden = 64;
  std::vector<double> theta;

  std::size_t trunk_size() const;
  std::size_t size() const { return 2 * trunk_size(); }
  std::span<double> actor() { return {theta.data(), trunk_size()}; }
  std::span<double> critic() { return {theta.data() + trunk_size(), trunk_size()}; }
  std::span<const double> actor() const { return {theta.data(), trunk_size()}; }
  std::span<const double> critic() const { return {theta.data() + trunk_size(), trunk_size()}; }
};

/// Same layout as PolicyParams::theta.
using Gradients = std::vector<double>;

struct TrunkCache {
  std::vector<double> h1, h2, h3;  // post-tanh activations
};

struct ForwardResult {
  double logit = 0.0;
  double p = 0.5;  // P(a = 1)
  double v = 0.0;
  std::vector<double> input;
  TrunkCache actor;
  TrunkCache critic;
};

/// Orthogonal weights (gain sqrt(2) hidden, 0.01 actor head, 1.0 critic
/// head) and zero biases. Deterministic in `seed`.
PolicyParams init_params(std::uint64_t seed, int hidden = 64,
                         int input = static_cast<int>(kObservationSize));

/// Throws std::invalid_argument on a wrong-length or non-finite input.
ForwardResult forward(const PolicyParams& params, std::span<const double> observation);

/// Accumulates into `grads` the gradient of a loss whose derivatives at the
/// heads are `d_logit` and `d_value`. Throws std::invalid_argument when the
/// cache does not fit `params` or `grads` has the wrong size.
void backward(const PolicyParams& params, const ForwardResult& cache, double d_logit,
              double d_value, Gradients& grads);

inline constexpr double kProbFloor = 1e-6;

double clamp_prob(double p);
/// ln p for action 1, ln(1 - p) for action 0, on the clamped probability.
double log_prob(double p, int action);
/// d log_prob / d logit.
double log_prob_grad(double p, int action);
double entropy(double p);
/// d entropy / d logit.
double entropy_grad(double p);

double logistic(double x);

/// Checkpoint container: "RMPOLICY", u32 version, u32 input, u32 hidden,
/// u32 hidden layers, u64 parameter count, then the parameters as
/// little-endian IEEE doubles.
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<unsigned char> serialize(const PolicyParams& params);
PolicyParams deserialize(std::span<const unsigned char> bytes);
void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_checkpoint(const std::filesystem::path& path);

}  // namespace ridematch
