#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "../support/nn_oracles.hpp"
#include "ridematch/policy.hpp"

using namespace ridematch;
using ridematch::testing::fd_gradient;
using ridematch::testing::max_relative_error;
using ridematch::testing::naive_trunk;
using ridematch::testing::random_params;

namespace {

std::vector<double> random_input(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (double& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST(Init, DeterministicAndShaped) {
  const PolicyParams a = init_params(3), b = init_params(3), c = init_params(4);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_NE(a.theta, c.theta);
  EXPECT_EQ(a.size(), 2u * (64 * 6 + 64 + 2 * (64 * 64 + 64) + 64 + 1));
}

TEST(Init, OrthogonalRowsAndZeroBiases) {
  const PolicyParams p = init_params(9, 8, 6);
  // W2 is square: W2 W2^T = 2 I.
  const double* w2 = p.theta.data() + 8 * 6 + 8;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 8; ++k) dot += w2[i * 8 + k] * w2[j * 8 + k];
      EXPECT_NEAR(dot, i == j ? 2.0 : 0.0, 1e-12);
    }
  }
  for (int r = 0; r < 8; ++r) EXPECT_EQ(p.theta[8 * 6 + static_cast<std::size_t>(r)], 0.0);
  // The actor head starts near-uniform.
  const ForwardResult f = forward(p, std::vector<double>{0.3, -0.2, 0.5, 0.1, 0.9, -0.4});
  EXPECT_NEAR(f.p, 0.5, 0.01);
}

TEST(Forward, ZeroInputSeesBiasesOnly) {
  std::mt19937_64 rng(1);
  PolicyParams p = random_params(rng, 5, 6);
  const std::vector<double> zero(6, 0.0);
  const double before = forward(p, zero).logit;
  // Input weights cannot matter at x = 0.
  for (int k = 0; k < 5 * 6; ++k) p.theta[static_cast<std::size_t>(k)] += 1.0;
  const ForwardResult f = forward(p, zero);
  EXPECT_DOUBLE_EQ(f.logit, before);
  EXPECT_DOUBLE_EQ(f.p, logistic(f.logit));
}

TEST(Forward, MatchesNaiveEvaluation) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = 1 + trial % 9, in = 1 + trial % 6;
    const PolicyParams p = random_params(rng, h, in);
    const auto x = random_input(rng, in);
    const ForwardResult f = forward(p, x);
    EXPECT_NEAR(f.logit, naive_trunk(p.actor().data(), in, h, x), 1e-12);
    EXPECT_NEAR(f.v, naive_trunk(p.critic().data(), in, h, x), 1e-12);
  }
}

TEST(Forward, RejectsBadInput) {
  const PolicyParams p = init_params(1, 4);
  EXPECT_THROW(forward(p, std::vector<double>(5, 0.0)), std::invalid_argument);
  std::vector<double> x(6, 0.0);
  x[2] = std::nan("");
  EXPECT_THROW(forward(p, x), std::invalid_argument);
}

TEST(Backward, ZeroHeadGradientIsZero) {
  const PolicyParams p = init_params(1, 4);
  const ForwardResult f = forward(p, std::vector<double>(6, 0.5));
  Gradients g(p.size(), 0.0);
  backward(p, f, 0.0, 0.0, g);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Backward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const int h = 2 + trial % 7, in = 1 + trial % 6;
    const PolicyParams p = random_params(rng, h, in);
    const auto x = random_input(rng, in);
    const double a = 0.7, b = -1.3;
    auto loss = [&](const PolicyParams& q) {
      const ForwardResult f = forward(q, x);
      return a * f.logit + b * f.v;
    };
    Gradients g(p.size(), 0.0);
    backward(p, forward(p, x), a, b, g);
    EXPECT_LT(max_relative_error(g, fd_gradient(p, loss)), 1e-4) << "trial " << trial;
  }
}

TEST(Backward, RejectsMismatchedCache) {
  const PolicyParams p = init_params(1, 4), q = init_params(1, 5);
  const ForwardResult f = forward(q, std::vector<double>(6, 0.1));
  Gradients g(p.size(), 0.0);
  EXPECT_THROW(backward(p, f, 1.0, 1.0, g), std::invalid_argument);
  Gradients short_g(3, 0.0);
  EXPECT_THROW(backward(p, forward(p, std::vector<double>(6, 0.1)), 1.0, 1.0, short_g),
               std::invalid_argument);
}

TEST(Heads, LogProbAndEntropy) {
  EXPECT_NEAR(log_prob(0.5, 1), -0.6931471805599453, 1e-15);
  EXPECT_NEAR(log_prob(0.5, 0), std::log(0.5), 1e-15);
  EXPECT_NEAR(entropy(0.5), std::log(2.0), 1e-15);
  EXPECT_LT(entropy(1e-9), 1e-4);
  EXPECT_LT(entropy(1.0 - 1e-9), 1e-4);
  EXPECT_TRUE(std::isfinite(log_prob(0.0, 1)));
  EXPECT_TRUE(std::isfinite(log_prob(1.0, 0)));
}

TEST(Heads, DerivativesWithRespectToLogit) {
  for (double z : {-3.0, -0.4, 0.0, 0.9, 2.5}) {
    const double h = 1e-6;
    const double p = logistic(z);
    for (int a : {0, 1}) {
      const double fd = (log_prob(logistic(z + h), a) - log_prob(logistic(z - h), a)) / (2 * h);
      EXPECT_NEAR(log_prob_grad(p, a), fd, 1e-7);
    }
    const double fd = (entropy(logistic(z + h)) - entropy(logistic(z - h))) / (2 * h);
    EXPECT_NEAR(entropy_grad(p), fd, 1e-7);
  }
}

TEST(Checkpoint, RoundTripIsExact) {
  std::mt19937_64 rng(4);
  const PolicyParams p = random_params(rng, 7, 6);
  const PolicyParams q = deserialize(serialize(p));
  EXPECT_EQ(q.hidden, 7);
  EXPECT_EQ(q.input, 6);
  EXPECT_EQ(q.theta, p.theta);

  const auto path = std::filesystem::temp_directory_path() / "ridematch_policy_rt.ckpt";
  save_checkpoint(p, path);
  EXPECT_EQ(load_checkpoint(path).theta, p.theta);
  std::filesystem::remove(path);
}

TEST(Checkpoint, VersionMismatchIsNamed) {
  auto bytes = serialize(init_params(1, 3));
  bytes[8] = 7;  // version field follows the 8-byte magic
  try {
    deserialize(bytes);
    FAIL();
  } catch (const CheckpointError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("version 7"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 1"), std::string::npos) << msg;
  }
}

TEST(Checkpoint, CorruptInputs) {
  auto bytes = serialize(init_params(1, 3));
  EXPECT_THROW(deserialize(std::span(bytes).first(20)), CheckpointError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize(bad), CheckpointError);
  bytes.push_back(0);
  EXPECT_THROW(deserialize(bytes), CheckpointError);
}
