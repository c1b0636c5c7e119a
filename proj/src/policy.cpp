#include "ridematch/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include <Eigen/QR>

#include "ridematch/rng.hpp"
#include "ridematch/simd/kernels.hpp"

namespace ridematch {
namespace {

struct TrunkLayout {
  std::size_t in, h;
  std::size_t w1, b1, w2, b2, w3, b3, w4, b4, end;

  TrunkLayout(std::size_t input, std::size_t hidden) : in(input), h(hidden) {
    w1 = 0;
    b1 = w1 + h * in;
    w2 = b1 + h;
    b2 = w2 + h * h;
    w3 = b2 + h;
    b3 = w3 + h * h;
    w4 = b3 + h;
    b4 = w4 + h;
    end = b4 + 1;
  }
};

TrunkLayout layout_of(const PolicyParams& p) {
  return TrunkLayout(static_cast<std::size_t>(p.input), static_cast<std::size_t>(p.hidden));
}

void dense_tanh(const double* W, const double* b, std::span<const double> x, std::vector<double>& out,
                std::size_t rows) {
  out.resize(rows);
  simd::kernels().gemv(W, b, x.data(), out.data(), rows, x.size());
  for (double& v : out) v = std::tanh(v);
}

double trunk_forward(std::span<const double> w, const TrunkLayout& L, std::span<const double> x,
                     TrunkCache& c) {
  dense_tanh(w.data() + L.w1, w.data() + L.b1, x, c.h1, L.h);
  dense_tanh(w.data() + L.w2, w.data() + L.b2, c.h1, c.h2, L.h);
  dense_tanh(w.data() + L.w3, w.data() + L.b3, c.h2, c.h3, L.h);
  double out = 0.0;
  simd::kernels().gemv(w.data() + L.w4, w.data() + L.b4, c.h3.data(), &out, 1, L.h);
  return out;
}

void trunk_backward(std::span<const double> w, const TrunkLayout& L, std::span<const double> x,
                    const TrunkCache& c, double d_out, double* g) {
  const auto& k = simd::kernels();
  std::vector<double> d_h(L.h), d_pre(L.h);

  k.outer_acc(&d_out, c.h3.data(), g + L.w4, 1, L.h);
  g[L.b4] += d_out;
  k.gemv_t(w.data() + L.w4, &d_out, d_h.data(), 1, L.h);

  const std::vector<double>* acts[3] = {&c.h3, &c.h2, &c.h1};
  const std::size_t W[3] = {L.w3, L.w2, L.w1};
  const std::size_t B[3] = {L.b3, L.b2, L.b1};
  for (int layer = 0; layer < 3; ++layer) {
    const std::vector<double>& h = *acts[layer];
    for (std::size_t r = 0; r < L.h; ++r) d_pre[r] = d_h[r] * (1.0 - h[r] * h[r]);
    const bool first = layer == 2;
    const double* below = first ? x.data() : acts[layer + 1]->data();
    const std::size_t cols = first ? L.in : L.h;
    k.outer_acc(d_pre.data(), below, g + W[layer], L.h, cols);
    for (std::size_t r = 0; r < L.h; ++r) g[B[layer] + r] += d_pre[r];
    if (!first) k.gemv_t(w.data() + W[layer], d_pre.data(), d_h.data(), L.h, cols);
  }
}

// Orthogonal rows or columns (whichever fit) scaled by `gain`.
void orthogonal(double* out, std::size_t rows, std::size_t cols, double gain, Engine& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const bool tall = rows >= cols;
  const Eigen::Index r = static_cast<Eigen::Index>(tall ? rows : cols);
  const Eigen::Index c = static_cast<Eigen::Index>(tall ? cols : rows);
  Eigen::MatrixXd a(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) a(i, j) = n(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < c; ++j) {
    if (R(j, j) < 0) q.col(j) *= -1.0;
  }
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = tall ? q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                            : q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      out[i * cols + j] = gain * v;
    }
  }
}

void init_trunk(std::span<double> w, const TrunkLayout& L, double head_gain, Engine& rng) {
  const double g = std::sqrt(2.0);
  orthogonal(w.data() + L.w1, L.h, L.in, g, rng);
  orthogonal(w.data() + L.w2, L.h, L.h, g, rng);
  orthogonal(w.data() + L.w3, L.h, L.h, g, rng);
  orthogonal(w.data() + L.w4, 1, L.h, head_gain, rng);
}

template <class T>
void put(std::vector<unsigned char>& out, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t k = sizeof(T); k-- > 0;) out.push_back(b[k]);
  } else {
    const auto* b = reinterpret_cast<const unsigned char*>(&v);
    out.insert(out.end(), b, b + sizeof(T));
  }
}

template <class T>
T get(std::span<const unsigned char> in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw CheckpointError("checkpoint truncated");
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

constexpr char kMagic[8] = {'R', 'M', 'P', 'O', 'L', 'I', 'C', 'Y'};

}  // namespace

std::size_t PolicyParams::trunk_size() const { return layout_of(*this).end; }

PolicyParams init_params(std::uint64_t seed, int hidden, int input) {
  if (hidden < 1 || input < 1) throw std::invalid_argument("init_params: sizes must be positive");
  PolicyParams p;
  p.input = input;
  p.hidden = hidden;
  p.theta.assign(p.size(), 0.0);
  const TrunkLayout L = layout_of(p);
  Engine actor_rng = make_stream(seed, "policy-actor");
  Engine critic_rng = make_stream(seed, "policy-critic");
  init_trunk(p.actor(), L, 0.01, actor_rng);
  init_trunk(p.critic(), L, 1.0, critic_rng);
  return p;
}

ForwardResult forward(const PolicyParams& params, std::span<const double> observation) {
  if (observation.size() != static_cast<std::size_t>(params.input)) {
    throw std::invalid_argument("forward: observation has the wrong length");
  }
  for (double x : observation) {
    if (!std::isfinite(x)) throw std::invalid_argument("forward: non-finite observation");
  }
  if (params.theta.size() != params.size()) throw std::invalid_argument("forward: parameter size mismatch");
  const TrunkLayout L = layout_of(params);
  ForwardResult r;
  r.input.assign(observation.begin(), observation.end());
  r.logit = trunk_forward(params.actor(), L, r.input, r.actor);
  r.v = trunk_forward(params.critic(), L, r.input, r.critic);
  r.p = logistic(r.logit);
  return r;
}

void backward(const PolicyParams& params, const ForwardResult& cache, double d_logit,
              double d_value, Gradients& grads) {
  const TrunkLayout L = layout_of(params);
  if (grads.size() != params.size()) throw std::invalid_argument("backward: gradient size mismatch");
  if (cache.input.size() != L.in || cache.actor.h1.size() != L.h || cache.critic.h3.size() != L.h) {
    throw std::invalid_argument("backward: cache does not match parameters");
  }
  if (d_logit != 0.0) trunk_backward(params.actor(), L, cache.input, cache.actor, d_logit, grads.data());
  if (d_value != 0.0) {
    trunk_backward(params.critic(), L, cache.input, cache.critic, d_value, grads.data() + L.end);
  }
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

double log_prob(double p, int action) {
  const double q = clamp_prob(p);
  return action == 1 ? std::log(q) : std::log1p(-q);
}

double log_prob_grad(double p, int action) {
  if (p != clamp_prob(p)) return 0.0;
  return action == 1 ? 1.0 - p : -p;
}

double entropy(double p) {
  const double q = clamp_prob(p);
  return -q * std::log(q) - (1.0 - q) * std::log1p(-q);
}

double entropy_grad(double p) {
  if (p != clamp_prob(p)) return 0.0;
  return (std::log1p(-p) - std::log(p)) * p * (1.0 - p);
}

std::vector<unsigned char> serialize(const PolicyParams& params) {
  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.input));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.hidden));
  put<std::uint32_t>(out, 3);
  put<std::uint64_t>(out, params.theta.size());
  for (double v : params.theta) put<double>(out, v);
  return out;
}

PolicyParams deserialize(std::span<const unsigned char> bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a policy checkpoint (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  PolicyParams p;
  p.input = static_cast<int>(get<std::uint32_t>(bytes, pos));
  p.hidden = static_cast<int>(get<std::uint32_t>(bytes, pos));
  const auto layers = get<std::uint32_t>(bytes, pos);
  const auto count = get<std::uint64_t>(bytes, pos);
  if (layers != 3 || p.input < 1 || p.hidden < 1 || count != p.size()) {
    throw CheckpointError("checkpoint shape header is inconsistent");
  }
  if (bytes.size() - pos != count * sizeof(double)) throw CheckpointError("checkpoint size mismatch");
  p.theta.resize(count);
  for (auto& v : p.theta) v = get<double>(bytes, pos);
  return p;
}

void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path) {
  const auto bytes = serialize(params);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace ridematch
