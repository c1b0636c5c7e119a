#pragma once

// Data-parallel inner loops used by the matching engines and the policy
// network. Every kernel has a scalar reference implementation; SIMD variants
// are selected once at startup from the CPU's capabilities and may be forced
// with RIDEMATCH_SIMD=scalar|avx2|neon or set_backend().
//
// Elementwise kernels (distances, pair scores, gemv_t, outer_acc, scale, adam)
// perform the same IEEE operations in the same order in every backend and are
// bit-identical to the scalar reference. gemv and sum_squares reduce in lanes
// and agree with the reference only to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace ridematch::simd {

enum class Backend { scalar, avx2, neon };

std::string_view to_string(Backend b);

/// Origins/destinations of a batch of orders, structure-of-arrays.
struct TripColumns {
  const double* ox;
  const double* oy;
  const double* dx;
  const double* dy;
  const double* direct;  // |O_k D_k|
  std::size_t size;
};

/// One order seen against a batch.
struct TripQuery {
  double ox, oy, dx, dy, direct;
};

struct AdamCoeffs {
  double beta1;
  double beta2;
  double eps;
  double step_size;       // lr / (1 - beta1^t)
  double inv_sqrt_bias2;  // 1 / sqrt(1 - beta2^t)
};

struct KernelTable {
  // y[r] = b[r] + sum_c W[r*cols + c] * x[c]
  void (*gemv)(const double* W, const double* b, const double* x, double* y, std::size_t rows,
               std::size_t cols);
  // out[c] = sum_r W[r*cols + c] * g[r]   (r ascending)
  void (*gemv_t)(const double* W, const double* g, double* out, std::size_t rows,
                 std::size_t cols);
  // dW[r*cols + c] += g[r] * x[c]
  void (*outer_acc)(const double* g, const double* x, double* dW, std::size_t rows,
                    std::size_t cols);
  double (*sum_squares)(const double* x, std::size_t n);
  void (*scale)(double* x, double s, std::size_t n);
  void (*adam)(double* p, const double* g, double* m, double* v, std::size_t n,
               const AdamCoeffs& c);
  // out[k] = |(px,py) - (xs[k],ys[k])|
  void (*distances)(double px, double py, const double* xs, const double* ys, double* out,
                    std::size_t n);
  // out[k] = best shared-ride detour rate of the pair (query, k); see matching.hpp
  void (*pair_scores)(const TripQuery& q, const TripColumns& cols, double* out);
};

Backend active_backend();
bool backend_supported(Backend b);
/// Throws std::invalid_argument if `b` is not supported on this CPU/build.
void set_backend(Backend b);
const KernelTable& table(Backend b);
const KernelTable& kernels();

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();
}  // namespace detail

// Span front-ends over the active table.

inline void gemv(std::span<const double> W, std::span<const double> b, std::span<const double> x,
                 std::span<double> y) {
  kernels().gemv(W.data(), b.data(), x.data(), y.data(), y.size(), x.size());
}

inline void gemv_t(std::span<const double> W, std::span<const double> g, std::span<double> out) {
  kernels().gemv_t(W.data(), g.data(), out.data(), g.size(), out.size());
}

inline void outer_acc(std::span<const double> g, std::span<const double> x, std::span<double> dW) {
  kernels().outer_acc(g.data(), x.data(), dW.data(), g.size(), x.size());
}

inline double sum_squares(std::span<const double> x) {
  return kernels().sum_squares(x.data(), x.size());
}

inline void scale(std::span<double> x, double s) { kernels().scale(x.data(), s, x.size()); }

}  // namespace ridematch::simd
