#include "ridematch/simd/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <cmath>

namespace ridematch::simd {
namespace {

void gemv_neon(const double* W, const double* b, const double* x, double* y, std::size_t rows,
               std::size_t cols) {
  const std::size_t cv = cols & ~std::size_t{1};
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t c = 0; c < cv; c += 2) {
      acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(w + c), vld1q_f64(x + c)));
    }
    double tail = vaddvq_f64(acc);
    for (std::size_t c = cv; c < cols; ++c) tail += w[c] * x[c];
    y[r] = b[r] + tail;
  }
}

void gemv_t_neon(const double* W, const double* g, double* out, std::size_t rows,
                 std::size_t cols) {
  const std::size_t cv = cols & ~std::size_t{1};
  for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    const float64x2_t gr = vdupq_n_f64(g[r]);
    for (std::size_t c = 0; c < cv; c += 2) {
      vst1q_f64(out + c, vaddq_f64(vld1q_f64(out + c), vmulq_f64(vld1q_f64(w + c), gr)));
    }
    for (std::size_t c = cv; c < cols; ++c) out[c] += w[c] * g[r];
  }
}

void outer_acc_neon(const double* g, const double* x, double* dW, std::size_t rows,
                    std::size_t cols) {
  const std::size_t cv = cols & ~std::size_t{1};
  for (std::size_t r = 0; r < rows; ++r) {
    double* d = dW + r * cols;
    const float64x2_t gr = vdupq_n_f64(g[r]);
    for (std::size_t c = 0; c < cv; c += 2) {
      vst1q_f64(d + c, vaddq_f64(vld1q_f64(d + c), vmulq_f64(gr, vld1q_f64(x + c))));
    }
    for (std::size_t c = cv; c < cols; ++c) d[c] += g[r] * x[c];
  }
}

double sum_squares_neon(const double* x, std::size_t n) {
  const std::size_t nv = n & ~std::size_t{1};
  float64x2_t acc = vdupq_n_f64(0.0);
  for (std::size_t k = 0; k < nv; k += 2) {
    const float64x2_t v = vld1q_f64(x + k);
    acc = vaddq_f64(acc, vmulq_f64(v, v));
  }
  double s = vaddvq_f64(acc);
  for (std::size_t k = nv; k < n; ++k) s += x[k] * x[k];
  return s;
}

void scale_neon(double* x, double s, std::size_t n) {
  const std::size_t nv = n & ~std::size_t{1};
  const float64x2_t sv = vdupq_n_f64(s);
  for (std::size_t k = 0; k < nv; k += 2) vst1q_f64(x + k, vmulq_f64(vld1q_f64(x + k), sv));
  for (std::size_t k = nv; k < n; ++k) x[k] *= s;
}

void adam_neon(double* p, const double* g, double* m, double* v, std::size_t n,
               const AdamCoeffs& c) {
  const std::size_t nv = n & ~std::size_t{1};
  const float64x2_t b1 = vdupq_n_f64(c.beta1), b2 = vdupq_n_f64(c.beta2);
  const float64x2_t omb1 = vdupq_n_f64(1.0 - c.beta1), omb2 = vdupq_n_f64(1.0 - c.beta2);
  const float64x2_t eps = vdupq_n_f64(c.eps), step = vdupq_n_f64(c.step_size);
  const float64x2_t ib2 = vdupq_n_f64(c.inv_sqrt_bias2);
  for (std::size_t k = 0; k < nv; k += 2) {
    const float64x2_t gk = vld1q_f64(g + k);
    const float64x2_t mk = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + k)), vmulq_f64(omb1, gk));
    const float64x2_t vk =
        vaddq_f64(vmulq_f64(b2, vld1q_f64(v + k)), vmulq_f64(omb2, vmulq_f64(gk, gk)));
    vst1q_f64(m + k, mk);
    vst1q_f64(v + k, vk);
    const float64x2_t denom = vaddq_f64(vmulq_f64(vsqrtq_f64(vk), ib2), eps);
    vst1q_f64(p + k, vsubq_f64(vld1q_f64(p + k), vmulq_f64(step, vdivq_f64(mk, denom))));
  }
  for (std::size_t k = nv; k < n; ++k) {
    m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
    v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * (g[k] * g[k]);
    const double denom = std::sqrt(v[k]) * c.inv_sqrt_bias2 + c.eps;
    p[k] = p[k] - c.step_size * (m[k] / denom);
  }
}

void distances_neon(double px, double py, const double* xs, const double* ys, double* out,
                    std::size_t n) {
  const std::size_t nv = n & ~std::size_t{1};
  const float64x2_t pxv = vdupq_n_f64(px), pyv = vdupq_n_f64(py);
  for (std::size_t k = 0; k < nv; k += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(xs + k), pxv);
    const float64x2_t dy = vsubq_f64(vld1q_f64(ys + k), pyv);
    vst1q_f64(out + k, vsqrtq_f64(vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy))));
  }
  for (std::size_t k = nv; k < n; ++k) {
    const double dx = xs[k] - px;
    const double dy = ys[k] - py;
    out[k] = std::sqrt(dx * dx + dy * dy);
  }
}

}  // namespace

namespace detail {

// TODO: vectorize pair_scores for NEON; it falls back to the scalar row.
const KernelTable* neon_table() {
  static const KernelTable t{gemv_neon,  gemv_t_neon, outer_acc_neon, sum_squares_neon,
                             scale_neon, adam_neon,   distances_neon,
                             scalar_table().pair_scores};
  return &t;
}

}  // namespace detail
}  // namespace ridematch::simd

#else

namespace ridematch::simd::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace ridematch::simd::detail

#endif
