#include <algorithm>
#include <cmath>

#include "ridematch/simd/kernels.hpp"

namespace ridematch::simd {
namespace {

void gemv_ref(const double* W, const double* b, const double* x, double* y, std::size_t rows,
              std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    y[r] = b[r] + acc;
  }
}

void gemv_t_ref(const double* W, const double* g, double* out, std::size_t rows,
                std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    const double gr = g[r];
    for (std::size_t c = 0; c < cols; ++c) out[c] += w[c] * gr;
  }
}

void outer_acc_ref(const double* g, const double* x, double* dW, std::size_t rows,
                   std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* d = dW + r * cols;
    const double gr = g[r];
    for (std::size_t c = 0; c < cols; ++c) d[c] += gr * x[c];
  }
}

double sum_squares_ref(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += x[k] * x[k];
  return acc;
}

void scale_ref(double* x, double s, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) x[k] *= s;
}

void adam_ref(double* p, const double* g, double* m, double* v, std::size_t n,
              const AdamCoeffs& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (std::size_t k = 0; k < n; ++k) {
    m[k] = c.beta1 * m[k] + one_minus_b1 * g[k];
    v[k] = c.beta2 * v[k] + one_minus_b2 * (g[k] * g[k]);
    const double denom = std::sqrt(v[k]) * c.inv_sqrt_bias2 + c.eps;
    p[k] = p[k] - c.step_size * (m[k] / denom);
  }
}

void distances_ref(double px, double py, const double* xs, const double* ys, double* out,
                   std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = xs[k] - px;
    const double dy = ys[k] - py;
    out[k] = std::sqrt(dx * dx + dy * dy);
  }
}

inline double dist(double ax, double ay, double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  return std::sqrt(dx * dx + dy * dy);
}

void pair_scores_ref(const TripQuery& q, const TripColumns& t, double* out) {
  for (std::size_t k = 0; k < t.size; ++k) {
    const double oo = dist(q.ox, q.oy, t.ox[k], t.oy[k]);
    const double dd = dist(q.dx, q.dy, t.dx[k], t.dy[k]);
    const double ok_dq = dist(t.ox[k], t.oy[k], q.dx, q.dy);
    const double oq_dk = dist(q.ox, q.oy, t.dx[k], t.dy[k]);
    const double di = q.direct;
    const double dk = t.direct[k];
    // query picked up first
    const double s1 = std::min(std::min(1.0, di / (oo + ok_dq)), std::min(1.0, dk / (ok_dq + dd)));
    const double s2 = std::min(1.0, di / ((oo + dk) + dd));
    // batch order picked up first
    const double s3 = std::min(std::min(1.0, dk / (oo + oq_dk)), std::min(1.0, di / (oq_dk + dd)));
    const double s4 = std::min(1.0, dk / ((oo + di) + dd));
    double best = s1;
    if (s2 > best) best = s2;
    if (s3 > best) best = s3;
    if (s4 > best) best = s4;
    out[k] = best;
  }
}

}  // namespace

namespace detail {

const KernelTable& scalar_table() {
  static const KernelTable t{gemv_ref,  gemv_t_ref, outer_acc_ref, sum_squares_ref,
                             scale_ref, adam_ref,   distances_ref, pair_scores_ref};
  return t;
}

}  // namespace detail
}  // namespace ridematch::simd
