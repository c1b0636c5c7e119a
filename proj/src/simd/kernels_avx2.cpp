#include "ridematch/simd/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <cmath>

namespace ridematch::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void gemv_avx2(const double* W, const double* b, const double* x, double* y, std::size_t rows,
               std::size_t cols) {
  const std::size_t cv = cols & ~std::size_t{3};
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t c = 0; c < cv; c += 4) {
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(w + c), _mm256_loadu_pd(x + c)));
    }
    double tail = hsum(acc);
    for (std::size_t c = cv; c < cols; ++c) tail += w[c] * x[c];
    y[r] = b[r] + tail;
  }
}

void gemv_t_avx2(const double* W, const double* g, double* out, std::size_t rows,
                 std::size_t cols) {
  const std::size_t cv = cols & ~std::size_t{3};
  for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    const __m256d gr = _mm256_set1_pd(g[r]);
    for (std::size_t c = 0; c < cv; c += 4) {
      const __m256d o = _mm256_loadu_pd(out + c);
      _mm256_storeu_pd(out + c, _mm256_add_pd(o, _mm256_mul_pd(_mm256_loadu_pd(w + c), gr)));
    }
    for (std::size_t c = cv; c < cols; ++c) out[c] += w[c] * g[r];
  }
}

void outer_acc_avx2(const double* g, const double* x, double* dW, std::size_t rows,
                    std::size_t cols) {
  const std::size_t cv = cols & ~std::size_t{3};
  for (std::size_t r = 0; r < rows; ++r) {
    double* d = dW + r * cols;
    const __m256d gr = _mm256_set1_pd(g[r]);
    for (std::size_t c = 0; c < cv; c += 4) {
      const __m256d cur = _mm256_loadu_pd(d + c);
      _mm256_storeu_pd(d + c, _mm256_add_pd(cur, _mm256_mul_pd(gr, _mm256_loadu_pd(x + c))));
    }
    for (std::size_t c = cv; c < cols; ++c) d[c] += g[r] * x[c];
  }
}

double sum_squares_avx2(const double* x, std::size_t n) {
  const std::size_t nv = n & ~std::size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t k = 0; k < nv; k += 4) {
    const __m256d v = _mm256_loadu_pd(x + k);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s = hsum(acc);
  for (std::size_t k = nv; k < n; ++k) s += x[k] * x[k];
  return s;
}

void scale_avx2(double* x, double s, std::size_t n) {
  const std::size_t nv = n & ~std::size_t{3};
  const __m256d sv = _mm256_set1_pd(s);
  for (std::size_t k = 0; k < nv; k += 4) {
    _mm256_storeu_pd(x + k, _mm256_mul_pd(_mm256_loadu_pd(x + k), sv));
  }
  for (std::size_t k = nv; k < n; ++k) x[k] *= s;
}

void adam_avx2(double* p, const double* g, double* m, double* v, std::size_t n,
               const AdamCoeffs& c) {
  const std::size_t nv = n & ~std::size_t{3};
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d eps = _mm256_set1_pd(c.eps);
  const __m256d step = _mm256_set1_pd(c.step_size);
  const __m256d ib2 = _mm256_set1_pd(c.inv_sqrt_bias2);
  for (std::size_t k = 0; k < nv; k += 4) {
    const __m256d gk = _mm256_loadu_pd(g + k);
    const __m256d mk = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + k)), _mm256_mul_pd(omb1, gk));
    const __m256d vk = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + k)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(gk, gk)));
    _mm256_storeu_pd(m + k, mk);
    _mm256_storeu_pd(v + k, vk);
    const __m256d denom = _mm256_add_pd(_mm256_mul_pd(_mm256_sqrt_pd(vk), ib2), eps);
    const __m256d upd = _mm256_mul_pd(step, _mm256_div_pd(mk, denom));
    _mm256_storeu_pd(p + k, _mm256_sub_pd(_mm256_loadu_pd(p + k), upd));
  }
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (std::size_t k = nv; k < n; ++k) {
    m[k] = c.beta1 * m[k] + one_minus_b1 * g[k];
    v[k] = c.beta2 * v[k] + one_minus_b2 * (g[k] * g[k]);
    const double denom = std::sqrt(v[k]) * c.inv_sqrt_bias2 + c.eps;
    p[k] = p[k] - c.step_size * (m[k] / denom);
  }
}

inline __m256d dist4(__m256d ax, __m256d ay, __m256d bx, __m256d by) {
  const __m256d dx = _mm256_sub_pd(bx, ax);
  const __m256d dy = _mm256_sub_pd(by, ay);
  return _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)));
}

void distances_avx2(double px, double py, const double* xs, const double* ys, double* out,
                    std::size_t n) {
  const std::size_t nv = n & ~std::size_t{3};
  const __m256d pxv = _mm256_set1_pd(px);
  const __m256d pyv = _mm256_set1_pd(py);
  for (std::size_t k = 0; k < nv; k += 4) {
    _mm256_storeu_pd(out + k, dist4(pxv, pyv, _mm256_loadu_pd(xs + k), _mm256_loadu_pd(ys + k)));
  }
  for (std::size_t k = nv; k < n; ++k) {
    const double dx = xs[k] - px;
    const double dy = ys[k] - py;
    out[k] = std::sqrt(dx * dx + dy * dy);
  }
}

void pair_scores_avx2(const TripQuery& q, const TripColumns& t, double* out) {
  const std::size_t nv = t.size & ~std::size_t{3};
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d qox = _mm256_set1_pd(q.ox), qoy = _mm256_set1_pd(q.oy);
  const __m256d qdx = _mm256_set1_pd(q.dx), qdy = _mm256_set1_pd(q.dy);
  const __m256d di = _mm256_set1_pd(q.direct);
  for (std::size_t k = 0; k < nv; k += 4) {
    const __m256d kox = _mm256_loadu_pd(t.ox + k), koy = _mm256_loadu_pd(t.oy + k);
    const __m256d kdx = _mm256_loadu_pd(t.dx + k), kdy = _mm256_loadu_pd(t.dy + k);
    const __m256d dk = _mm256_loadu_pd(t.direct + k);
    const __m256d oo = dist4(qox, qoy, kox, koy);
    const __m256d dd = dist4(qdx, qdy, kdx, kdy);
    const __m256d ok_dq = dist4(kox, koy, qdx, qdy);
    const __m256d oq_dk = dist4(qox, qoy, kdx, kdy);

    const __m256d s1 = _mm256_min_pd(
        _mm256_min_pd(_mm256_div_pd(dk, _mm256_add_pd(ok_dq, dd)), one),
        _mm256_min_pd(_mm256_div_pd(di, _mm256_add_pd(oo, ok_dq)), one));
    const __m256d s2 =
        _mm256_min_pd(_mm256_div_pd(di, _mm256_add_pd(_mm256_add_pd(oo, dk), dd)), one);
    const __m256d s3 = _mm256_min_pd(
        _mm256_min_pd(_mm256_div_pd(di, _mm256_add_pd(oq_dk, dd)), one),
        _mm256_min_pd(_mm256_div_pd(dk, _mm256_add_pd(oo, oq_dk)), one));
    const __m256d s4 =
        _mm256_min_pd(_mm256_div_pd(dk, _mm256_add_pd(_mm256_add_pd(oo, di), dd)), one);

    __m256d best = s1;
    best = _mm256_max_pd(s2, best);
    best = _mm256_max_pd(s3, best);
    best = _mm256_max_pd(s4, best);
    _mm256_storeu_pd(out + k, best);
  }
  if (nv < t.size) {
    TripColumns rest{t.ox + nv, t.oy + nv, t.dx + nv, t.dy + nv, t.direct + nv, t.size - nv};
    detail::scalar_table().pair_scores(q, rest, out + nv);
  }
}

}  // namespace

namespace detail {

const KernelTable* avx2_table() {
  static const KernelTable t{gemv_avx2,  gemv_t_avx2, outer_acc_avx2, sum_squares_avx2,
                             scale_avx2, adam_avx2,   distances_avx2, pair_scores_avx2};
  return &t;
}

}  // namespace detail
}  // namespace ridematch::simd

#else

namespace ridematch::simd::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace ridematch::simd::detail

#endif
