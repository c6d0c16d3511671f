// Built with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "ppk/kernels.hpp"

namespace ppk::kernels {

namespace {

void squared_distances(double x0, double y0, const double* xs, const double* ys, std::size_t n,
                       double* out) {
  const __m256d vx0 = _mm256_set1_pd(x0);
  const __m256d vy0 = _mm256_set1_pd(y0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + j), vx0);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + j), vy0);
    _mm256_storeu_pd(out + j, _mm256_fmadd_pd(dx, dx, _mm256_mul_pd(dy, dy)));
  }
  for (; j < n; ++j) {
    const double dx = xs[j] - x0;
    const double dy = ys[j] - y0;
    out[j] = dx * dx + dy * dy;
  }
}

void epanechnikov_reflected(const double* r, std::size_t n, double d, double h, double w,
                            double* out) {
  const double inv_h = 1.0 / h;
  const double scale = w * 0.75 * inv_h;
  const __m256d vd = _mm256_set1_pd(d);
  const __m256d vinv = _mm256_set1_pd(inv_h);
  const __m256d vscale = _mm256_set1_pd(scale);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d vr = _mm256_loadu_pd(r + k);
    const __m256d t1 = _mm256_mul_pd(_mm256_sub_pd(vr, vd), vinv);
    const __m256d t2 = _mm256_mul_pd(_mm256_add_pd(vr, vd), vinv);
    const __m256d v1 = _mm256_max_pd(_mm256_fnmadd_pd(t1, t1, one), zero);
    const __m256d v2 = _mm256_max_pd(_mm256_fnmadd_pd(t2, t2, one), zero);
    const __m256d acc = _mm256_loadu_pd(out + k);
    _mm256_storeu_pd(out + k, _mm256_fmadd_pd(vscale, _mm256_add_pd(v1, v2), acc));
  }
  for (; k < n; ++k) {
    const double t1 = (r[k] - d) * inv_h;
    const double t2 = (r[k] + d) * inv_h;
    double v1 = 1.0 - t1 * t1;
    double v2 = 1.0 - t2 * t2;
    v1 = v1 > 0.0 ? v1 : 0.0;
    v2 = v2 > 0.0 ? v2 : 0.0;
    out[k] += scale * (v1 + v2);
  }
}

void step_accumulate(const double* r, std::size_t n, double d, double w, double* out) {
  const __m256d vd = _mm256_set1_pd(d);
  const __m256d vw = _mm256_set1_pd(w);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d mask = _mm256_cmp_pd(vd, _mm256_loadu_pd(r + k), _CMP_LE_OQ);
    const __m256d acc = _mm256_loadu_pd(out + k);
    _mm256_storeu_pd(out + k, _mm256_add_pd(acc, _mm256_and_pd(mask, vw)));
  }
  for (; k < n; ++k) {
    if (d <= r[k]) out[k] += w;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
  }
  const __m256d acc = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  double total = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; k < n; ++k) total += a[k] * b[k];
  return total;
}

}  // namespace

namespace detail {
const KernelTable kAvx2Table{&squared_distances, &epanechnikov_reflected, &step_accumulate, &dot};
}

}  // namespace ppk::kernels
