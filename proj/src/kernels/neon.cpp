#include <arm_neon.h>

#include "ppk/kernels.hpp"

namespace ppk::kernels {

namespace {

void squared_distances(double x0, double y0, const double* xs, const double* ys, std::size_t n,
                       double* out) {
  const float64x2_t vx0 = vdupq_n_f64(x0);
  const float64x2_t vy0 = vdupq_n_f64(y0);
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(xs + j), vx0);
    const float64x2_t dy = vsubq_f64(vld1q_f64(ys + j), vy0);
    vst1q_f64(out + j, vfmaq_f64(vmulq_f64(dy, dy), dx, dx));
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
  const float64x2_t vd = vdupq_n_f64(d);
  const float64x2_t vinv = vdupq_n_f64(inv_h);
  const float64x2_t vscale = vdupq_n_f64(scale);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t vr = vld1q_f64(r + k);
    const float64x2_t t1 = vmulq_f64(vsubq_f64(vr, vd), vinv);
    const float64x2_t t2 = vmulq_f64(vaddq_f64(vr, vd), vinv);
    const float64x2_t v1 = vmaxq_f64(vfmsq_f64(one, t1, t1), zero);
    const float64x2_t v2 = vmaxq_f64(vfmsq_f64(one, t2, t2), zero);
    vst1q_f64(out + k, vfmaq_f64(vld1q_f64(out + k), vscale, vaddq_f64(v1, v2)));
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
  const float64x2_t vd = vdupq_n_f64(d);
  const float64x2_t vw = vdupq_n_f64(w);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const uint64x2_t mask = vcleq_f64(vd, vld1q_f64(r + k));
    const float64x2_t add =
        vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(vw)));
    vst1q_f64(out + k, vaddq_f64(vld1q_f64(out + k), add));
  }
  for (; k < n; ++k) {
    if (d <= r[k]) out[k] += w;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) acc = vfmaq_f64(acc, vld1q_f64(a + k), vld1q_f64(b + k));
  double total = vaddvq_f64(acc);
  for (; k < n; ++k) total += a[k] * b[k];
  return total;
}

}  // namespace

namespace detail {
const KernelTable kNeonTable{&squared_distances, &epanechnikov_reflected, &step_accumulate, &dot};
}

}  // namespace ppk::kernels
