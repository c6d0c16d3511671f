#include "ppk/kernels.hpp"

namespace ppk::kernels {

namespace {

void squared_distances(double x0, double y0, const double* xs, const double* ys, std::size_t n,
                       double* out) {
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = xs[j] - x0;
    const double dy = ys[j] - y0;
    out[j] = dx * dx + dy * dy;
  }
}

void epanechnikov_reflected(const double* r, std::size_t n, double d, double h, double w,
                            double* out) {
  const double inv_h = 1.0 / h;
  const double scale = w * 0.75 * inv_h;
  for (std::size_t k = 0; k < n; ++k) {
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
  for (std::size_t k = 0; k < n; ++k) {
    if (d <= r[k]) out[k] += w;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{&squared_distances, &epanechnikov_reflected, &step_accumulate, &dot};
}

}  // namespace ppk::kernels
