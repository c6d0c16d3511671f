#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ppk::kernels {

/// Instruction sets with a kernel implementation. Scalar is the reference;
/// the others must agree with it to rounding (see tests/test_kernels.cpp).
enum class Isa { Scalar, Avx2, Neon };

std::string_view name(Isa isa) noexcept;

struct KernelTable {
  /// out[j] = (xs[j] - x0)^2 + (ys[j] - y0)^2
  void (*squared_distances)(double x0, double y0, const double* xs, const double* ys,
                            std::size_t n, double* out);
  /// out[k] += w * (k_h(r[k] - d) + k_h(r[k] + d)) with the Epanechnikov
  /// kernel k_h(t) = 3/(4h) (1 - t^2/h^2)_+ reflected at zero.
  void (*epanechnikov_reflected)(const double* r, std::size_t n, double d, double h, double w,
                                 double* out);
  /// out[k] += w when d <= r[k].
  void (*step_accumulate)(const double* r, std::size_t n, double d, double w, double* out);
  double (*dot)(const double* a, const double* b, std::size_t n);
};

bool supported(Isa isa) noexcept;
std::vector<Isa> available() noexcept;

/// Table for a given instruction set; falls back to Scalar when unsupported.
const KernelTable& table(Isa isa) noexcept;

/// Best supported instruction set, unless PPK_SIMD=scalar|avx2|neon forces one.
Isa active() noexcept;
const KernelTable& active_table() noexcept;

inline void squared_distances(double x0, double y0, std::span<const double> xs,
                              std::span<const double> ys, std::span<double> out) {
  active_table().squared_distances(x0, y0, xs.data(), ys.data(), xs.size(), out.data());
}
inline void epanechnikov_reflected(std::span<const double> r, double d, double h, double w,
                                   std::span<double> out) {
  active_table().epanechnikov_reflected(r.data(), r.size(), d, h, w, out.data());
}
inline void step_accumulate(std::span<const double> r, double d, double w, std::span<double> out) {
  active_table().step_accumulate(r.data(), r.size(), d, w, out.data());
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active_table().dot(a.data(), b.data(), a.size());
}

namespace detail {
extern const KernelTable kScalarTable;
#if defined(PPK_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(PPK_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace ppk::kernels
