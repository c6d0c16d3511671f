#include <doctest.h>

#include <cmath>
#include <vector>

#include "ppk/kernels.hpp"
#include "ppk/rng.hpp"

using namespace ppk::kernels;

namespace {

std::vector<double> random_vector(ppk::Philox& g, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = g.uniform(lo, hi);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(std::abs(a[k] - b[k]) <= tol * std::max(1.0, std::abs(a[k])));
  }
}

}  // namespace

TEST_CASE("scalar table is always available and first") {
  const auto isas = available();
  REQUIRE_FALSE(isas.empty());
  CHECK(isas.front() == Isa::Scalar);
  CHECK(supported(active()));
}

TEST_CASE("every available instruction set agrees with the scalar reference") {
  const KernelTable& ref = table(Isa::Scalar);
  ppk::Philox g(7, 0);
  for (Isa isa : available()) {
    CAPTURE(name(isa));
    const KernelTable& t = table(isa);
    // Lengths around the vector widths exercise the remainder loops.
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 257u}) {
      CAPTURE(n);
      const auto xs = random_vector(g, n, -1.0, 2.0);
      const auto ys = random_vector(g, n, -1.0, 2.0);
      std::vector<double> a(n), b(n);
      ref.squared_distances(0.3, -0.2, xs.data(), ys.data(), n, a.data());
      t.squared_distances(0.3, -0.2, xs.data(), ys.data(), n, b.data());
      check_close(a, b, 1e-15);

      std::vector<double> r(n);
      for (std::size_t k = 0; k < n; ++k) r[k] = 0.002 * static_cast<double>(k);
      for (double d : {0.0, 0.001, 0.013, 0.05, 0.4}) {
        std::vector<double> ea(n, 0.5), eb(n, 0.5);
        ref.epanechnikov_reflected(r.data(), n, d, 0.01, 1.7, ea.data());
        t.epanechnikov_reflected(r.data(), n, d, 0.01, 1.7, eb.data());
        check_close(ea, eb, 1e-13);

        std::vector<double> sa(n, 0.0), sb(n, 0.0);
        ref.step_accumulate(r.data(), n, d, 2.5, sa.data());
        t.step_accumulate(r.data(), n, d, 2.5, sb.data());
        CHECK(sa == sb);
      }
      CHECK(t.dot(xs.data(), ys.data(), n) ==
            doctest::Approx(ref.dot(xs.data(), ys.data(), n)).epsilon(1e-13));
    }
  }
}

TEST_CASE("scalar kernels against hand values") {
  const KernelTable& t = table(Isa::Scalar);
  const std::vector<double> r{0.0, 0.005, 0.01, 0.02};
  std::vector<double> out(r.size(), 0.0);
  // d = 0.005, h = 0.01: at r = 0 both the kernel and its reflection sit at 0.005.
  t.epanechnikov_reflected(r.data(), r.size(), 0.005, 0.01, 1.0, out.data());
  CHECK(out[0] == doctest::Approx(2 * 75.0 * 0.75));
  CHECK(out[1] == doctest::Approx(75.0 + 75.0 * 0.0));
  CHECK(out[2] == doctest::Approx(75.0 * 0.75));
  CHECK(out[3] == 0.0);

  std::vector<double> s(r.size(), 0.0);
  t.step_accumulate(r.data(), r.size(), 0.01, 1.0, s.data());
  CHECK(s == std::vector<double>{0.0, 0.0, 1.0, 1.0});
}
