#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "ppk/errors.hpp"
#include "ppk/mesh.hpp"
#include "ppk/procsim.hpp"

using namespace ppk;

namespace {

const Rect kUnit{0.0, 0.0, 1.0, 1.0};

template <class F>
IntensityRaster fill(int n, F f) {
  IntensityRaster r = make_raster(Window(kUnit), n, n);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const Point c = r.center(ix, iy);
      r.values[r.index(ix, iy)] = f(c.x, c.y);
    }
  }
  return r;
}

}  // namespace

TEST_CASE("IMSE terms") {
  const ImseValue v = imse(0.04, 100.0, 2400.0, 1.0);
  CHECK(v.bias_term == doctest::Approx(0.2 / 12.0 * 2400.0));
  CHECK(v.variance_term == doctest::Approx(100.0 / 0.04));
  CHECK(v.total == doctest::Approx(v.bias_term + v.variance_term));

  // Without gradient energy the curve only falls as cells grow.
  double previous = std::numeric_limits<double>::infinity();
  for (double a = 1e-4; a <= 1.0; a *= 1.5) {
    const double t = imse(a, 100.0, 0.0, 1.0).total;
    CHECK(t < previous);
    previous = t;
  }
  CHECK_THROWS_AS(imse(0.0, 100.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(imse(0.1, 100.0, -1.0, 1.0), Error);
}

TEST_CASE("optimal cell area") {
  SUBCASE("raw optimum above the nine-cell cap") {
    const MeshOptimum m = optimal_mesh(100.0, 1.0, 2400.0);
    CHECK(m.raw == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.value == doctest::Approx(1.0 / 9.0));
    CHECK(m.clamped_high);
    CHECK_FALSE(m.clamped_low);
    CHECK(m.lower_bound == doctest::Approx(0.04));
  }
  SUBCASE("flat intensity") {
    const MeshOptimum m = optimal_mesh(100.0, 1.0, 0.0);
    CHECK(m.flat);
    CHECK(std::isinf(m.raw));
    CHECK(m.value == m.upper_bound);
  }
  SUBCASE("interior optimum agrees with a numeric minimizer") {
    const double lambda = 1000.0, gint = 1e6;
    const MeshOptimum m = optimal_mesh(lambda, 1.0, gint);
    CHECK_FALSE(m.clamped_low);
    CHECK_FALSE(m.clamped_high);
    CHECK(m.value == m.raw);
    double best = 0.0, best_value = std::numeric_limits<double>::infinity();
    const int points = 4000;
    for (int k = 0; k < points; ++k) {
      const double a = std::pow(10.0, -4.0 + 4.0 * k / (points - 1));
      const double t = imse(a, lambda, gint, 1.0).total;
      if (t < best_value) {
        best_value = t;
        best = a;
      }
    }
    CHECK(std::abs(std::log(best) - std::log(m.raw)) <= 4.0 * std::log(10.0) / (points - 1));
  }
}

TEST_CASE("gradient energy") {
  CHECK(gradient_energy(fill(64, [](double, double) { return 50.0; })) == 0.0);

  const IntensityRaster ramp = fill(64, [](double x, double) { return 20.0 + 30.0 * x; });
  CHECK(gradient_energy(ramp) == doctest::Approx(900.0).epsilon(1e-6));

  // 50 sin(2 pi x) sin(2 pi y): Gint = 2 pi^2 2500 = 49348.0220054468.
  const IntensityRaster wave = fill(256, [](double x, double y) {
    return 100.0 + 50.0 * std::sin(2.0 * std::numbers::pi * x) * std::sin(2.0 * std::numbers::pi * y);
  });
  CHECK(gradient_energy(wave) == doctest::Approx(49348.0220054468).epsilon(0.01));

  SUBCASE("holes only remove their pixels") {
    IntensityRaster r = make_raster(Window(kUnit, {{0.25, 0.25, 0.5, 0.5}}), 64, 64);
    for (int iy = 0; iy < 64; ++iy) {
      for (int ix = 0; ix < 64; ++ix) r.values[r.index(ix, iy)] = 20.0 + 30.0 * r.center(ix, iy).x;
    }
    CHECK(gradient_energy(r) == doctest::Approx(900.0 * (1.0 - 0.0625)).epsilon(1e-6));
  }
  SUBCASE("invalid rasters") {
    CHECK_THROWS_AS(gradient_energy(fill(16, [](double, double) { return 1.0; })), Error);
    IntensityRaster bad = fill(64, [](double, double) { return 1.0; });
    bad.values[100] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(gradient_energy(bad), Error);
  }
}

TEST_CASE("pilot intensity and recommendation") {
  const Window w(kUnit, {{0.4, 0.4, 0.7, 0.7}});
  const PointPattern poisson = simulate({PoissonSpec{400.0}}, w, 91);
  const IntensityRaster pilot = pilot_intensity(poisson, 0.1, 64, 64);
  double sum = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < pilot.values.size(); ++k) {
    if (pilot.observed[k]) {
      sum += pilot.values[k];
      ++n;
    }
  }
  // Edge correction keeps the pilot near the true level, also next to the hole.
  CHECK(sum / n == doctest::Approx(400.0).epsilon(0.1));

  const MeshReport rep = mesh_recommendation(poisson);
  CHECK(rep.area_s == doctest::Approx(0.91));
  CHECK(rep.optimum.value >= rep.optimum.lower_bound);
  CHECK(rep.optimum.value <= rep.optimum.upper_bound);
  CHECK(rep.curve.size() == 64);
  for (std::size_t k = 1; k < rep.curve.size(); ++k) CHECK(rep.curve[k].cell_area > rep.curve[k - 1].cell_area);

  CHECK_THROWS_AS(mesh_recommendation(PointPattern{{}, w}), Error);
}
