#include "ppk/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ppk/errors.hpp"
#include "ppk/parallel.hpp"
#include "ppk/summaries.hpp"

namespace ppk {

ImseValue imse(double cell_area, double lambda, double gradient_energy, double area_s) {
  if (!(cell_area > 0.0) || !(lambda > 0.0) || !(area_s > 0.0) || !(gradient_energy >= 0.0)) {
    fail(ErrorKind::InvalidArgument, "imse: cell area, lambda and nu(S) must be positive, Gint >= 0");
  }
  ImseValue v;
  v.bias_term = std::sqrt(cell_area) / 12.0 * gradient_energy;
  v.variance_term = lambda * area_s / cell_area;
  v.total = v.bias_term + v.variance_term;
  return v;
}

MeshOptimum optimal_mesh(double lambda, double area_s, double gradient_energy) {
  if (!(lambda > 0.0) || !(area_s > 0.0) || !(gradient_energy >= 0.0)) {
    fail(ErrorKind::InvalidArgument, "optimal_mesh: lambda and nu(S) must be positive, Gint >= 0");
  }
  MeshOptimum out;
  out.lower_bound = 4.0 / lambda;
  out.upper_bound = area_s / 9.0;
  if (gradient_energy == 0.0) {
    out.flat = true;
    out.raw = std::numeric_limits<double>::infinity();
    out.value = out.upper_bound;
    out.clamped_high = true;
    return out;
  }
  out.raw = std::pow(24.0 * lambda * area_s / gradient_energy, 2.0 / 3.0);
  out.value = out.raw;
  if (out.value < out.lower_bound) {
    out.value = out.lower_bound;
    out.clamped_low = true;
  }
  if (out.value > out.upper_bound) {
    out.value = out.upper_bound;
    out.clamped_high = true;
  }
  return out;
}

IntensityRaster make_raster(const Window& window, int nx, int ny) {
  if (nx < 1 || ny < 1) fail(ErrorKind::InvalidArgument, "raster: dimensions must be positive");
  IntensityRaster r;
  r.origin = {window.outer().x0, window.outer().y0};
  r.nx = nx;
  r.ny = ny;
  r.dx = window.outer().width() / nx;
  r.dy = window.outer().height() / ny;
  r.values.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  r.observed.assign(r.values.size(), 0);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) r.observed[r.index(ix, iy)] = window.observed(r.center(ix, iy)) ? 1 : 0;
  }
  return r;
}

double gradient_energy(const IntensityRaster& raster) {
  if (raster.nx < 32 || raster.ny < 32) {
    fail(ErrorKind::InvalidArgument, "gradient_energy: raster must be at least 32 x 32");
  }
  if (raster.values.size() != static_cast<std::size_t>(raster.nx) * raster.ny ||
      raster.observed.size() != raster.values.size()) {
    fail(ErrorKind::InvalidArgument, "gradient_energy: raster arrays have the wrong size");
  }
  for (double v : raster.values) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "gradient_energy: non-finite raster value");
  }
  auto usable = [&raster](int ix, int iy) {
    return ix >= 0 && iy >= 0 && ix < raster.nx && iy < raster.ny && raster.observed[raster.index(ix, iy)];
  };
  // Derivative along one axis from whichever neighbours are observed.
  auto derivative = [&](int ix, int iy, int sx, int sy, double step) {
    const double here = raster.values[raster.index(ix, iy)];
    const bool fwd = usable(ix + sx, iy + sy);
    const bool back = usable(ix - sx, iy - sy);
    if (fwd && back) {
      return (raster.values[raster.index(ix + sx, iy + sy)] -
              raster.values[raster.index(ix - sx, iy - sy)]) / (2.0 * step);
    }
    if (fwd) return (raster.values[raster.index(ix + sx, iy + sy)] - here) / step;
    if (back) return (here - raster.values[raster.index(ix - sx, iy - sy)]) / step;
    return 0.0;
  };
  double total = 0.0;
  for (int iy = 0; iy < raster.ny; ++iy) {
    double row = 0.0;
    for (int ix = 0; ix < raster.nx; ++ix) {
      if (!usable(ix, iy)) continue;
      const double gx = derivative(ix, iy, 1, 0, raster.dx);
      const double gy = derivative(ix, iy, 0, 1, raster.dy);
      row += gx * gx + gy * gy;
    }
    total += row;
  }
  return total * raster.dx * raster.dy;
}

namespace {

// Mass of the isotropic Gaussian kernel centred at p inside rectangle r.
double gaussian_mass(Point p, const Rect& r, double h) {
  const double s = h * std::numbers::sqrt2;
  const double fx = 0.5 * (std::erf((r.x1 - p.x) / s) - std::erf((r.x0 - p.x) / s));
  const double fy = 0.5 * (std::erf((r.y1 - p.y) / s) - std::erf((r.y0 - p.y) / s));
  return fx * fy;
}

}  // namespace

IntensityRaster pilot_intensity(const PointPattern& pattern, double bandwidth, int nx, int ny) {
  if (!(bandwidth > 0.0)) fail(ErrorKind::InvalidArgument, "pilot_intensity: bandwidth must be positive");
  IntensityRaster r = make_raster(pattern.window, nx, ny);
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const double norm = 1.0 / (2.0 * std::numbers::pi * bandwidth * bandwidth);
  parallel_for(static_cast<std::size_t>(ny), [&](std::size_t row) {
    const int iy = static_cast<int>(row);
    for (int ix = 0; ix < nx; ++ix) {
      const Point c = r.center(ix, iy);
      double density = 0.0;
      for (const Point& p : pattern.points) {
        const double dx = p.x - c.x;
        const double dy = p.y - c.y;
        density += std::exp(-(dx * dx + dy * dy) * inv2h2);
      }
      double mass = gaussian_mass(c, pattern.window.outer(), bandwidth);
      for (const Rect& hole : pattern.window.holes()) mass -= gaussian_mass(c, hole, bandwidth);
      r.values[r.index(ix, iy)] = mass > 1e-12 ? norm * density / mass : 0.0;
    }
  });
  return r;
}

MeshReport mesh_recommendation(const PointPattern& pattern, const MeshOptions& options) {
  MeshReport rep;
  rep.lambda = estimate_intensity(pattern);
  rep.area_s = pattern.window.area();
  if (!(rep.lambda > 0.0)) {
    fail(ErrorKind::InvalidArgument, "mesh_recommendation: empty pattern has no intensity to resolve");
  }
  rep.bandwidth = options.bandwidth_factor / std::sqrt(rep.lambda);
  const IntensityRaster pilot = pilot_intensity(pattern, rep.bandwidth, options.raster, options.raster);
  rep.gradient_energy = gradient_energy(pilot);
  rep.optimum = optimal_mesh(rep.lambda, rep.area_s, rep.gradient_energy);

  const double lo = rep.optimum.lower_bound / 4.0;
  const double hi = rep.area_s;
  const int n = std::max(2, options.curve_points);
  for (int k = 0; k < n; ++k) {
    const double a = lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
    rep.curve.push_back({a, imse(a, rep.lambda, rep.gradient_energy, rep.area_s)});
  }
  rep.note =
      "The optimum shrinks as the gradient energy of the pilot intensity grows: clustered "
      "patterns call for smaller cells, regular patterns for larger ones.";
  return rep;
}

}  // namespace ppk
