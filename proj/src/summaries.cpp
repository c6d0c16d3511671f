#include "ppk/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ppk/kernels.hpp"

namespace ppk {

namespace {

Rect shifted(const Rect& r, double dx, double dy) {
  return {r.x0 + dx, r.y0 + dy, r.x1 + dx, r.y1 + dy};
}

void check_r_grid(const Window& window, std::span<const double> r_grid, const char* who) {
  if (r_grid.empty()) fail(ErrorKind::InvalidArgument, std::string(who) + ": empty r grid");
  for (std::size_t k = 1; k < r_grid.size(); ++k) {
    if (!(r_grid[k] > r_grid[k - 1])) {
      fail(ErrorKind::InvalidArgument, std::string(who) + ": r grid must be strictly ascending");
    }
  }
  if (r_grid.front() < 0.0) fail(ErrorKind::InvalidArgument, std::string(who) + ": negative r");
  const double limit = 0.25 * std::min(window.outer().width(), window.outer().height());
  if (r_grid.back() > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << who << ": r grid maximum " << r_grid.back()
       << " exceeds a quarter of the shortest window side (" << limit << ")";
    fail(ErrorKind::InvalidArgument, os.str());
  }
}

// Calls fn(distance, translation weight) once per unordered pair closer than
// r_limit, visiting pairs in fixed (i, j > i) order.
template <class Fn>
void for_each_close_pair(const PointPattern& pattern, double r_limit, Fn&& fn) {
  const std::size_t n = pattern.size();
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = pattern.points[i].x;
    ys[i] = pattern.points[i].y;
  }
  const SetCovariance overlap(pattern.window);
  const double limit2 = r_limit * r_limit;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t rest = n - i - 1;
    kernels::squared_distances(xs[i], ys[i], std::span(xs).subspan(i + 1, rest),
                               std::span(ys).subspan(i + 1, rest), std::span(d2).first(rest));
    for (std::size_t k = 0; k < rest; ++k) {
      if (d2[k] > limit2) continue;
      const std::size_t j = i + 1 + k;
      const double area = overlap(xs[j] - xs[i], ys[j] - ys[i]);
      if (area <= 0.0) continue;
      fn(std::sqrt(d2[k]), 1.0 / area);
    }
  }
}

}  // namespace

double SetCovariance::operator()(double dx, double dy) const noexcept {
  const Rect& outer = window_.outer();
  const Rect outer_d = shifted(outer, dx, dy);
  double area = intersection_area(outer, outer_d);
  for (const Rect& h : window_.holes()) {
    area -= intersection_area(outer, shifted(h, dx, dy));
    area -= intersection_area(h, outer_d);
    for (const Rect& l : window_.holes()) area += intersection_area(h, shifted(l, dx, dy));
  }
  return std::max(0.0, area);
}

double estimate_intensity(const PointPattern& pattern) {
  const double area = pattern.window.area();
  if (!(area > 0.0)) fail(ErrorKind::InvalidArgument, "estimate_intensity: zero observed area");
  std::size_t observed = 0;
  for (const Point& p : pattern.points) observed += pattern.window.observed(p) ? 1 : 0;
  return static_cast<double>(observed) / area;
}

TabulatedFunction estimate_K(const PointPattern& pattern, std::span<const double> r_grid,
                             Diagnostics* diagnostics) {
  check_r_grid(pattern.window, r_grid, "estimate_K");
  const std::size_t n = pattern.size();
  if (n < 2) fail(ErrorKind::InvalidArgument, "estimate_K: needs at least two points");
  TabulatedFunction out{{r_grid.begin(), r_grid.end()}, std::vector<double>(r_grid.size(), 0.0)};
  for_each_close_pair(pattern, r_grid.back(), [&](double d, double w) {
    kernels::step_accumulate(r_grid, d, 2.0 * w, out.value);
  });
  const double area = pattern.window.area();
  const double scale = area * area / (static_cast<double>(n) * static_cast<double>(n - 1));
  for (double& v : out.value) v *= scale;
  if (diagnostics) {
    for (std::size_t k = 1; k < out.value.size(); ++k) {
      if (out.value[k] < out.value[k - 1]) {
        diagnostics->warn("estimate_K: K-hat decreases between r=" + std::to_string(out.r[k - 1]) +
                          " and r=" + std::to_string(out.r[k]));
        break;
      }
    }
  }
  return out;
}

double default_pcf_bandwidth(double lambda_hat) {
  if (!(lambda_hat > 0.0)) fail(ErrorKind::InvalidArgument, "bandwidth: intensity must be positive");
  return 0.15 / std::sqrt(lambda_hat);
}

std::vector<double> default_r_grid(const Window& window, double bandwidth) {
  const double limit = 0.25 * std::min(window.outer().width(), window.outer().height());
  const double step = 0.5 * bandwidth;
  std::vector<double> r;
  for (int k = 0;; ++k) {
    const double v = k * step;
    if (v > limit * (1.0 + 1e-12)) break;
    r.push_back(v);
  }
  return r;
}

PcfEstimate estimate_pcf(const PointPattern& pattern, std::span<const double> r_grid,
                         double bandwidth, Diagnostics* diagnostics) {
  if (!(bandwidth > 0.0)) fail(ErrorKind::InvalidArgument, "estimate_pcf: bandwidth must be positive");
  check_r_grid(pattern.window, r_grid, "estimate_pcf");
  const std::size_t n = pattern.size();
  if (n < 2) fail(ErrorKind::InvalidArgument, "estimate_pcf: needs at least two points");

  PcfEstimate out;
  out.bandwidth = bandwidth;
  out.raw.r.assign(r_grid.begin(), r_grid.end());
  out.raw.value.assign(r_grid.size(), 0.0);
  for_each_close_pair(pattern, r_grid.back() + bandwidth, [&](double d, double w) {
    if (d <= 0.0) return;  // coincident points carry no distance information
    kernels::epanechnikov_reflected(r_grid, d, bandwidth, 2.0 * w / (2.0 * std::numbers::pi * d),
                                    out.raw.value);
  });
  const double area = pattern.window.area();
  const double scale = area * area / (static_cast<double>(n) * static_cast<double>(n - 1));
  for (double& v : out.raw.value) v = std::max(0.0, v * scale);

  // Tail: first knot from which |g - 1| stays below the tolerance.
  std::size_t tail = out.raw.value.size();
  while (tail > 0 && std::abs(out.raw.value[tail - 1] - 1.0) < kPcfTailTolerance) --tail;
  if (tail == out.raw.value.size()) {
    out.tail_found = false;
    tail = out.raw.value.size() - 1;
    if (diagnostics) {
      diagnostics->warn("estimate_pcf: |g-1| did not settle below " +
                        std::to_string(kPcfTailTolerance) + " on the r grid; tail forced at r=" +
                        std::to_string(out.raw.r.back()));
    }
  }
  std::vector<double> r(out.raw.r.begin(), out.raw.r.begin() + static_cast<std::ptrdiff_t>(tail) + 1);
  std::vector<double> g(out.raw.value.begin(),
                        out.raw.value.begin() + static_cast<std::ptrdiff_t>(tail) + 1);
  g.back() = 1.0;
  out.r_max = r.back();
  out.g = PairCorrelation::tabulated(std::move(r), std::move(g));
  return out;
}

SummaryEstimates estimate_summaries(const PointPattern& pattern, Diagnostics* diagnostics) {
  SummaryEstimates est;
  est.lambda = estimate_intensity(pattern);
  const double h = default_pcf_bandwidth(est.lambda);
  const std::vector<double> grid = default_r_grid(pattern.window, h);
  est.k = estimate_K(pattern, grid, diagnostics);
  est.pcf = estimate_pcf(pattern, grid, h, diagnostics);
  return est;
}

CountVariogram count_variogram(const CountField& field, double max_lag) {
  const RegularGrid& grid = field.grid;
  const auto& cells = grid.observed_cells();
  if (cells.size() < 2) fail(ErrorKind::InvalidArgument, "count_variogram: needs two observed cells");
  const double s = grid.cell_side();
  const auto bins = static_cast<std::size_t>(std::floor(max_lag / s + 0.5)) + 1;
  std::vector<double> sum_sq(bins, 0.0);
  std::vector<double> sum_d(bins, 0.0);
  std::vector<std::size_t> pairs(bins, 0);
  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      const double dx = grid.ix(cells[b]) - grid.ix(cells[a]);
      const double dy = grid.iy(cells[b]) - grid.iy(cells[a]);
      const double d = std::hypot(dx, dy) * s;
      if (d > max_lag) continue;
      const auto k = static_cast<std::size_t>(std::floor(d / s + 0.5));
      if (k == 0 || k >= bins) continue;
      const double diff = static_cast<double>(field.counts[cells[a]] - field.counts[cells[b]]);
      sum_sq[k] += diff * diff;
      sum_d[k] += d;
      ++pairs[k];
    }
  }
  CountVariogram out;
  out.lag.push_back(0.0);
  out.gamma.push_back(0.0);
  out.pairs.push_back(cells.size());
  for (std::size_t k = 1; k < bins; ++k) {
    if (pairs[k] == 0) continue;
    out.lag.push_back(sum_d[k] / static_cast<double>(pairs[k]));
    out.gamma.push_back(0.5 * sum_sq[k] / static_cast<double>(pairs[k]));
    out.pairs.push_back(pairs[k]);
  }
  return out;
}

}  // namespace ppk
