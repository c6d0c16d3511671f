#include "ppk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ppk/errors.hpp"

namespace ppk {

double intersection_area(const Rect& a, const Rect& b) noexcept {
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

Window::Window(Rect outer, std::vector<Rect> holes) : outer_(outer), holes_(std::move(holes)) {
  if (!(outer_.width() > 0.0 && outer_.height() > 0.0)) {
    fail(ErrorKind::InvalidArgument, "window: outer rectangle must have positive width and height");
  }
  for (std::size_t k = 0; k < holes_.size(); ++k) {
    const Rect& h = holes_[k];
    if (!(h.width() > 0.0 && h.height() > 0.0)) {
      fail(ErrorKind::InvalidArgument, "window: hole " + std::to_string(k) + " is degenerate");
    }
    if (!outer_.contains(h)) {
      fail(ErrorKind::InvalidArgument,
           "window: hole " + std::to_string(k) + " is not contained in the outer rectangle");
    }
    for (std::size_t l = 0; l < k; ++l) {
      if (intersection_area(h, holes_[l]) > 0.0) {
        fail(ErrorKind::InvalidArgument, "window: holes " + std::to_string(l) + " and " +
                                             std::to_string(k) + " overlap");
      }
    }
  }
  if (!(area() > 0.0)) {
    fail(ErrorKind::InvalidArgument, "window: holes cover the whole outer rectangle");
  }
}

double Window::area() const noexcept {
  double a = outer_.area();
  for (const Rect& h : holes_) a -= h.area();
  return a;
}

bool Window::in_hole(Point p) const noexcept {
  return std::any_of(holes_.begin(), holes_.end(),
                     [p](const Rect& h) { return h.contains_half_open(p); });
}

bool Window::observed(Point p) const noexcept { return outer_.contains_closed(p) && !in_hole(p); }

Window Window::translated(double dx, double dy) const {
  auto shift = [dx, dy](Rect r) { return Rect{r.x0 + dx, r.y0 + dy, r.x1 + dx, r.y1 + dy}; };
  std::vector<Rect> holes;
  holes.reserve(holes_.size());
  for (const Rect& h : holes_) holes.push_back(shift(h));
  return Window(shift(outer_), std::move(holes));
}

namespace {

// Number of whole cells of side s fitting in a length; tolerant to the
// rounding of exact multiples (0.3 / 0.1 evaluates below 3).
int cells_fitting(double length, double side) {
  return static_cast<int>(std::floor(length / side + 1e-9));
}

}  // namespace

RegularGrid::RegularGrid(const Window& window, double cell_side)
    : window_(window), origin_{window.outer().x0, window.outer().y0}, side_(cell_side) {
  if (!(cell_side > 0.0) || !std::isfinite(cell_side)) {
    fail(ErrorKind::InvalidMesh, "grid: cell side must be positive and finite");
  }
  nx_ = cells_fitting(window.outer().width(), cell_side);
  ny_ = cells_fitting(window.outer().height(), cell_side);
  if (nx_ < 1 || ny_ < 1) {
    std::ostringstream os;
    os << "grid: cell side " << cell_side << " exceeds the window dimensions ("
       << window.outer().width() << " x " << window.outer().height() << ")";
    fail(ErrorKind::InvalidMesh, os.str());
  }
  mask_.resize(size());
  // Overlaps thinner than rounding noise along a shared edge do not count.
  const double slack = 1e-9 * cell_area();
  for (std::size_t i = 0; i < size(); ++i) {
    const Rect c = cell(i);
    const bool hits_hole = std::any_of(window_.holes().begin(), window_.holes().end(),
                                       [&](const Rect& h) { return intersection_area(c, h) > slack; });
    mask_[i] = hits_hole ? CellMask::Target : CellMask::Observed;
    (hits_hole ? targets_ : observed_).push_back(i);
  }
}

Point RegularGrid::center(std::size_t i) const noexcept {
  return {origin_.x + (ix(i) + 0.5) * side_, origin_.y + (iy(i) + 0.5) * side_};
}

Rect RegularGrid::cell(std::size_t i) const noexcept {
  const double x0 = origin_.x + ix(i) * side_;
  const double y0 = origin_.y + iy(i) * side_;
  return {x0, y0, x0 + side_, y0 + side_};
}

std::ptrdiff_t RegularGrid::locate(Point p) const noexcept {
  const double fx = (p.x - origin_.x) / side_;
  const double fy = (p.y - origin_.y) / side_;
  if (!(fx >= 0.0 && fy >= 0.0)) return -1;
  auto to_index = [](double f, int n) -> int {
    int k = static_cast<int>(std::floor(f));
    if (k == n && f == static_cast<double>(n)) k = n - 1;  // far edge closes the tiling
    return k;
  };
  const int kx = to_index(fx, nx_);
  const int ky = to_index(fy, ny_);
  if (kx >= nx_ || ky >= ny_) return -1;
  return static_cast<std::ptrdiff_t>(index(kx, ky));
}

RegularGrid build_grid(const Window& window, double cell_side) { return RegularGrid(window, cell_side); }

void PointPattern::validate() const {
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!window.observed(points[k])) {
      std::ostringstream os;
      os << "pattern: point " << k << " (" << points[k].x << ", " << points[k].y
         << ") lies outside the observed window";
      fail(ErrorKind::InvalidArgument, os.str());
    }
  }
}

PointPattern PointPattern::translated(double dx, double dy) const {
  PointPattern out{{}, window.translated(dx, dy)};
  out.points.reserve(points.size());
  for (const Point& p : points) out.points.push_back({p.x + dx, p.y + dy});
  return out;
}

std::vector<double> CountField::observed_counts() const {
  std::vector<double> out;
  out.reserve(grid.observed_cells().size());
  for (std::size_t i : grid.observed_cells()) out.push_back(static_cast<double>(counts[i]));
  return out;
}

std::int64_t CountField::observed_total() const {
  std::int64_t total = 0;
  for (std::size_t i : grid.observed_cells()) total += counts[i];
  return total;
}

std::vector<std::int64_t> count_points(std::span<const Point> points, const RegularGrid& grid) {
  std::vector<std::int64_t> counts(grid.size(), 0);
  for (const Point& p : points) {
    const std::ptrdiff_t i = grid.locate(p);
    if (i >= 0) ++counts[static_cast<std::size_t>(i)];
  }
  return counts;
}

CountField cell_counts(const PointPattern& pattern, const RegularGrid& grid) {
  if (!(pattern.window == grid.window())) {
    fail(ErrorKind::InvalidArgument, "cell_counts: pattern window differs from grid window");
  }
  return CountField{grid, count_points(pattern.points, grid)};
}

}  // namespace ppk
