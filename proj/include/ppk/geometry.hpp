#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ppk {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const noexcept { return x1 - x0; }
  double height() const noexcept { return y1 - y0; }
  double area() const noexcept { return width() * height(); }

  /// Half-open membership [x0, x1) x [y0, y1).
  bool contains_half_open(Point p) const noexcept {
    return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1;
  }
  bool contains_closed(Point p) const noexcept {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  bool contains(const Rect& r) const noexcept {
    return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Area of the intersection of two rectangles (0 when disjoint).
double intersection_area(const Rect& a, const Rect& b) noexcept;

/// Observation window: an outer rectangle with rectangular unobserved holes.
///
/// Holes are pairwise disjoint and lie inside the outer rectangle. A point
/// is observed when it is in the (closed) outer rectangle and in no
/// (half-open) hole.
class Window {
 public:
  Window() = default;
  explicit Window(Rect outer, std::vector<Rect> holes = {});

  const Rect& outer() const noexcept { return outer_; }
  const std::vector<Rect>& holes() const noexcept { return holes_; }

  /// Observed area: outer area minus hole areas.
  double area() const noexcept;
  bool observed(Point p) const noexcept;
  bool in_hole(Point p) const noexcept;

  /// Window translated by (dx, dy).
  Window translated(double dx, double dy) const;

  friend bool operator==(const Window&, const Window&) = default;

 private:
  Rect outer_{0.0, 0.0, 1.0, 1.0};
  std::vector<Rect> holes_;
};

enum class CellMask : std::uint8_t { Observed, Target };

/// Regular tessellation of square cells B_i = x_i + B inside a window.
///
/// Cells are [origin + ix*s, origin + (ix+1)*s) x [..) with linear index
/// i = ix + nx*iy. Only cells fitting entirely inside the outer rectangle
/// are kept; a cell overlapping a hole is a prediction target.
class RegularGrid {
 public:
  RegularGrid(const Window& window, double cell_side);

  const Window& window() const noexcept { return window_; }
  Point origin() const noexcept { return origin_; }
  double cell_side() const noexcept { return side_; }
  double cell_area() const noexcept { return side_ * side_; }
  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * ny_; }

  int ix(std::size_t i) const noexcept { return static_cast<int>(i % nx_); }
  int iy(std::size_t i) const noexcept { return static_cast<int>(i / nx_); }
  std::size_t index(int ix, int iy) const noexcept {
    return static_cast<std::size_t>(iy) * nx_ + static_cast<std::size_t>(ix);
  }

  Point center(std::size_t i) const noexcept;
  Rect cell(std::size_t i) const noexcept;

  CellMask mask(std::size_t i) const noexcept { return mask_[i]; }
  bool observed(std::size_t i) const noexcept { return mask_[i] == CellMask::Observed; }
  bool target(std::size_t i) const noexcept { return mask_[i] == CellMask::Target; }

  /// Linear indices of observed cells, ascending.
  const std::vector<std::size_t>& observed_cells() const noexcept { return observed_; }
  /// Linear indices of target (hole) cells, ascending.
  const std::vector<std::size_t>& target_cells() const noexcept { return targets_; }

  /// Area covered by all retained cells, nu(S) = n * nu(B).
  double tiled_area() const noexcept { return static_cast<double>(size()) * cell_area(); }
  double observed_area() const noexcept {
    return static_cast<double>(observed_.size()) * cell_area();
  }

  /// Cell containing p under the half-open rule, or -1 when p lies outside
  /// the tiled rectangle. Points on the far outer edge of the tiling close
  /// into the last row/column.
  std::ptrdiff_t locate(Point p) const noexcept;

 private:
  Window window_;
  Point origin_;
  double side_ = 0.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<CellMask> mask_;
  std::vector<std::size_t> observed_;
  std::vector<std::size_t> targets_;
};

/// Grid-building entry point; throws ErrorKind::InvalidMesh when no cell fits.
RegularGrid build_grid(const Window& window, double cell_side);

struct PointPattern {
  std::vector<Point> points;
  Window window;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  /// Throws InvalidArgument if any point is outside the observed window.
  void validate() const;
  PointPattern translated(double dx, double dy) const;
};

/// Cell counts Z(x_i) = Phi(B_i). Counts are stored for every cell; only
/// observed cells carry usable values.
struct CountField {
  RegularGrid grid;
  std::vector<std::int64_t> counts;

  /// Counts of observed cells in the order of grid.observed_cells().
  std::vector<double> observed_counts() const;
  std::int64_t observed_total() const;
};

CountField cell_counts(const PointPattern& pattern, const RegularGrid& grid);

/// Raw per-cell counts (all cells) without the CountField wrapper.
std::vector<std::int64_t> count_points(std::span<const Point> points, const RegularGrid& grid);

}  // namespace ppk
