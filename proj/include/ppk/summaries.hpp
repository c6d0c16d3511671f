#pragma once

#include <span>
#include <string>
#include <vector>

#include "ppk/errors.hpp"
#include "ppk/geometry.hpp"
#include "ppk/pcf.hpp"

namespace ppk {

/// Set covariance nu(W cap (W + d)) of a holed window.
///
/// Holes are disjoint rectangles inside the outer rectangle, so the
/// indicator of W is 1_R - sum_k 1_{H_k} and the overlap area expands into
/// rectangle intersections; the result is exact.
class SetCovariance {
 public:
  explicit SetCovariance(Window window) : window_(std::move(window)) {}
  double operator()(double dx, double dy) const noexcept;
  const Window& window() const noexcept { return window_; }

 private:
  Window window_;
};

struct TabulatedFunction {
  std::vector<double> r;
  std::vector<double> value;
};

/// lambda-hat = N / nu(observed window). Throws when the observed area is zero.
double estimate_intensity(const PointPattern& pattern);

/// Translation-corrected Ripley K. r_grid must be ascending with maximum at
/// most a quarter of the shortest window side; needs at least two points.
TabulatedFunction estimate_K(const PointPattern& pattern, std::span<const double> r_grid,
                             Diagnostics* diagnostics = nullptr);

/// c * lambda^{-1/2} with c = 0.15.
double default_pcf_bandwidth(double lambda_hat);
/// 0, h/2, h, ... up to a quarter of the shortest window side.
std::vector<double> default_r_grid(const Window& window, double bandwidth);

struct PcfEstimate {
  /// Kernel estimate on the requested grid, before the tail is forced to 1.
  TabulatedFunction raw;
  /// Tabulated g with g == 1 beyond r_max.
  PairCorrelation g;
  double bandwidth = 0.0;
  double r_max = 0.0;
  /// False when |g - 1| never settled below the tail tolerance on the grid.
  bool tail_found = true;
};

inline constexpr double kPcfTailTolerance = 0.05;

/// Epanechnikov kernel estimate of g with translation edge correction and
/// reflection at r = 0:
///   g(r) = nu(W)^2 / (N (N-1)) sum_{i != j} [k_h(r - d_ij) + k_h(r + d_ij)]
///          / (2 pi d_ij nu(W cap W_{x_i - x_j})).
PcfEstimate estimate_pcf(const PointPattern& pattern, std::span<const double> r_grid,
                         double bandwidth, Diagnostics* diagnostics = nullptr);

struct SummaryEstimates {
  double lambda = 0.0;
  TabulatedFunction k;
  PcfEstimate pcf;
  std::string edge_correction = "translation";
};

/// lambda-hat, K-hat and g-hat on the default grid and bandwidth.
SummaryEstimates estimate_summaries(const PointPattern& pattern, Diagnostics* diagnostics = nullptr);

struct CountVariogram {
  std::vector<double> lag;
  std::vector<double> gamma;
  std::vector<std::size_t> pairs;
};

/// Method-of-moments semivariogram of observed cell counts, binned by centre
/// distance in bins of one cell side. The first entry is (0, 0).
CountVariogram count_variogram(const CountField& counts, double max_lag);

}  // namespace ppk
