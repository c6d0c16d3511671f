#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppk/geometry.hpp"

namespace ppk {

struct ImseValue {
  double total = 0.0;
  /// sqrt(nu(B)) / 12 * Gint
  double bias_term = 0.0;
  /// lambda nu(S) / nu(B)
  double variance_term = 0.0;
};

/// Two-term IMSE approximation for cell area nu(B); Gint may be zero.
ImseValue imse(double cell_area, double lambda, double gradient_energy, double area_s);

struct MeshOptimum {
  /// (24 lambda nu(S) / Gint)^{2/3}, unclamped; +inf for a flat intensity.
  double raw = 0.0;
  /// raw clamped to [lower_bound, upper_bound].
  double value = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  bool flat = false;
  bool clamped_low = false;
  bool clamped_high = false;
};

/// Lower bound keeps lambda nu(B) >= 4 expected points per cell, upper bound
/// keeps at least nine cells. Gint = 0 returns the upper bound with `flat` set.
MeshOptimum optimal_mesh(double lambda, double area_s, double gradient_energy);

/// Intensity sampled at pixel centres of an nx x ny raster; only observed
/// pixels enter the gradient energy.
struct IntensityRaster {
  Point origin;
  double dx = 0.0;
  double dy = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> observed;

  std::size_t index(int ix, int iy) const noexcept {
    return static_cast<std::size_t>(iy) * nx + static_cast<std::size_t>(ix);
  }
  Point center(int ix, int iy) const noexcept {
    return {origin.x + (ix + 0.5) * dx, origin.y + (iy + 0.5) * dy};
  }
};

/// Raster over the outer rectangle of `window` with every pixel marked by
/// whether its centre is observed; values zero.
IntensityRaster make_raster(const Window& window, int nx, int ny);

/// Gint = sum over observed pixels of |grad|^2 * pixel area, central
/// differences in the interior, one-sided next to holes and the border.
double gradient_energy(const IntensityRaster& raster);

/// Edge-corrected Gaussian kernel estimate of the intensity on a raster.
IntensityRaster pilot_intensity(const PointPattern& pattern, double bandwidth, int nx, int ny);

struct ImseSample {
  double cell_area = 0.0;
  ImseValue value;
};

struct MeshOptions {
  int raster = 64;
  /// Pilot bandwidth = factor * lambda-hat^{-1/2}.
  double bandwidth_factor = 2.0;
  int curve_points = 64;
};

struct MeshReport {
  double lambda = 0.0;
  double area_s = 0.0;
  double bandwidth = 0.0;
  double gradient_energy = 0.0;
  MeshOptimum optimum;
  std::vector<ImseSample> curve;
  std::string note;
};

MeshReport mesh_recommendation(const PointPattern& pattern, const MeshOptions& options = {});

}  // namespace ppk
