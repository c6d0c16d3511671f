#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ppk/geometry.hpp"
#include "ppk/pcf.hpp"
#include "ppk/rng.hpp"

namespace ppk {

struct PoissonSpec {
  double lambda = 100.0;
};

/// Thomas cluster process: Poisson(kappa) parents, Poisson(mu) offspring
/// per parent displaced by isotropic N(0, sigma^2).
struct ThomasSpec {
  double kappa = 25.0;
  double mu = 4.0;
  double sigma = 0.02;
};

/// Matern type II hard-core process obtained by dependent thinning.
struct MaternIISpec {
  double lambda_basic = 200.0;
  double radius = 0.05;
};

/// Cox process with intensity max(lambda + Y, 0), Y a centred Gaussian field
/// with covariance sigma_y^2 exp(-h / range), realized on a square raster of
/// side raster_side.
struct CoxSpec {
  double lambda = 100.0;
  double sigma_y = 30.0;
  double range = 0.2;
  double raster_side = 0.0125;
};

struct ProcessSpec {
  std::variant<PoissonSpec, ThomasSpec, MaternIISpec, CoxSpec> kind;

  /// First-order intensity (for Cox, of the untruncated field).
  double intensity() const;
  std::string describe() const;
  /// Throws InvalidArgument on non-positive parameters or a hard-core
  /// radius not below the smallest window dimension.
  void validate(const Window& window) const;
};

struct SimOptions {
  /// Refuse to simulate when the expected number of generated points exceeds this.
  double max_expected_points = 5e6;
  /// Parent region dilation for Thomas, in units of sigma.
  double thomas_margin_sigmas = 4.0;
};

/// Stationary Gaussian field on a regular raster by circulant embedding.
class GaussianFieldSampler {
 public:
  /// cov(h) is the isotropic covariance; pixel centres are spaced by `pixel`.
  GaussianFieldSampler(int nx, int ny, double pixel, const std::function<double(double)>& cov);

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  int embedding_nx() const noexcept { return mx_; }
  int embedding_ny() const noexcept { return my_; }
  /// Sum of negative circulant eigenvalues clipped to zero, relative to the sum of all.
  double clipped_fraction() const noexcept { return clipped_fraction_; }

  /// One realization, row-major (iy * nx + ix).
  std::vector<double> sample(Philox& rng) const;

 private:
  struct Plan;

  int nx_;
  int ny_;
  int mx_ = 0;
  int my_ = 0;
  std::vector<double> sqrt_eig_;
  double clipped_fraction_ = 0.0;
  std::shared_ptr<Plan> plan_;
};

/// Piecewise-constant driving intensity Lambda on a raster anchored at the
/// window's lower-left corner.
struct DrivingField {
  Point origin;
  double pixel = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<double> intensity;
  /// Pixels where lambda + Y < 0 was truncated to zero.
  std::size_t truncated_pixels = 0;

  double max() const;
  double value_at(Point p) const;
  /// Area-weighted mean of Lambda over r.
  double average_over(const Rect& r) const;
  Point pixel_center(std::size_t k) const;
};

struct CoxRealization {
  PointPattern pattern;
  DrivingField field;
};

/// Reusable Cox simulator: the circulant embedding is factorized once.
class CoxSimulator {
 public:
  CoxSimulator(const CoxSpec& spec, const Window& window, SimOptions options = {});
  CoxRealization operator()(std::uint64_t seed, std::uint64_t stream = 0) const;
  const GaussianFieldSampler& sampler() const noexcept { return sampler_; }

 private:
  CoxSpec spec_;
  Window window_;
  SimOptions options_;
  GaussianFieldSampler sampler_;
};

PointPattern simulate(const ProcessSpec& spec, const Window& window, std::uint64_t seed,
                      std::uint64_t stream = 0, const SimOptions& options = {});

struct SimBatch {
  ProcessSpec spec;
  std::uint64_t seed = 0;
  std::vector<PointPattern> replicates;
  /// Driving fields for Cox batches, parallel to replicates; empty otherwise.
  std::vector<DrivingField> fields;
};

/// Replicate r uses stream r of `seed`; replicates are simulated in parallel.
SimBatch simulate_batch(const ProcessSpec& spec, const Window& window, std::uint64_t seed,
                        std::size_t replicates, const SimOptions& options = {});

/// Closed-form pair correlation. Poisson: 1. Thomas: 1 + exp(-r^2/(4 s^2)) / (4 pi s^2 kappa).
/// Cox: 1 + (sigma_y / lambda)^2 exp(-r / range), exact for the untruncated field.
/// Matern II has no closed form and throws NoClosedForm.
PairCorrelation pcf_model(const ProcessSpec& spec);

struct MomentEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

struct MomentReport {
  MomentEstimate mean_b;
  MomentEstimate mean_b2;
  MomentEstimate var_b;
  MomentEstimate cov_bd;
  std::size_t replicates = 0;
};

/// Empirical first and second moments of the counts Phi(B), Phi(D) over
/// independent replicates (cells are half-open rectangles).
MomentReport mc_moment_oracle(const ProcessSpec& spec, const Window& window, const Rect& b,
                              const Rect& d, std::size_t replicates, std::uint64_t seed,
                              const SimOptions& options = {});

}  // namespace ppk
