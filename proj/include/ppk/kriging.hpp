#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ppk/covariance.hpp"
#include "ppk/errors.hpp"
#include "ppk/geometry.hpp"
#include "ppk/pcf.hpp"

namespace ppk {

/// Ordinary-kriging weights for one target cell.
struct KrigingWeights {
  Eigen::VectorXd mu;
  /// Lagrange multiplier l of [C 1; 1' 0][mu; l] = [C_o; 1].
  double lagrange = 0.0;
  std::size_t target = 0;
  Mode mode = Mode::Prediction;
  Eigen::VectorXd co;
  /// y = C^{-1} C_o, kept for the second variance form.
  Eigen::VectorXd c_inv_co;
};

/// mu = C^{-1} C_o + ((1 - 1'C^{-1}C_o) / (1'C^{-1}1)) C^{-1} 1, from two
/// solves against the shared factorization.
KrigingWeights solve_weights(const KrigingSystem& system, std::size_t target, Mode mode);

/// lambda-hat(x_o) = sum_i mu_i Phi(B_i) / nu(B); counts ordered as the observed cells.
double predict(const KrigingWeights& weights, std::span<const double> observed_counts,
               double cell_area);

struct VarianceForms {
  /// mu' C mu / nu(B)^2
  double quadratic = 0.0;
  /// [C_o' C^{-1} C_o + (1 - (1'C^{-1}C_o)^2) / (1'C^{-1}1)] / nu(B)^2
  double lagrange = 0.0;

  double value() const noexcept { return quadratic; }
  double relative_gap() const noexcept;
};

/// Variance of lambda-hat(x_o). Throws PsdViolation when the quadratic form is
/// negative beyond rounding; tiny negative values are clamped to zero.
VarianceForms variance_direct(const KrigingWeights& weights, const KrigingSystem& system);

/// lambda / nu(B), the small-cell limit in estimation mode.
double variance_estimation_limit(double lambda, double cell_area, Diagnostics* diagnostics = nullptr);

struct ClosedFormVariance {
  double value = 0.0;
  /// Final ||C S_k - Id||_F of the series.
  double truncation_residual = 0.0;
  int order = 0;
};

/// Prediction variance from the truncated series for J:
///   lambda^3 nu a'a + lambda^4 nu^2 a'J a
///   + [1 - (lambda nu 1'a + lambda^2 nu^2 1'J a)^2] / (nu(S)/lambda + nu^2 1'J 1),
/// a = G_o - 1, nu(S) the observed area. Small grids only; throws Divergence
/// when the series does not converge.
ClosedFormVariance variance_prediction_closed(const CovSpec& spec, std::size_t target,
                                              const NeumannOptions& options = {});

/// Known first- and second-order characteristics.
struct SuppliedModel {
  double lambda = 0.0;
  PairCorrelation g;
};
/// Estimate lambda and g from the pattern itself.
struct PlugInModel {};
using ModelSource = std::variant<PlugInModel, SuppliedModel>;

struct KrigeOptions {
  Approx approx = Approx::MidpointPCF;
  int sub_m = 8;
  /// Also smooth observed cells in estimation mode.
  bool estimate_observed = true;
  /// Clamp negative intensities at zero (off by default; flagged in provenance).
  bool clamp_negative = false;
  /// Keep the assembled system on the surface for inspection.
  bool keep_system = false;
};

struct SurfaceProvenance {
  double lambda = 0.0;
  std::string g_label;
  Approx approx = Approx::MidpointPCF;
  double ridge = 0.0;
  bool plug_in = false;
  bool clamped = false;
  std::size_t clamped_cells = 0;
};

inline constexpr double kNotComputed = std::numeric_limits<double>::quiet_NaN();

struct IntensitySurface {
  RegularGrid grid;
  std::vector<std::int64_t> counts;
  /// Per cell; NaN where no prediction was requested.
  std::vector<double> lambda_hat;
  std::vector<double> variance;
  std::vector<std::optional<Mode>> mode;
  SurfaceProvenance provenance;
  Diagnostics diagnostics;
  std::shared_ptr<const KrigingSystem> system;
};

/// Grid the pattern, obtain (lambda, g), assemble and factorize C once and
/// krige every target cell (and observed cells when requested).
IntensitySurface krige_surface(const PointPattern& pattern, double cell_side,
                               const ModelSource& source, const KrigeOptions& options = {});

}  // namespace ppk
