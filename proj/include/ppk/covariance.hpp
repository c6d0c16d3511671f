#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <string_view>
#include <vector>

#include "ppk/errors.hpp"
#include "ppk/geometry.hpp"
#include "ppk/pcf.hpp"

namespace ppk {

/// How the cell-averaged pair correlation g_ij is evaluated.
enum class Approx {
  /// Product midpoint quadrature of (1/nu(B)^2) int_{BxB} g(x_i - x_j + u - v) du dv
  /// on sub_m x sub_m points per cell; for cells that are large relative to g.
  FineGridIntegral,
  /// g(|x_i - x_j|); the cells are small enough for g to be flat across them.
  MidpointPCF,
  /// g_ij = 1, i.e. C = lambda nu(B) Id; dependence between cells neglected.
  DiagonalOnly,
};

std::string_view name(Approx approx) noexcept;
/// Accepts "fine", "midpoint", "diag".
Approx parse_approx(std::string_view text);

enum class Mode { Estimation, Prediction };

struct CovSpec {
  double lambda = 0.0;
  PairCorrelation g;
  RegularGrid grid;
  Approx approx = Approx::MidpointPCF;
  int sub_m = 8;

  void validate() const;
};

/// Cell average g_ij for two cells of side `side` whose centres differ by (dx, dy).
double pcf_cell_average(const PairCorrelation& g, double dx, double dy, double side, Approx approx,
                        int sub_m = 8);
inline double pcf_cell_average(const PairCorrelation& g, Point xi, Point xj, double side,
                               Approx approx, int sub_m = 8) {
  return pcf_cell_average(g, xi.x - xj.x, xi.y - xj.y, side, approx, sub_m);
}

/// g_ij for every cell-index offset of a grid, computed once. Offsets are
/// integers, so the table (and everything built from it) depends only on
/// the cell side and not on where the grid sits in the plane.
class PcfOffsetTable {
 public:
  PcfOffsetTable(const CovSpec& spec);
  double operator()(int dcx, int dcy) const noexcept {
    return values_[static_cast<std::size_t>(std::abs(dcy)) * stride_ +
                   static_cast<std::size_t>(std::abs(dcx))];
  }

 private:
  std::size_t stride_;
  std::vector<double> values_;
};

/// C = lambda nu(B) [Id + lambda nu(B) (G - 1)] over the observed cells.
Eigen::MatrixXd build_C(const CovSpec& spec);

/// G = [g_ij] over the observed cells.
Eigen::MatrixXd build_G(const CovSpec& spec);

/// G_o = [g_io] between the observed cells and target cell `target`.
Eigen::VectorXd build_Go(const CovSpec& spec, std::size_t target);

/// C_o = lambda nu(B) 1_{x_o} + lambda^2 nu(B)^2 (G_o - 1). Estimation mode
/// requires the target to be an observed cell; the nugget lands on its entry.
Eigen::VectorXd build_Co(const CovSpec& spec, std::size_t target, Mode mode);
/// Same, locating x_o among the cell centres; throws when Estimation mode
/// is requested at a point that is not an observed centre.
Eigen::VectorXd build_Co(const CovSpec& spec, Point x_o, Mode mode);

/// Smallest eigenvalue of a symmetric matrix.
double smallest_eigenvalue(const Eigen::MatrixXd& m);

/// Covariance system over the observed cells, factorized once.
///
/// If C is not numerically positive definite a ridge (-lambda_min + eps) Id,
/// eps = 1e-8 max(mean |C_ii|, |lambda_min|), is added and reported;
/// singularity after the ridge is a SingularSystem error.
class KrigingSystem {
 public:
  static KrigingSystem assemble(CovSpec spec, Diagnostics* diagnostics = nullptr);

  const CovSpec& spec() const noexcept { return spec_; }
  const RegularGrid& grid() const noexcept { return spec_.grid; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(c_.rows()); }
  double cell_area() const noexcept { return spec_.grid.cell_area(); }

  /// C including any ridge.
  const Eigen::MatrixXd& C() const noexcept { return c_; }
  double ridge() const noexcept { return ridge_; }

  Eigen::VectorXd cross_covariance(std::size_t target, Mode mode) const;
  /// Position of a grid cell among the observed cells, or -1.
  std::ptrdiff_t observed_position(std::size_t cell) const noexcept;

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return ldlt_.solve(rhs); }
  /// z = C^{-1} 1 and 1' C^{-1} 1.
  const Eigen::VectorXd& ones_solution() const noexcept { return z_; }
  double ones_quadratic() const noexcept { return one_z_; }

 private:
  KrigingSystem(CovSpec spec) : spec_(std::move(spec)), table_(spec_) {}

  CovSpec spec_;
  PcfOffsetTable table_;
  Eigen::MatrixXd c_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  Eigen::VectorXd z_;
  double one_z_ = 0.0;
  double ridge_ = 0.0;
  std::vector<std::ptrdiff_t> position_;
};

/// Truncated series C^{-1} = (1/(lambda nu)) [Id + sum_{k>=1} (-lambda H)^k]
/// with H = nu(B) (G - 1) over the observed cells; equivalently
/// (1/(lambda nu)) [Id + nu lambda J] with J = sum_k (-1)^k lambda^{k-1} H^k / nu.
struct NeumannExpansion {
  Eigen::MatrixXd inverse;
  Eigen::MatrixXd j;
  /// ||C S_k - Id||_F after each order k = 0, 1, ...
  std::vector<double> residuals;
  int order = 0;
  bool converged = false;
  bool diverged = false;
};

struct NeumannOptions {
  int max_order = 200;
  double tolerance = 1e-12;
  /// Consecutive residual increases that count as divergence.
  int divergence_run = 3;
};

inline constexpr std::size_t kNeumannMaxCells = 256;

/// Requires at most kNeumannMaxCells observed cells.
NeumannExpansion neumann_inverse(const CovSpec& spec, const NeumannOptions& options = {});

/// Spectral radius of lambda H by power iteration.
double neumann_spectral_radius(const CovSpec& spec, int iterations = 500);

}  // namespace ppk
