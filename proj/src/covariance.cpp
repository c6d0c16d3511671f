#include "ppk/covariance.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace ppk {

std::string_view name(Approx approx) noexcept {
  switch (approx) {
    case Approx::FineGridIntegral:
      return "fine";
    case Approx::DiagonalOnly:
      return "diag";
    case Approx::MidpointPCF:
      break;
  }
  return "midpoint";
}

Approx parse_approx(std::string_view text) {
  if (text == "fine") return Approx::FineGridIntegral;
  if (text == "midpoint") return Approx::MidpointPCF;
  if (text == "diag") return Approx::DiagonalOnly;
  fail(ErrorKind::InvalidArgument,
       "unknown approximation '" + std::string(text) + "' (expected fine|midpoint|diag)");
}

void CovSpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    fail(ErrorKind::InvalidArgument, "covariance: lambda must be positive and finite");
  }
  if (approx == Approx::FineGridIntegral && sub_m < 2) {
    fail(ErrorKind::InvalidArgument, "covariance: fine-grid integral needs sub_m >= 2");
  }
  if (grid.observed_cells().empty()) {
    fail(ErrorKind::InvalidArgument, "covariance: no observed cells");
  }
}

double pcf_cell_average(const PairCorrelation& g, double dx, double dy, double side, Approx approx,
                        int sub_m) {
  switch (approx) {
    case Approx::DiagonalOnly:
      return 1.0;
    case Approx::MidpointPCF:
      return g(std::hypot(dx, dy));
    case Approx::FineGridIntegral:
      break;
  }
  if (std::hypot(dx, dy) > g.r_max() + std::sqrt(2.0) * side) return 1.0;
  // Differences u - v of sub-cell midpoints are multiples t * side / m with
  // multiplicity (m - |t|) per axis, which turns the m^4 double sum into
  // (2m - 1)^2 terms with integer weights summing to m^4.
  const int m = sub_m;
  const double step = side / m;
  double acc = 0.0;
  for (int ty = -(m - 1); ty <= m - 1; ++ty) {
    const double wy = m - std::abs(ty);
    const double ey = dy + ty * step;
    double row = 0.0;
    for (int tx = -(m - 1); tx <= m - 1; ++tx) {
      const double wx = m - std::abs(tx);
      row += wx * g(std::hypot(dx + tx * step, ey));
    }
    acc += wy * row;
  }
  const double m2 = static_cast<double>(m) * m;
  return acc / (m2 * m2);
}

PcfOffsetTable::PcfOffsetTable(const CovSpec& spec) : stride_(static_cast<std::size_t>(spec.grid.nx())) {
  const int nx = spec.grid.nx();
  const int ny = spec.grid.ny();
  const double s = spec.grid.cell_side();
  values_.resize(static_cast<std::size_t>(nx) * ny);
  for (int dy = 0; dy < ny; ++dy) {
    for (int dx = 0; dx < nx; ++dx) {
      const double v = pcf_cell_average(spec.g, dx * s, dy * s, s, spec.approx, spec.sub_m);
      if (!std::isfinite(v)) {
        fail(ErrorKind::InvalidArgument, "covariance: non-finite pair correlation value");
      }
      values_[static_cast<std::size_t>(dy) * stride_ + dx] = v;
    }
  }
}

namespace {

Eigen::MatrixXd assemble_C(const CovSpec& spec, const PcfOffsetTable& table) {
  const RegularGrid& grid = spec.grid;
  const auto& cells = grid.observed_cells();
  const auto n = static_cast<Eigen::Index>(cells.size());
  const double a = spec.lambda * grid.cell_area();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int ix = grid.ix(cells[i]);
    const int iy = grid.iy(cells[i]);
    for (Eigen::Index j = i; j < n; ++j) {
      const double gij = table(grid.ix(cells[j]) - ix, grid.iy(cells[j]) - iy);
      const double v = a * ((i == j ? 1.0 : 0.0) + a * (gij - 1.0));
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

Eigen::VectorXd go_from_table(const CovSpec& spec, const PcfOffsetTable& table, std::size_t target) {
  const RegularGrid& grid = spec.grid;
  const auto& cells = grid.observed_cells();
  Eigen::VectorXd go(static_cast<Eigen::Index>(cells.size()));
  const int tx = grid.ix(target);
  const int ty = grid.iy(target);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    go(static_cast<Eigen::Index>(i)) = table(grid.ix(cells[i]) - tx, grid.iy(cells[i]) - ty);
  }
  return go;
}

Eigen::VectorXd co_from_go(const CovSpec& spec, const Eigen::VectorXd& go, std::ptrdiff_t nugget_at) {
  const double a = spec.lambda * spec.grid.cell_area();
  Eigen::VectorXd co = (a * a) * (go.array() - 1.0).matrix();
  if (nugget_at >= 0) co(nugget_at) += a;
  return co;
}

std::ptrdiff_t position_of(const RegularGrid& grid, std::size_t cell) {
  const auto& cells = grid.observed_cells();
  const auto it = std::lower_bound(cells.begin(), cells.end(), cell);
  if (it == cells.end() || *it != cell) return -1;
  return it - cells.begin();
}

}  // namespace

Eigen::MatrixXd build_C(const CovSpec& spec) {
  spec.validate();
  return assemble_C(spec, PcfOffsetTable(spec));
}

Eigen::MatrixXd build_G(const CovSpec& spec) {
  spec.validate();
  const PcfOffsetTable table(spec);
  const RegularGrid& grid = spec.grid;
  const auto& cells = grid.observed_cells();
  const auto n = static_cast<Eigen::Index>(cells.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      g(i, j) = table(grid.ix(cells[j]) - grid.ix(cells[i]), grid.iy(cells[j]) - grid.iy(cells[i]));
    }
  }
  return g;
}

Eigen::VectorXd build_Go(const CovSpec& spec, std::size_t target) {
  spec.validate();
  if (target >= spec.grid.size()) fail(ErrorKind::InvalidArgument, "covariance: target cell out of range");
  return go_from_table(spec, PcfOffsetTable(spec), target);
}

Eigen::VectorXd build_Co(const CovSpec& spec, std::size_t target, Mode mode) {
  spec.validate();
  if (target >= spec.grid.size()) fail(ErrorKind::InvalidArgument, "covariance: target cell out of range");
  std::ptrdiff_t nugget = -1;
  if (mode == Mode::Estimation) {
    nugget = position_of(spec.grid, target);
    if (nugget < 0) {
      fail(ErrorKind::InvalidArgument, "covariance: estimation target is not an observed cell");
    }
  }
  return co_from_go(spec, go_from_table(spec, PcfOffsetTable(spec), target), nugget);
}

Eigen::VectorXd build_Co(const CovSpec& spec, Point x_o, Mode mode) {
  spec.validate();
  const RegularGrid& grid = spec.grid;
  const double tol = 1e-9 * grid.cell_side();
  const std::ptrdiff_t cell = grid.locate(x_o);
  if (cell >= 0) {
    const Point c = grid.center(static_cast<std::size_t>(cell));
    if (std::abs(c.x - x_o.x) <= tol && std::abs(c.y - x_o.y) <= tol) {
      return build_Co(spec, static_cast<std::size_t>(cell), mode);
    }
  }
  if (mode == Mode::Estimation) {
    std::ostringstream os;
    os << "covariance: estimation point (" << x_o.x << ", " << x_o.y
       << ") is not the centre of an observed cell";
    fail(ErrorKind::InvalidArgument, os.str());
  }
  const auto& cells = grid.observed_cells();
  Eigen::VectorXd go(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    go(static_cast<Eigen::Index>(i)) = pcf_cell_average(spec.g, grid.center(cells[i]), x_o,
                                                        grid.cell_side(), spec.approx, spec.sub_m);
  }
  return co_from_go(spec, go, -1);
}

double smallest_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

KrigingSystem KrigingSystem::assemble(CovSpec spec, Diagnostics* diagnostics) {
  spec.validate();
  KrigingSystem sys(std::move(spec));
  sys.c_ = assemble_C(sys.spec_, sys.table_);
  const auto n = sys.c_.rows();
  // LDL' rather than LL': a diagonal C then solves by exact division.
  auto positive_definite = [&sys] {
    return sys.ldlt_.info() == Eigen::Success && sys.ldlt_.vectorD().minCoeff() > 0.0;
  };
  sys.ldlt_.compute(sys.c_);
  if (!positive_definite()) {
    const double lmin = smallest_eigenvalue(sys.c_);
    // |C_ii| rather than trace(C): a strongly repulsive g makes the diagonal negative.
    const double scale = std::max(sys.c_.diagonal().cwiseAbs().mean(), std::abs(lmin));
    sys.ridge_ = (lmin < 0.0 ? -lmin : 0.0) + 1e-8 * scale;
    sys.c_.diagonal().array() += sys.ridge_;
    sys.ldlt_.compute(sys.c_);
    std::ostringstream os;
    os << "covariance: C not positive definite (smallest eigenvalue " << lmin
       << "); ridge " << sys.ridge_ << " added to the diagonal";
    if (diagnostics) diagnostics->warn(os.str());
  }
  const double rcond = positive_definite() ? sys.ldlt_.rcond() : 0.0;
  if (!(rcond > 1e-15)) {
    std::ostringstream os;
    os << "covariance: C is singular after ridge " << sys.ridge_ << " (reciprocal condition "
       << rcond << ", trace " << sys.c_.trace() << ", n " << n << ")";
    fail(ErrorKind::SingularSystem, os.str());
  }
  sys.z_ = sys.ldlt_.solve(Eigen::VectorXd::Ones(n));
  sys.one_z_ = sys.z_.sum();
  const RegularGrid& grid = sys.spec_.grid;
  sys.position_.assign(grid.size(), -1);
  const auto& cells = grid.observed_cells();
  for (std::size_t i = 0; i < cells.size(); ++i) sys.position_[cells[i]] = static_cast<std::ptrdiff_t>(i);
  return sys;
}

std::ptrdiff_t KrigingSystem::observed_position(std::size_t cell) const noexcept {
  return cell < position_.size() ? position_[cell] : -1;
}

Eigen::VectorXd KrigingSystem::cross_covariance(std::size_t target, Mode mode) const {
  if (target >= grid().size()) fail(ErrorKind::InvalidArgument, "kriging: target cell out of range");
  std::ptrdiff_t nugget = -1;
  if (mode == Mode::Estimation) {
    nugget = observed_position(target);
    if (nugget < 0) fail(ErrorKind::InvalidArgument, "kriging: estimation target is not an observed cell");
  }
  return co_from_go(spec_, go_from_table(spec_, table_, target), nugget);
}

NeumannExpansion neumann_inverse(const CovSpec& spec, const NeumannOptions& options) {
  spec.validate();
  const std::size_t n = spec.grid.observed_cells().size();
  if (n > kNeumannMaxCells) {
    fail(ErrorKind::InvalidArgument, "neumann_inverse: grid has " + std::to_string(n) +
                                         " observed cells; the series check is limited to " +
                                         std::to_string(kNeumannMaxCells));
  }
  const PcfOffsetTable table(spec);
  const Eigen::MatrixXd c = assemble_C(spec, table);
  const double nu = spec.grid.cell_area();
  const double a = spec.lambda * nu;
  const auto dim = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(dim, dim);
  // -lambda H with H = nu (G - 1) is the off-identity part of C / (lambda nu).
  const Eigen::MatrixXd step = -(c / a - id);

  NeumannExpansion out;
  Eigen::MatrixXd term = id / a;
  out.inverse = term;
  out.residuals.push_back((c * out.inverse - id).norm());
  int rising = 0;
  for (int k = 1; k <= options.max_order && !(out.residuals.back() < options.tolerance); ++k) {
    term = term * step;
    out.inverse += term;
    out.order = k;
    const double r = (c * out.inverse - id).norm();
    rising = r > out.residuals.back() ? rising + 1 : 0;
    out.residuals.push_back(r);
    if (rising >= options.divergence_run) {
      out.diverged = true;
      break;
    }
  }
  out.converged = out.residuals.back() < options.tolerance;
  out.j = out.inverse - id / a;
  return out;
}

double neumann_spectral_radius(const CovSpec& spec, int iterations) {
  const Eigen::MatrixXd c = build_C(spec);
  const double a = spec.lambda * spec.grid.cell_area();
  const Eigen::MatrixXd lambda_h = c / a - Eigen::MatrixXd::Identity(c.rows(), c.cols());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(c.rows()).normalized();
  // A constant start can be orthogonal to the dominant mode; perturb it.
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 1e-3 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double radius = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd w = lambda_h * (lambda_h * v);  // squared operator: sign-robust
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    radius = std::sqrt(norm);
    v = w / norm;
  }
  return radius;
}

}  // namespace ppk
