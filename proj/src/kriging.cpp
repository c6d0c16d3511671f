#include "ppk/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ppk/kernels.hpp"
#include "ppk/parallel.hpp"
#include "ppk/summaries.hpp"

namespace ppk {

KrigingWeights solve_weights(const KrigingSystem& system, std::size_t target, Mode mode) {
  KrigingWeights w;
  w.target = target;
  w.mode = mode;
  w.co = system.cross_covariance(target, mode);
  w.c_inv_co = system.solve(w.co);
  const Eigen::VectorXd& z = system.ones_solution();
  const double m = (1.0 - w.c_inv_co.sum()) / system.ones_quadratic();
  w.mu = w.c_inv_co + m * z;
  w.lagrange = -m;
  if (!w.mu.allFinite()) {
    fail(ErrorKind::SingularSystem, "kriging: non-finite weights for target cell " + std::to_string(target));
  }
  return w;
}

double predict(const KrigingWeights& weights, std::span<const double> observed_counts,
               double cell_area) {
  if (static_cast<std::size_t>(weights.mu.size()) != observed_counts.size()) {
    fail(ErrorKind::InvalidArgument, "predict: weights and counts cover different cells");
  }
  return kernels::dot(std::span<const double>(weights.mu.data(), observed_counts.size()),
                      observed_counts) /
         cell_area;
}

double VarianceForms::relative_gap() const noexcept {
  const double scale = std::max(std::abs(quadratic), std::abs(lagrange));
  return scale > 0.0 ? std::abs(quadratic - lagrange) / scale : 0.0;
}

VarianceForms variance_direct(const KrigingWeights& weights, const KrigingSystem& system) {
  const double nu = system.cell_area();
  const double nu2 = nu * nu;
  const Eigen::VectorXd& mu = weights.mu;
  VarianceForms out;
  out.quadratic = mu.dot(system.C() * mu) / nu2;
  const double one_y = weights.c_inv_co.sum();
  out.lagrange =
      (weights.co.dot(weights.c_inv_co) + (1.0 - one_y * one_y) / system.ones_quadratic()) / nu2;
  const double scale = system.C().diagonal().maxCoeff() / nu2;
  for (double* v : {&out.quadratic, &out.lagrange}) {
    if (*v < -1e-10 * scale) {
      std::ostringstream os;
      os << "kriging: negative variance " << *v << " for target cell " << weights.target
         << " (C not positive semidefinite)";
      fail(ErrorKind::PsdViolation, os.str());
    }
    *v = std::max(0.0, *v);
  }
  return out;
}

double variance_estimation_limit(double lambda, double cell_area, Diagnostics* diagnostics) {
  if (!(cell_area > 0.0)) fail(ErrorKind::InvalidArgument, "variance limit: cell area must be positive");
  if (lambda <= 0.0) {
    if (diagnostics) diagnostics->warn("variance limit: degenerate intensity " + std::to_string(lambda));
    return 0.0;
  }
  return lambda / cell_area;
}

ClosedFormVariance variance_prediction_closed(const CovSpec& spec, std::size_t target,
                                              const NeumannOptions& options) {
  const NeumannExpansion series = neumann_inverse(spec, options);
  if (!series.converged) {
    std::ostringstream os;
    os << "closed-form variance: series " << (series.diverged ? "diverged" : "did not converge")
       << " after order " << series.order << " (residual " << series.residuals.back() << ")";
    fail(ErrorKind::Divergence, os.str());
  }
  const double lambda = spec.lambda;
  const double nu = spec.grid.cell_area();
  const double nu_s = spec.grid.observed_area();
  const Eigen::VectorXd a = (build_Go(spec, target).array() - 1.0).matrix();
  const Eigen::VectorXd ja = series.j * a;
  const double one_a = a.sum();
  const double one_ja = ja.sum();
  const double one_j_one = series.j.sum();
  const double bracket = lambda * nu * one_a + lambda * lambda * nu * nu * one_ja;
  ClosedFormVariance out;
  out.value = std::pow(lambda, 3) * nu * a.squaredNorm() +
              std::pow(lambda, 4) * nu * nu * a.dot(ja) +
              (1.0 - bracket * bracket) / (nu_s / lambda + nu * nu * one_j_one);
  out.truncation_residual = series.residuals.back();
  out.order = series.order;
  return out;
}

namespace {

struct ResolvedModel {
  double lambda = 0.0;
  PairCorrelation g;
  bool plug_in = false;
};

ResolvedModel resolve(const PointPattern& pattern, const ModelSource& source, Diagnostics& diag) {
  if (const auto* supplied = std::get_if<SuppliedModel>(&source)) {
    if (!(supplied->lambda >= 0.0) || !std::isfinite(supplied->lambda)) {
      fail(ErrorKind::InvalidArgument, "krige: supplied intensity must be finite and nonnegative");
    }
    return {supplied->lambda, supplied->g, false};
  }
  ResolvedModel m;
  m.plug_in = true;
  m.lambda = estimate_intensity(pattern);
  if (pattern.size() < 2) {
    diag.warn("krige: fewer than two points; pair correlation taken as 1");
    m.g = PairCorrelation::poisson();
    return m;
  }
  const double h = default_pcf_bandwidth(m.lambda);
  m.g = estimate_pcf(pattern, default_r_grid(pattern.window, h), h, &diag).g;
  return m;
}

}  // namespace

IntensitySurface krige_surface(const PointPattern& pattern, double cell_side,
                               const ModelSource& source, const KrigeOptions& options) {
  RegularGrid grid = build_grid(pattern.window, cell_side);
  IntensitySurface surface{grid, count_points(pattern.points, grid),
                           std::vector<double>(grid.size(), kNotComputed),
                           std::vector<double>(grid.size(), kNotComputed),
                           std::vector<std::optional<Mode>>(grid.size()), {}, {}, nullptr};
  Diagnostics& diag = surface.diagnostics;
  if (grid.observed_cells().empty()) {
    fail(ErrorKind::InvalidArgument, "krige: no fully observed cells at this cell side");
  }

  const ResolvedModel model = resolve(pattern, source, diag);
  surface.provenance.lambda = model.lambda;
  surface.provenance.g_label = model.g.label();
  surface.provenance.approx = options.approx;
  surface.provenance.plug_in = model.plug_in;
  if (model.plug_in) diag.warn("krige: variances use plug-in estimates of lambda and g");

  std::vector<std::pair<std::size_t, Mode>> jobs;
  for (std::size_t i : grid.target_cells()) jobs.emplace_back(i, Mode::Prediction);
  if (options.estimate_observed) {
    for (std::size_t i : grid.observed_cells()) jobs.emplace_back(i, Mode::Estimation);
  }
  for (const auto& [cell, mode] : jobs) surface.mode[cell] = mode;

  if (model.lambda <= 0.0) {
    diag.warn("krige: zero intensity (empty pattern); predictions and variances set to 0");
    for (const auto& [cell, mode] : jobs) {
      surface.lambda_hat[cell] = 0.0;
      surface.variance[cell] = 0.0;
    }
    return surface;
  }

  auto system = std::make_shared<const KrigingSystem>(KrigingSystem::assemble(
      CovSpec{model.lambda, model.g, grid, options.approx, options.sub_m}, &diag));
  surface.provenance.ridge = system->ridge();

  std::vector<double> counts;
  counts.reserve(grid.observed_cells().size());
  for (std::size_t i : grid.observed_cells()) counts.push_back(static_cast<double>(surface.counts[i]));
  const double nu = grid.cell_area();

  std::vector<double> gaps(jobs.size(), 0.0);
  parallel_for(jobs.size(), [&](std::size_t k) {
    const auto [cell, mode] = jobs[k];
    const KrigingWeights w = solve_weights(*system, cell, mode);
    const VarianceForms v = variance_direct(w, *system);
    surface.lambda_hat[cell] = predict(w, counts, nu);
    surface.variance[cell] = v.value();
    gaps[k] = v.relative_gap();
  });

  const double worst_gap = *std::max_element(gaps.begin(), gaps.end());
  if (worst_gap > 1e-8) {
    diag.warn("krige: variance forms disagree by up to " + std::to_string(worst_gap) + " (relative)");
  }
  std::size_t negative = 0;
  for (const auto& [cell, mode] : jobs) {
    if (surface.lambda_hat[cell] < 0.0) {
      ++negative;
      if (options.clamp_negative) surface.lambda_hat[cell] = 0.0;
    }
  }
  if (negative > 0) {
    if (options.clamp_negative) {
      surface.provenance.clamped = true;
      surface.provenance.clamped_cells = negative;
      diag.warn("krige: clamped " + std::to_string(negative) + " negative intensities to 0");
    } else {
      diag.warn("krige: " + std::to_string(negative) + " negative intensity predictions reported");
    }
  }
  if (options.keep_system) surface.system = std::move(system);
  return surface;
}

}  // namespace ppk
