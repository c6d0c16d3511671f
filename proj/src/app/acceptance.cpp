#include "ppk/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <limits>
#include <numbers>
#include <numeric>

#include "ppk/covariance.hpp"
#include "ppk/kriging.hpp"
#include "ppk/mesh.hpp"
#include "ppk/parallel.hpp"
#include "ppk/procsim.hpp"
#include "ppk/rng.hpp"
#include "ppk/summaries.hpp"

namespace ppk {

namespace {

const Rect kUnit{0.0, 0.0, 1.0, 1.0};

struct Stats {
  double mean = 0.0;
  double variance = 0.0;
  double se = 0.0;
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  const double n = static_cast<double>(xs.size());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.variance = ss / (n - 1.0);
  s.se = std::sqrt(s.variance / n);
  return s;
}

std::vector<double> observed_counts(const std::vector<std::int64_t>& counts, const RegularGrid& grid) {
  std::vector<double> out;
  out.reserve(grid.observed_cells().size());
  for (std::size_t i : grid.observed_cells()) out.push_back(static_cast<double>(counts[i]));
  return out;
}

// Every Prediction-mode weight vector is uniform and every hole prediction
// is the observed-cell mean when g = 1.
CriterionResult poisson_reduction(std::uint64_t seed) {
  struct Fixture {
    ProcessSpec process;
    Window window;
    double side;
  };
  const std::vector<Fixture> fixtures{
      {{ThomasSpec{25.0, 4.0, 0.02}}, Window(kUnit, {{0.4, 0.4, 0.7, 0.7}}), 0.1},
      {{PoissonSpec{100.0}}, Window({0.0, 0.0, 2.0, 1.0}, {{0.3, 0.2, 0.55, 0.45}, {1.2, 0.5, 1.6, 0.9}}),
       0.125},
      {{MaternIISpec{200.0, 0.03}}, Window(kUnit, {{0.25, 0.25, 0.5, 0.6}}), 0.05},
      {{CoxSpec{}}, Window(kUnit, {{0.4, 0.4, 0.7, 0.7}}), 0.05},
  };
  double max_weight = 0.0;
  double max_pred = 0.0;
  std::size_t targets = 0;
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    const Fixture& fx = fixtures[f];
    const PointPattern pattern = simulate(fx.process, fx.window, seed, f);
    const double lambda = estimate_intensity(pattern);
    const RegularGrid grid = build_grid(fx.window, fx.side);
    const KrigingSystem system =
        KrigingSystem::assemble(CovSpec{lambda, PairCorrelation::poisson(), grid, Approx::MidpointPCF, 8});
    const double n = static_cast<double>(grid.observed_cells().size());
    for (std::size_t t : grid.target_cells()) {
      const KrigingWeights w = solve_weights(system, t, Mode::Prediction);
      for (double m : w.mu) max_weight = std::max(max_weight, std::abs(m - 1.0 / n));
    }
    KrigeOptions opts;
    opts.estimate_observed = false;
    const IntensitySurface surface =
        krige_surface(pattern, fx.side, SuppliedModel{lambda, PairCorrelation::poisson()}, opts);
    double n_obs = 0.0;
    for (std::size_t i : grid.observed_cells()) n_obs += static_cast<double>(surface.counts[i]);
    const double expected = n_obs / grid.observed_area();
    for (std::size_t t : grid.target_cells()) {
      max_pred = std::max(max_pred, std::abs(surface.lambda_hat[t] - expected));
      ++targets;
    }
  }
  CriterionResult r;
  r.title = "Poisson reduction identity";
  r.measured = fmt::format("max |mu_i - 1/n| = {:.3g}, max |pred - N_obs/nu(S_obs)| = {:.3g} over {} hole cells",
                           max_weight, max_pred, targets);
  r.threshold = "both <= 1e-10";
  r.pass = max_weight <= 1e-10 && max_pred <= 1e-10;
  return r;
}

// Model cell-count covariance against Monte Carlo at lags 0, 1, 2 cells.
CriterionResult count_covariance(std::uint64_t seed) {
  const ProcessSpec process{ThomasSpec{25.0, 4.0, 0.02}};
  const Window window(kUnit);
  const RegularGrid grid = build_grid(window, 0.05);
  const double lambda = process.intensity();
  const double mean = lambda * grid.cell_area();
  const Eigen::MatrixXd c =
      build_C(CovSpec{lambda, pcf_model(process), grid, Approx::FineGridIntegral, 8});
  constexpr int kLags = 3;
  constexpr std::size_t kReps = 10000;

  // T_L = mean over cell pairs at lag L of (N_i - lambda nu)(N_j - lambda nu).
  std::vector<std::vector<double>> t(kLags, std::vector<double>(kReps));
  parallel_for(kReps, [&](std::size_t rep) {
    const PointPattern p = simulate(process, window, seed, rep);
    const std::vector<std::int64_t> counts = count_points(p.points, grid);
    for (int lag = 0; lag < kLags; ++lag) {
      double sum = 0.0;
      std::size_t pairs = 0;
      for (int iy = 0; iy < grid.ny(); ++iy) {
        for (int ix = 0; ix < grid.nx(); ++ix) {
          const double a = static_cast<double>(counts[grid.index(ix, iy)]) - mean;
          if (lag == 0) {
            sum += a * a;
            ++pairs;
            continue;
          }
          if (ix + lag < grid.nx()) {
            sum += a * (static_cast<double>(counts[grid.index(ix + lag, iy)]) - mean);
            ++pairs;
          }
          if (iy + lag < grid.ny()) {
            sum += a * (static_cast<double>(counts[grid.index(ix, iy + lag)]) - mean);
            ++pairs;
          }
        }
      }
      t[lag][rep] = sum / static_cast<double>(pairs);
    }
  });

  CriterionResult r;
  r.title = "cell-count covariance vs Monte Carlo (Thomas)";
  r.threshold = "|model - MC| <= 3 SE at each lag";
  r.pass = true;
  const std::size_t centre = grid.index(10, 10);
  for (int lag = 0; lag < kLags; ++lag) {
    const double model =
        0.5 * (c(centre, grid.index(10 + lag, 10)) + c(centre, grid.index(10, 10 + lag)));
    const Stats s = stats(t[lag]);
    const double z = (s.mean - model) / s.se;
    r.pass = r.pass && std::abs(z) <= 3.0;
    r.measured += fmt::format("{}lag {}: model {:.5g}, MC {:.5g} +/- {:.2g} (z = {:+.2f})",
                              lag ? "; " : "", lag, model, s.mean, s.se, z);
  }
  return r;
}

CovSpec weak_thomas_spec(const RegularGrid& grid) {
  const ProcessSpec process{ThomasSpec{100.0, 0.5, 0.05}};
  return CovSpec{process.intensity(), pcf_model(process), grid, Approx::FineGridIntegral, 8};
}

CriterionResult neumann_inverse_check() {
  const CovSpec spec = weak_thomas_spec(build_grid(Window(kUnit), 0.125));
  const NeumannExpansion series = neumann_inverse(spec);
  const Eigen::MatrixXd c = build_C(spec);
  const Eigen::MatrixXd dense = c.ldlt().solve(Eigen::MatrixXd::Identity(c.rows(), c.cols()));
  const double rel = (series.inverse - dense).norm() / dense.norm();
  CriterionResult r;
  r.title = "Neumann series inverse on an 8x8 grid";
  r.measured = fmt::format("relative Frobenius error {:.3g} at order {} (residual {:.3g}, {}), rho(lambda H) = {:.3f}",
                           rel, series.order, series.residuals.back(),
                           series.converged ? "converged" : "not converged", neumann_spectral_radius(spec));
  r.threshold = "< 1e-6 with the stopping rule fired";
  r.pass = series.converged && rel < 1e-6;
  return r;
}

// Kriging against Cox truth inside a 0.3 x 0.3 hole.
CriterionResult cox_prediction(std::uint64_t seed) {
  const CoxSpec cox{};
  const ProcessSpec process{cox};
  const Window window(kUnit, {{0.4, 0.4, 0.7, 0.7}});
  const RegularGrid grid = build_grid(window, 0.1);
  const KrigingSystem system = KrigingSystem::assemble(
      CovSpec{cox.lambda, pcf_model(process), grid, Approx::FineGridIntegral, 8});
  const auto& targets = grid.target_cells();
  const auto& observed = grid.observed_cells();
  std::vector<KrigingWeights> weights;
  std::vector<std::size_t> nearest;
  for (std::size_t t : targets) {
    weights.push_back(solve_weights(system, t, Mode::Prediction));
    const Point c = grid.center(t);
    std::size_t best = observed.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i : observed) {
      const double d = std::hypot(grid.center(i).x - c.x, grid.center(i).y - c.y);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    nearest.push_back(best);
  }

  constexpr std::size_t kReps = 500;
  const CoxSimulator simulator(cox, window);
  const std::size_t nt = targets.size();
  std::vector<std::vector<double>> err_krige(nt, std::vector<double>(kReps));
  std::vector<double> se_krige(kReps), se_global(kReps), se_nearest(kReps);
  const double nu = grid.cell_area();
  parallel_for(kReps, [&](std::size_t rep) {
    const CoxRealization real = simulator(seed, rep);
    const std::vector<std::int64_t> counts = count_points(real.pattern.points, grid);
    const std::vector<double> obs = observed_counts(counts, grid);
    const double global = std::accumulate(obs.begin(), obs.end(), 0.0) / grid.observed_area();
    double sk = 0.0, sg = 0.0, sn = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
      const double truth = real.field.average_over(grid.cell(targets[k]));
      const double e = predict(weights[k], obs, nu) - truth;
      err_krige[k][rep] = e;
      sk += e * e;
      sg += (global - truth) * (global - truth);
      const double en = static_cast<double>(counts[nearest[k]]) / nu - truth;
      sn += en * en;
    }
    se_krige[rep] = sk / static_cast<double>(nt);
    se_global[rep] = sg / static_cast<double>(nt);
    se_nearest[rep] = sn / static_cast<double>(nt);
  });

  bool unbiased = true;
  double worst_z = 0.0;
  for (std::size_t k = 0; k < nt; ++k) {
    const Stats s = stats(err_krige[k]);
    const double z = s.mean / s.se;
    if (std::abs(z) > std::abs(worst_z)) worst_z = z;
    unbiased = unbiased && std::abs(s.mean) <= 1.96 * s.se;
  }
  const double mk = stats(se_krige).mean;
  const double mg = stats(se_global).mean;
  const double mn = stats(se_nearest).mean;
  CriterionResult r;
  r.title = "prediction skill on a Cox process";
  r.measured = fmt::format("(a) {} hole cells, largest |mean error| / SE = {:.2f}; (b) MSPE kriging {:.1f}, "
                           "global mean {:.1f}, nearest cell {:.1f}",
                           nt, std::abs(worst_z), mk, mg, mn);
  r.threshold = "(a) every cell within 1.96 SE of 0; (b) kriging MSPE below both baselines";
  r.pass = unbiased && mk < mg && mk < mn;
  return r;
}

// Variance of the predictor at a hole cell across Thomas replicates.
CriterionResult variance_formula(std::uint64_t seed) {
  const ProcessSpec process{ThomasSpec{25.0, 4.0, 0.02}};
  const Window window(kUnit, {{0.4, 0.4, 0.7, 0.7}});
  const RegularGrid grid = build_grid(window, 0.1);
  const KrigingSystem system = KrigingSystem::assemble(
      CovSpec{process.intensity(), pcf_model(process), grid, Approx::FineGridIntegral, 8});
  const std::size_t target = grid.index(5, 5);
  const KrigingWeights w = solve_weights(system, target, Mode::Prediction);
  const double model = variance_direct(w, system).value();
  constexpr std::size_t kReps = 2000;
  std::vector<double> pred(kReps);
  parallel_for(kReps, [&](std::size_t rep) {
    const PointPattern p = simulate(process, window, seed, rep);
    pred[rep] = predict(w, observed_counts(count_points(p.points, grid), grid), grid.cell_area());
  });
  const double empirical = stats(pred).variance;
  const double ratio = empirical / model;
  CriterionResult r;
  r.title = "predictor variance at a hole cell (Thomas)";
  r.measured = fmt::format("empirical {:.2f} over {} replicates, quadratic form {:.2f}, ratio {:.4f}", empirical,
                           kReps, model, ratio);
  r.threshold = "ratio in [0.9, 1.1]";
  r.pass = ratio >= 0.9 && ratio <= 1.1;
  return r;
}

// Estimation-mode variance for Poisson(200) at cell side 0.02, with the
// true model and with plug-in estimates.
CriterionResult estimation_limit(std::uint64_t seed) {
  const double lambda = 200.0;
  const Window window(kUnit);
  const RegularGrid grid = build_grid(window, 0.02);
  const std::size_t target = grid.index(grid.nx() / 2, grid.ny() / 2);
  const double nu = grid.cell_area();

  auto ratio_for = [&](double lam, const PairCorrelation& g) {
    // The cell is wider than the pcf bandwidth, so g_ii is the full cell average.
    const KrigingSystem system = KrigingSystem::assemble(CovSpec{lam, g, grid, Approx::FineGridIntegral, 8});
    const KrigingWeights w = solve_weights(system, target, Mode::Estimation);
    return variance_direct(w, system).value() / variance_estimation_limit(lam, nu);
  };
  const double supplied = ratio_for(lambda, PairCorrelation::poisson());

  const PointPattern pattern = simulate({PoissonSpec{lambda}}, window, seed, 0);
  const double lambda_hat = estimate_intensity(pattern);
  const double h = default_pcf_bandwidth(lambda_hat);
  const PcfEstimate pcf = estimate_pcf(pattern, default_r_grid(window, h), h);
  const double plug_in = ratio_for(lambda_hat, pcf.g);

  CriterionResult r;
  r.title = "estimation-mode variance limit (Poisson)";
  r.measured = fmt::format("ratio {:.6f} with the true model, {:.4f} with plug-in lambda = {:.1f} and g-hat",
                           supplied, plug_in, lambda_hat);
  r.threshold = "both in [0.95, 1.05]";
  r.pass = supplied >= 0.95 && supplied <= 1.05 && plug_in >= 0.95 && plug_in <= 1.05;
  return r;
}

CriterionResult closed_form_variance() {
  const Window window(kUnit, {{1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0}});
  const CovSpec spec = weak_thomas_spec(build_grid(window, 1.0 / 6.0));
  const KrigingSystem system = KrigingSystem::assemble(spec);
  double worst = 0.0;
  int order = 0;
  for (std::size_t t : spec.grid.target_cells()) {
    const double direct = variance_direct(solve_weights(system, t, Mode::Prediction), system).value();
    const ClosedFormVariance closed = variance_prediction_closed(spec, t);
    worst = std::max(worst, std::abs(closed.value - direct) / direct);
    order = closed.order;
  }
  CriterionResult r;
  r.title = "closed-form prediction variance on a 6x6 grid";
  r.measured = fmt::format("largest relative difference {:.3g} over {} hole cells (series order {})", worst,
                           spec.grid.target_cells().size(), order);
  r.threshold = "< 1%";
  r.pass = worst < 0.01;
  return r;
}

CriterionResult optimal_mesh_check(std::uint64_t seed) {
  // (a) lambda(x, y) = 100 (1 + 0.5 sin 2 pi x) on the unit square.
  const Window window(kUnit);
  const double pi = std::numbers::pi;
  IntensityRaster raster = make_raster(window, 256, 256);
  for (int iy = 0; iy < raster.ny; ++iy) {
    for (int ix = 0; ix < raster.nx; ++ix) {
      raster.values[raster.index(ix, iy)] = 100.0 * (1.0 + 0.5 * std::sin(2.0 * pi * raster.center(ix, iy).x));
    }
  }
  const double gint_numeric = gradient_energy(raster);
  const double gint_exact = 1e4 * pi * pi / 2.0;
  const double lambda = 100.0;
  const double closed = optimal_mesh(lambda, 1.0, gint_exact).raw;
  constexpr int kGrid = 400;
  const double lo = 1e-4;
  const double hi = 1.0;
  const double step = std::log(hi / lo) / (kGrid - 1);
  double best = lo;
  double best_val = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kGrid; ++k) {
    const double a = lo * std::exp(step * k);
    const double v = imse(a, lambda, gint_numeric, 1.0).total;
    if (v < best_val) {
      best_val = v;
      best = a;
    }
  }
  const double log_gap = std::abs(std::log(best / closed));
  const bool part_a = log_gap <= step;

  // (b) Thomas vs Poisson at equal intensity.
  constexpr std::size_t kPairs = 200;
  const ProcessSpec thomas{ThomasSpec{25.0, 4.0, 0.02}};
  const ProcessSpec poisson{PoissonSpec{100.0}};
  std::vector<double> nu_thomas(kPairs), nu_poisson(kPairs);
  parallel_for(kPairs, [&](std::size_t rep) {
    nu_thomas[rep] = mesh_recommendation(simulate(thomas, window, seed, 2 * rep)).optimum.raw;
    nu_poisson[rep] = mesh_recommendation(simulate(poisson, window, seed, 2 * rep + 1)).optimum.raw;
  });
  const double mt = stats(nu_thomas).mean;
  const double mp = stats(nu_poisson).mean;
  const bool part_b = mt < mp;

  CriterionResult r;
  r.title = "optimal mesh";
  r.measured = fmt::format("(a) grid minimizer {:.5g} vs closed form {:.5g}, |log ratio| {:.4f} (step {:.4f}); "
                           "(b) mean raw nu_opt Thomas {:.4g} vs Poisson {:.4g} over {} pairs",
                           best, closed, log_gap, step, mt, mp, kPairs);
  r.threshold = "(a) within one log-grid step; (b) Thomas < Poisson";
  r.pass = part_a && part_b;
  return r;
}

struct InvariantTally {
  double weight_sum = 0.0;
  double form_gap = 0.0;
  bool symmetric = true;
  bool translation = true;
  std::size_t dominance_failures = 0;
  std::size_t targets = 0;
};

void check_invariants(const PointPattern& pattern, double side, double lambda, const PairCorrelation& g,
                      Approx approx, Philox& rng, InvariantTally& tally) {
  const RegularGrid grid = build_grid(pattern.window, side);
  const CovSpec spec{lambda, g, grid, approx, 8};
  const KrigingSystem system = KrigingSystem::assemble(spec);
  const Eigen::MatrixXd& c = system.C();
  tally.symmetric = tally.symmetric && c == c.transpose();

  const PointPattern moved = pattern.translated(3.25, -1.5);
  const RegularGrid moved_grid = build_grid(moved.window, side);
  const KrigingSystem moved_system = KrigingSystem::assemble(CovSpec{lambda, g, moved_grid, approx, 8});

  std::vector<std::pair<std::size_t, Mode>> jobs;
  for (std::size_t t : grid.target_cells()) jobs.emplace_back(t, Mode::Prediction);
  for (std::size_t t : grid.observed_cells()) jobs.emplace_back(t, Mode::Estimation);
  const double scale = c.trace() / static_cast<double>(c.rows());
  const auto n = static_cast<Eigen::Index>(system.size());
  for (const auto& [t, mode] : jobs) {
    ++tally.targets;
    const KrigingWeights w = solve_weights(system, t, mode);
    tally.weight_sum = std::max(tally.weight_sum, std::abs(w.mu.sum() - 1.0));
    tally.form_gap = std::max(tally.form_gap, variance_direct(w, system).relative_gap());

    const KrigingWeights wm = solve_weights(moved_system, t, mode);
    tally.translation = tally.translation && wm.mu.size() == w.mu.size() &&
                        std::memcmp(wm.mu.data(), w.mu.data(), sizeof(double) * w.mu.size()) == 0;

    // mu minimizes v'Cv - 2 v'C_o over sum(v) = 1.
    auto objective = [&](const Eigen::VectorXd& v) { return v.dot(c * v) - 2.0 * v.dot(w.co); };
    const double best = objective(w.mu);
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd v(n);
      if (k % 2 == 0) {
        const double s = std::pow(10.0, -6.0 + 6.0 * rng.uniform());
        Eigen::VectorXd d(n);
        for (Eigen::Index i = 0; i < n; ++i) d[i] = rng.normal();
        d.array() -= d.mean();
        v = w.mu + s * d;
      } else {
        for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform() - 0.25;
        v /= v.sum();
      }
      const double other = objective(v);
      if (best > other + 1e-10 * std::max({scale, std::abs(best), std::abs(other)})) {
        ++tally.dominance_failures;
      }
    }
  }
}

CriterionResult invariants(std::uint64_t seed) {
  InvariantTally tally;
  Philox rng(seed, 9000);
  {
    const ProcessSpec process{ThomasSpec{25.0, 4.0, 0.02}};
    const PointPattern p = simulate(process, Window(kUnit, {{0.4, 0.4, 0.7, 0.7}}), seed, 9001);
    check_invariants(p, 0.1, process.intensity(), pcf_model(process), Approx::FineGridIntegral, rng, tally);
  }
  {
    const PointPattern p =
        simulate({CoxSpec{}}, Window(kUnit, {{0.2, 0.2, 0.45, 0.5}, {0.6, 0.55, 0.9, 0.8}}), seed, 9002);
    const double lambda_hat = estimate_intensity(p);
    const double h = default_pcf_bandwidth(lambda_hat);
    const PcfEstimate pcf = estimate_pcf(p, default_r_grid(p.window, h), h);
    check_invariants(p, 0.05, lambda_hat, pcf.g, Approx::MidpointPCF, rng, tally);
  }
  CriterionResult r;
  r.title = "kriging invariants";
  r.measured = fmt::format("{} targets: max |sum mu - 1| = {:.2g}, max form gap = {:.2g}, C symmetric: {}, "
                           "translation bit-exact: {}, dominance failures: {}/{}",
                           tally.targets, tally.weight_sum, tally.form_gap, tally.symmetric ? "yes" : "no",
                           tally.translation ? "yes" : "no", tally.dominance_failures, tally.targets * 100);
  r.threshold = "sum 1e-12, gap 1e-8 relative, exact symmetry and translation, no dominance failure";
  r.pass = tally.weight_sum <= 1e-12 && tally.form_gap <= 1e-8 && tally.symmetric && tally.translation &&
           tally.dominance_failures == 0;
  return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  const std::uint64_t seed = options.seed;
  const std::vector<std::function<CriterionResult()>> all{
      [&] { return poisson_reduction(seed + 1); },
      [&] { return count_covariance(seed + 2); },
      [] { return neumann_inverse_check(); },
      [&] { return cox_prediction(seed + 4); },
      [&] { return variance_formula(seed + 5); },
      [&] { return estimation_limit(seed + 6); },
      [] { return closed_form_variance(); },
      [&] { return optimal_mesh_check(seed + 8); },
      [&] { return invariants(seed + 9); },
  };
  std::vector<CriterionResult> results;
  for (int id = 1; id <= static_cast<int>(all.size()); ++id) {
    if (!options.criteria.empty() &&
        std::find(options.criteria.begin(), options.criteria.end(), id) == options.criteria.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = all[id - 1]();
    } catch (const std::exception& e) {
      r.title = "error";
      r.measured = e.what();
      r.threshold = "no exception";
      r.pass = false;
    }
    r.id = id;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_result(const CriterionResult& r) {
  return fmt::format("[{}] {} {}: {} ({}) [{:.1f} s]", r.pass ? "PASS" : "FAIL", r.id, r.title, r.measured,
                     r.threshold, r.seconds);
}

}  // namespace ppk
