#include <doctest.h>

#include <Eigen/LU>
#include <cmath>
#include <numeric>

#include "ppk/errors.hpp"
#include "ppk/kriging.hpp"
#include "ppk/parallel.hpp"
#include "ppk/procsim.hpp"
#include "ppk/summaries.hpp"

using namespace ppk;

namespace {

const Rect kUnit{0.0, 0.0, 1.0, 1.0};
const ProcessSpec kThomas{ThomasSpec{25.0, 4.0, 0.02}};

CovSpec thomas_spec(const RegularGrid& grid) {
  return CovSpec{100.0, pcf_model(kThomas), grid, Approx::FineGridIntegral, 8};
}

// Minimizer of mu'C mu - 2 mu'C_o subject to sum(mu) = 1 from the bordered
// system, solved by full-pivot LU.
Eigen::VectorXd kkt_oracle(const Eigen::MatrixXd& c, const Eigen::VectorXd& co) {
  const Eigen::Index n = c.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  a.topLeftCorner(n, n) = c;
  a.block(0, n, n, 1).setOnes();
  a.block(n, 0, 1, n).setOnes();
  Eigen::VectorXd b(n + 1);
  b.head(n) = co;
  b[n] = 1.0;
  return a.fullPivLu().solve(b).head(n);
}

}  // namespace

TEST_CASE("Poisson weights") {
  const RegularGrid grid = build_grid(Window(kUnit, {{0.4, 0.4, 0.7, 0.7}}), 0.1);
  const KrigingSystem sys = KrigingSystem::assemble(CovSpec{100.0, PairCorrelation::poisson(), grid});
  const double n = static_cast<double>(grid.observed_cells().size());
  for (std::size_t t : grid.target_cells()) {
    const KrigingWeights w = solve_weights(sys, t, Mode::Prediction);
    for (double m : w.mu) CHECK(std::abs(m - 1.0 / n) < 1e-15);
    const VarianceForms v = variance_direct(w, sys);
    CHECK(v.value() == doctest::Approx(100.0 / (n * 0.01)).epsilon(1e-12));
  }
  const std::size_t third = grid.observed_cells()[3];
  const KrigingWeights e = solve_weights(sys, third, Mode::Estimation);
  Eigen::VectorXd e3 = Eigen::VectorXd::Zero(e.mu.size());
  e3[3] = 1.0;
  CHECK(e.mu == e3);
  CHECK(variance_direct(e, sys).value() == doctest::Approx(100.0 / 0.01).epsilon(1e-12));
}

TEST_CASE("Thomas weights match the constrained least-squares oracle") {
  const RegularGrid grid = build_grid(Window(kUnit, {{0.4, 0.4, 0.7, 0.7}}), 0.1);
  const KrigingSystem sys = KrigingSystem::assemble(thomas_spec(grid));
  const std::size_t target = grid.index(4, 5);  // hole cell next to observed cell (3, 5)
  const KrigingWeights w = solve_weights(sys, target, Mode::Prediction);
  const Eigen::VectorXd oracle = kkt_oracle(sys.C(), w.co);
  CHECK((w.mu - oracle).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(w.mu.sum() - 1.0) < 1e-12);

  // Weights decay with distance from the target.
  const auto& cells = grid.observed_cells();
  Eigen::Index best = 0;
  w.mu.maxCoeff(&best);
  CHECK(cells[static_cast<std::size_t>(best)] == grid.index(3, 5));
  double near = 0, far = 0;
  int n_near = 0, n_far = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double d = std::hypot(grid.center(cells[i]).x - grid.center(target).x,
                                grid.center(cells[i]).y - grid.center(target).y);
    if (d < 0.15) {
      near += w.mu[static_cast<Eigen::Index>(i)];
      ++n_near;
    } else if (d > 0.4) {
      far += w.mu[static_cast<Eigen::Index>(i)];
      ++n_far;
    }
  }
  CHECK(near / n_near > far / n_far);
}

TEST_CASE("prediction from counts") {
  KrigingWeights w;
  w.mu = Eigen::VectorXd::Constant(4, 0.25);
  const std::vector<double> counts{3, 5, 0, 8};
  CHECK(predict(w, counts, 0.01) == doctest::Approx(16.0 / (4 * 0.01)));
  w.mu = Eigen::VectorXd::Zero(5);
  w.mu[3] = 1.0;
  CHECK(predict(w, std::vector<double>{1, 2, 3, 7, 9}, 0.01) == doctest::Approx(700.0));
  CHECK_THROWS_AS(predict(w, counts, 0.01), Error);
}

TEST_CASE("estimation-mode limit") {
  CHECK(variance_estimation_limit(100.0, 0.01) == doctest::Approx(1e4));
  Diagnostics d;
  CHECK(variance_estimation_limit(0.0, 0.01, &d) == 0.0);
  CHECK_FALSE(d.empty());
  CHECK_THROWS_AS(variance_estimation_limit(100.0, 0.0), Error);
}

TEST_CASE("variance against Thomas replicates") {
  const Window w(kUnit, {{0.4, 0.4, 0.7, 0.7}});
  const RegularGrid grid = build_grid(w, 0.1);
  const KrigingSystem sys = KrigingSystem::assemble(thomas_spec(grid));
  const KrigingWeights kw = solve_weights(sys, grid.index(4, 4), Mode::Prediction);
  const double model = variance_direct(kw, sys).value();
  const std::size_t reps = 2000;
  std::vector<double> pred(reps);
  parallel_for(reps, [&](std::size_t r) {
    const CountField f = cell_counts(simulate(kThomas, w, 61, r), grid);
    pred[r] = predict(kw, f.observed_counts(), grid.cell_area());
  });
  const double mean = std::accumulate(pred.begin(), pred.end(), 0.0) / reps;
  double ss = 0.0;
  for (double p : pred) ss += (p - mean) * (p - mean);
  CHECK(ss / (reps - 1) == doctest::Approx(model).epsilon(0.10));
  CHECK(std::abs(mean - 100.0) < 4.0 * std::sqrt(model / reps));
}

TEST_CASE("closed-form prediction variance") {
  SUBCASE("Poisson reduces to lambda / nu(S)") {
    const RegularGrid grid = build_grid(Window(kUnit, {{0.25, 0.25, 0.5, 0.5}}), 0.125);
    const CovSpec spec{80.0, PairCorrelation::poisson(), grid};
    for (std::size_t t : grid.target_cells()) {
      const ClosedFormVariance c = variance_prediction_closed(spec, t);
      CHECK(c.value == doctest::Approx(80.0 / grid.observed_area()).epsilon(1e-12));
      CHECK(c.order == 0);
    }
  }
  SUBCASE("weak clustering with 64 observed cells") {
    const Window w({0.0, 0.0, 1.0, 1.125}, {{0.0, 0.5, 1.0, 0.625}});
    const RegularGrid grid = build_grid(w, 0.125);
    REQUIRE(grid.observed_cells().size() == 64);
    const CovSpec spec{50.0, pcf_model({ThomasSpec{100.0, 0.5, 0.05}}), grid, Approx::FineGridIntegral, 8};
    const KrigingSystem sys = KrigingSystem::assemble(spec);
    for (std::size_t t : grid.target_cells()) {
      const double direct = variance_direct(solve_weights(sys, t, Mode::Prediction), sys).value();
      const ClosedFormVariance c = variance_prediction_closed(spec, t);
      CHECK(c.value == doctest::Approx(direct).epsilon(0.01));
    }
  }
  SUBCASE("strong clustering reports divergence while the direct form still works") {
    const RegularGrid grid = build_grid(Window(kUnit, {{0.375, 0.375, 0.625, 0.625}}), 0.125);
    CovSpec spec{100.0, pcf_model(kThomas), grid, Approx::FineGridIntegral, 8};
    while (neumann_spectral_radius(spec) < 1.2) spec.lambda *= 1.5;
    const std::size_t t = grid.target_cells().front();
    try {
      variance_prediction_closed(spec, t);
      FAIL("expected divergence");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Divergence);
      CHECK(e.numerical());
    }
    const KrigingSystem sys = KrigingSystem::assemble(spec);
    CHECK(variance_direct(solve_weights(sys, t, Mode::Prediction), sys).value() > 0.0);
  }
}

TEST_CASE("intensity surface") {
  const Window w(kUnit, {{0.4, 0.4, 0.7, 0.7}});
  SUBCASE("Poisson model predicts the observed mean in the hole") {
    const PointPattern p = simulate({PoissonSpec{100.0}}, w, 71);
    const IntensitySurface s = krige_surface(p, 0.1, SuppliedModel{100.0, PairCorrelation::poisson()});
    double n_obs = 0;
    for (std::size_t i : s.grid.observed_cells()) n_obs += static_cast<double>(s.counts[i]);
    for (std::size_t t : s.grid.target_cells()) {
      CHECK(s.lambda_hat[t] == doctest::Approx(n_obs / s.grid.observed_area()).epsilon(1e-12));
      CHECK(s.mode[t] == Mode::Prediction);
      CHECK(s.variance[t] > 0.0);
    }
    for (std::size_t i : s.grid.observed_cells()) {
      CHECK(s.mode[i] == Mode::Estimation);
      CHECK(s.lambda_hat[i] == doctest::Approx(static_cast<double>(s.counts[i]) / 0.01));
    }
    CHECK_FALSE(s.provenance.plug_in);
  }
  SUBCASE("empty pattern") {
    const IntensitySurface s = krige_surface(PointPattern{{}, w}, 0.1, PlugInModel{});
    for (std::size_t t : s.grid.target_cells()) {
      CHECK(s.lambda_hat[t] == 0.0);
      CHECK(s.variance[t] == 0.0);
    }
    CHECK_FALSE(s.diagnostics.empty());
  }
  SUBCASE("plug-in provenance and observed cells left out") {
    const PointPattern p = simulate(kThomas, w, 72);
    KrigeOptions opts;
    opts.estimate_observed = false;
    opts.keep_system = true;
    const IntensitySurface s = krige_surface(p, 0.1, PlugInModel{}, opts);
    CHECK(s.provenance.plug_in);
    CHECK(s.provenance.g_label == "tabulated");
    REQUIRE(s.system);
    for (std::size_t i : s.grid.observed_cells()) CHECK(std::isnan(s.lambda_hat[i]));
    bool labelled = false;
    for (const auto& msg : s.diagnostics.warnings) labelled = labelled || msg.find("plug-in") != std::string::npos;
    CHECK(labelled);
  }
  SUBCASE("negative predictions are clamped only on request") {
    // Strong positive dependence on one far-away cell can push a weight
    // combination below zero; construct it with a sparse pattern.
    const PointPattern p{{{0.05, 0.05}, {0.06, 0.05}, {0.07, 0.06}, {0.95, 0.95}}, w};
    KrigeOptions opts;
    opts.approx = Approx::FineGridIntegral;
    const IntensitySurface raw = krige_surface(p, 0.1, SuppliedModel{100.0, pcf_model(kThomas)}, opts);
    opts.clamp_negative = true;
    const IntensitySurface clamped = krige_surface(p, 0.1, SuppliedModel{100.0, pcf_model(kThomas)}, opts);
    std::size_t negative = 0;
    for (std::size_t i = 0; i < raw.grid.size(); ++i) {
      if (raw.lambda_hat[i] < 0.0) {
        ++negative;
        CHECK(clamped.lambda_hat[i] == 0.0);
      } else {
        CHECK(clamped.lambda_hat[i] == raw.lambda_hat[i]);
      }
    }
    CHECK(clamped.provenance.clamped == (negative > 0));
    CHECK(clamped.provenance.clamped_cells == negative);
  }
}

TEST_CASE("kriging tracks a hidden Cox intensity better than the global mean") {
  const CoxSpec cox{};
  const Window w(kUnit, {{0.4, 0.4, 0.7, 0.7}});
  const RegularGrid grid = build_grid(w, 0.1);
  const KrigingSystem sys = KrigingSystem::assemble(
      CovSpec{cox.lambda, pcf_model({cox}), grid, Approx::FineGridIntegral, 8});
  const std::size_t t = grid.index(4, 5);
  const KrigingWeights kw = solve_weights(sys, t, Mode::Prediction);
  const CoxSimulator sim(cox, w);
  const std::size_t reps = 500;
  std::vector<double> truth(reps), krig(reps), global(reps);
  parallel_for(reps, [&](std::size_t r) {
    const CoxRealization real = sim(81, r);
    const CountField f = cell_counts(real.pattern, grid);
    const auto obs = f.observed_counts();
    truth[r] = real.field.average_over(grid.cell(t));
    krig[r] = predict(kw, obs, grid.cell_area());
    global[r] = std::accumulate(obs.begin(), obs.end(), 0.0) / grid.observed_area();
  });
  auto corr = [&](const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / reps;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / reps;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t k = 0; k < reps; ++k) {
      sab += (a[k] - ma) * (b[k] - mb);
      saa += (a[k] - ma) * (a[k] - ma);
      sbb += (b[k] - mb) * (b[k] - mb);
    }
    return sab / std::sqrt(saa * sbb);
  };
  CHECK(corr(krig, truth) > corr(global, truth));
}
