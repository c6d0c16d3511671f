#include "ppk/run.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <fmt/format.h>

#include "ppk/acceptance.hpp"
#include "ppk/io.hpp"
#include "ppk/kernels.hpp"
#include "ppk/kriging.hpp"
#include "ppk/mesh.hpp"
#include "ppk/parallel.hpp"
#include "ppk/summaries.hpp"

namespace ppk {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

class Manifest {
 public:
  explicit Manifest(std::vector<std::pair<std::string, std::string>> echo)
      : echo_(std::move(echo)), start_(Clock::now()), wall_(std::time(nullptr)) {}

  template <class Fn>
  decltype(auto) stage(const std::string& name, Fn&& fn) {
    const auto t0 = Clock::now();
    struct Record {
      Manifest* self;
      std::string name;
      Clock::time_point t0;
      ~Record() { self->timings_.emplace_back(name, std::chrono::duration<double>(Clock::now() - t0).count()); }
    } record{this, name, t0};
    return fn();
  }

  void warn(const Diagnostics& d) {
    warnings_.insert(warnings_.end(), d.warnings.begin(), d.warnings.end());
  }
  void warn(std::string w) { warnings_.push_back(std::move(w)); }
  void artifact(const fs::path& p) { artifacts_.push_back(p.filename().string()); }
  void note(std::string key, std::string value) { notes_.emplace_back(std::move(key), std::move(value)); }

  std::string text(int exit_code, const std::string& error) const {
    char started[32];
    std::strftime(started, sizeof started, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&wall_));
    std::string out = "[run]\n";
    out += fmt::format("version = {}\nstatus = {}\nexit_code = {}\n", kVersion, exit_code == 0 ? "ok" : "failed",
                       exit_code);
    if (!error.empty()) out += fmt::format("error = {}\n", error);
    out += fmt::format("started = {}\nwall_seconds = {:.3f}\nsimd = {}\nthreads = {}\n", started,
                       std::chrono::duration<double>(Clock::now() - start_).count(),
                       kernels::name(kernels::active()), max_threads());
    for (const auto& [k, v] : notes_) out += fmt::format("{} = {}\n", k, v);
    out += "\n[config]\n";
    for (const auto& [k, v] : echo_) out += fmt::format("{} = {}\n", k, v);
    out += "\n[timings]\n";
    for (const auto& [k, v] : timings_) out += fmt::format("{} = {:.3f}\n", k, v);
    out += fmt::format("\n[warnings]\ncount = {}\n", warnings_.size());
    for (const auto& w : warnings_) out += fmt::format("warning = {}\n", w);
    out += "\n[artifacts]\n";
    for (const auto& a : artifacts_) out += fmt::format("file = {}\n", a);
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> echo_;
  Clock::time_point start_;
  std::time_t wall_;
  std::vector<std::pair<std::string, double>> timings_;
  std::vector<std::string> warnings_;
  std::vector<std::string> artifacts_;
  std::vector<std::pair<std::string, std::string>> notes_;
};

std::string numbered(const char* stem, std::size_t k) { return fmt::format("{}_{:03d}.csv", stem, k); }

void write_pattern(const fs::path& path, const PointPattern& p) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(p.size());
  for (const Point& q : p.points) rows.push_back({format_double(q.x), format_double(q.y)});
  write_csv(path, {"x", "y"}, rows);
}

void write_table(const fs::path& path, const std::vector<double>& r, const std::vector<double>& v) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < r.size(); ++k) rows.push_back({format_double(r[k]), format_double(v[k])});
  write_csv(path, {"r", "value"}, rows);
}

PointPattern load_pattern(const RunConfig& cfg, Manifest& m) {
  return m.stage("load_pattern", [&] {
    if (cfg.input) return read_pattern_csv(*cfg.input, *cfg.window);
    return simulate(*cfg.process, *cfg.window, cfg.seed, 0, cfg.sim);
  });
}

std::string mesh_report_text(const MeshReport& rep) {
  const MeshOptimum& o = rep.optimum;
  std::string out = "[mesh]\n";
  out += fmt::format("lambda_hat = {}\nobserved_area = {}\npilot_bandwidth = {}\ngradient_energy = {}\n",
                     format_double(rep.lambda), format_double(rep.area_s), format_double(rep.bandwidth),
                     format_double(rep.gradient_energy));
  out += fmt::format("nu_opt_raw = {}\nnu_opt = {}\ncell_side = {}\n", format_double(o.raw), format_double(o.value),
                     format_double(std::sqrt(o.value)));
  out += fmt::format("lower_bound = {}\nupper_bound = {}\n", format_double(o.lower_bound),
                     format_double(o.upper_bound));
  out += fmt::format("flat = {}\nclamped_low = {}\nclamped_high = {}\n", o.flat, o.clamped_low, o.clamped_high);
  out += fmt::format("note = {}\n", rep.note);
  return out;
}

void mesh_warnings(const MeshReport& rep, Manifest& m) {
  if (rep.optimum.flat) m.warn("optimal-mesh: pilot intensity is flat; using the largest admissible cell");
  if (rep.optimum.clamped_low) m.warn("optimal-mesh: optimum below 4 expected points per cell; clamped");
  if (rep.optimum.clamped_high) m.warn("optimal-mesh: optimum above nu(S)/9; clamped");
}

void write_mesh(const fs::path& dir, const MeshReport& rep, Manifest& m) {
  write_text(dir / "mesh_report.txt", mesh_report_text(rep));
  m.artifact(dir / "mesh_report.txt");
  std::vector<std::vector<std::string>> rows;
  for (const ImseSample& s : rep.curve) {
    rows.push_back({format_double(s.cell_area), format_double(s.value.total), format_double(s.value.bias_term),
                    format_double(s.value.variance_term)});
  }
  write_csv(dir / "imse_curve.csv", {"cell_area", "imse", "bias_term", "variance_term"}, rows);
  m.artifact(dir / "imse_curve.csv");
}

void run_simulate(const RunConfig& cfg, Manifest& m) {
  const fs::path& dir = cfg.out_dir;
  if (const auto* cox = std::get_if<CoxSpec>(&cfg.process->kind)) {
    const CoxSimulator sim = m.stage("embedding", [&] { return CoxSimulator(*cox, *cfg.window, cfg.sim); });
    if (sim.sampler().clipped_fraction() > 0.0) {
      m.warn(fmt::format("simulate: circulant embedding clipped negative eigenvalues (fraction {:.3g})",
                         sim.sampler().clipped_fraction()));
    }
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      const CoxRealization real = m.stage("simulate", [&] { return sim(cfg.seed, r); });
      write_pattern(dir / numbered("pattern", r), real.pattern);
      m.artifact(dir / numbered("pattern", r));
      std::vector<std::vector<std::string>> rows;
      for (std::size_t k = 0; k < real.field.intensity.size(); ++k) {
        const Point c = real.field.pixel_center(k);
        rows.push_back({format_double(c.x), format_double(c.y), format_double(real.field.intensity[k])});
      }
      write_csv(dir / numbered("field", r), {"x", "y", "value"}, rows);
      m.artifact(dir / numbered("field", r));
      if (real.field.truncated_pixels > 0) {
        m.warn(fmt::format("simulate: replicate {}: {} field pixels truncated at zero", r,
                           real.field.truncated_pixels));
      }
    }
    return;
  }
  const SimBatch batch =
      m.stage("simulate", [&] { return simulate_batch(*cfg.process, *cfg.window, cfg.seed, cfg.replicates, cfg.sim); });
  for (std::size_t r = 0; r < batch.replicates.size(); ++r) {
    write_pattern(dir / numbered("pattern", r), batch.replicates[r]);
    m.artifact(dir / numbered("pattern", r));
  }
}

void run_estimate(const RunConfig& cfg, Manifest& m) {
  const PointPattern pattern = load_pattern(cfg, m);
  Diagnostics diag;
  const SummaryEstimates est = m.stage("estimate", [&] { return estimate_summaries(pattern, &diag); });
  m.warn(diag);
  const fs::path& dir = cfg.out_dir;
  write_table(dir / "k.csv", est.k.r, est.k.value);
  m.artifact(dir / "k.csv");
  std::vector<double> g;
  for (double r : est.pcf.raw.r) g.push_back(est.pcf.g(r));
  write_table(dir / "pcf.csv", est.pcf.raw.r, g);
  m.artifact(dir / "pcf.csv");
  std::string summary = "[estimate]\n";
  summary += fmt::format("points = {}\nobserved_area = {}\nlambda_hat = {}\n", pattern.size(),
                         format_double(pattern.window.area()), format_double(est.lambda));
  summary += fmt::format("edge_correction = {}\npcf_bandwidth = {}\npcf_r_max = {}\npcf_tail_found = {}\n",
                         est.edge_correction, format_double(est.pcf.bandwidth), format_double(est.pcf.r_max),
                         est.pcf.tail_found);
  write_text(dir / "summary.txt", summary);
  m.artifact(dir / "summary.txt");
}

void run_krige(const RunConfig& cfg, Manifest& m) {
  const PointPattern pattern = load_pattern(cfg, m);
  const fs::path& dir = cfg.out_dir;
  double side = cfg.cell_side.value_or(0.0);
  if (cfg.cell_side_auto) {
    const MeshReport rep = m.stage("mesh", [&] { return mesh_recommendation(pattern); });
    mesh_warnings(rep, m);
    write_mesh(dir, rep, m);
    side = std::sqrt(rep.optimum.value);
    m.note("cell_side_auto", format_double(side));
  }
  ModelSource source = PlugInModel{};
  if (cfg.model == ModelChoice::Process) {
    source = SuppliedModel{cfg.process->intensity(), pcf_model(*cfg.process)};
  } else if (cfg.model == ModelChoice::Poisson) {
    source = SuppliedModel{estimate_intensity(pattern), PairCorrelation::poisson()};
  }
  KrigeOptions opts;
  opts.approx = cfg.approx;
  opts.sub_m = cfg.sub_m;
  opts.clamp_negative = cfg.clamp_negative;
  opts.keep_system = cfg.dump_matrices;
  const IntensitySurface s = m.stage("krige", [&] { return krige_surface(pattern, side, source, opts); });
  m.warn(s.diagnostics);
  m.note("variance_label", s.provenance.plug_in ? "plug-in" : "model");
  m.note("model_lambda", format_double(s.provenance.lambda));
  m.note("model_g", s.provenance.g_label);
  m.note("ridge", format_double(s.provenance.ridge));
  m.note("clamped_cells", std::to_string(s.provenance.clamped_cells));

  const RegularGrid& grid = s.grid;
  std::vector<std::vector<std::string>> rows;
  auto opt = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point c = grid.center(i);
    rows.push_back({format_double(c.x), format_double(c.y), grid.observed(i) ? "observed" : "target",
                    grid.observed(i) ? std::to_string(s.counts[i]) : std::string(), opt(s.lambda_hat[i]),
                    opt(s.variance[i])});
  }
  write_csv(dir / "surface.csv", {"cell_center_x", "cell_center_y", "mask", "count_or_empty", "lambda_hat", "variance"},
            rows);
  m.artifact(dir / "surface.csv");

  if (cfg.dump_matrices && s.system) {
    const KrigingSystem& sys = *s.system;
    std::vector<std::string> header{"cell"};
    for (std::size_t i : grid.observed_cells()) header.push_back(fmt::format("cell_{}", i));
    std::vector<std::vector<std::string>> c_rows;
    for (std::size_t a = 0; a < sys.size(); ++a) {
      std::vector<std::string> row{std::to_string(grid.observed_cells()[a])};
      for (std::size_t b = 0; b < sys.size(); ++b) row.push_back(format_double(sys.C()(a, b)));
      c_rows.push_back(std::move(row));
    }
    write_csv(dir / "C.csv", header, c_rows);
    m.artifact(dir / "C.csv");
    std::vector<std::string> co_header{"cell"};
    std::vector<Eigen::VectorXd> cols;
    for (std::size_t t : grid.target_cells()) {
      co_header.push_back(fmt::format("cell_{}", t));
      cols.push_back(sys.cross_covariance(t, Mode::Prediction));
    }
    std::vector<std::vector<std::string>> co_rows;
    for (std::size_t a = 0; a < sys.size(); ++a) {
      std::vector<std::string> row{std::to_string(grid.observed_cells()[a])};
      for (const auto& col : cols) row.push_back(format_double(col[static_cast<Eigen::Index>(a)]));
      co_rows.push_back(std::move(row));
    }
    write_csv(dir / "Co.csv", co_header, co_rows);
    m.artifact(dir / "Co.csv");
  }
}

void run_optimal_mesh(const RunConfig& cfg, Manifest& m) {
  const PointPattern pattern = load_pattern(cfg, m);
  const MeshReport rep = m.stage("mesh", [&] { return mesh_recommendation(pattern); });
  mesh_warnings(rep, m);
  write_mesh(cfg.out_dir, rep, m);
}

bool run_validate(const RunConfig& cfg, Manifest& m, std::ostream& log) {
  AcceptanceOptions opts;
  if (cfg.seed_given) opts.seed = cfg.seed;
  opts.criteria = cfg.criteria;
  m.note("acceptance_seed", std::to_string(opts.seed));
  const auto results = m.stage("validate", [&] {
    return run_acceptance(opts, [&log](const CriterionResult& r) { log << format_result(r) << std::endl; });
  });
  std::vector<std::vector<std::string>> rows;
  bool all = true;
  for (const CriterionResult& r : results) {
    all = all && r.pass;
    rows.push_back({std::to_string(r.id), r.title, r.pass ? "pass" : "fail", r.measured, r.threshold,
                    fmt::format("{:.2f}", r.seconds)});
    if (!r.pass) m.warn(fmt::format("validate: criterion {} failed: {}", r.id, r.measured));
  }
  write_csv(cfg.out_dir / "validation.csv", {"criterion", "title", "result", "measured", "threshold", "seconds"},
            rows);
  m.artifact(cfg.out_dir / "validation.csv");
  return all;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
  set_max_threads(cfg.threads);
  Manifest manifest(cfg.echo);
  int code = 0;
  std::string error;
  try {
    fs::create_directories(cfg.out_dir);
    switch (cfg.subcommand) {
      case Subcommand::Simulate: run_simulate(cfg, manifest); break;
      case Subcommand::Estimate: run_estimate(cfg, manifest); break;
      case Subcommand::Krige: run_krige(cfg, manifest); break;
      case Subcommand::OptimalMesh: run_optimal_mesh(cfg, manifest); break;
      case Subcommand::Validate:
        if (!run_validate(cfg, manifest, log)) {
          code = 2;
          error = "acceptance criteria failed";
        }
        break;
    }
  } catch (const Error& e) {
    code = e.numerical() ? 2 : 1;
    error = e.what();
  } catch (const std::exception& e) {
    code = 1;
    error = e.what();
  }
  if (!error.empty()) log << "ppkrige: " << error << '\n';
  try {
    fs::create_directories(cfg.out_dir);
    write_text(cfg.out_dir / "manifest.txt", manifest.text(code, error));
  } catch (const std::exception& e) {
    log << "ppkrige: cannot write manifest: " << e.what() << '\n';
    if (code == 0) code = 1;
  }
  return code;
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kriging-based local intensity prediction for spatial point patterns", "ppkrige"};
  std::string subcommand;
  std::optional<std::string> config;
  FlagOverrides flags;
  std::optional<std::string> out_dir;
  app.add_option("subcommand", subcommand, "simulate | estimate | krige | optimal-mesh | validate");
  app.add_option("--config", config, "Configuration file (key = value in [sections])");
  app.add_option("--seed", flags.seed, "Random seed");
  app.add_option("--cell-side", flags.cell_side, "Cell side length, or 'auto'");
  app.add_option("--approx", flags.approx, "Pair-correlation cell average: fine | midpoint | diag");
  app.add_option("--threads", flags.threads, "Worker threads (0 = all cores)");
  app.add_flag("--clamp-negative", flags.clamp_negative, "Clamp negative predicted intensities at zero");
  app.add_flag("--dump-matrices", flags.dump_matrices, "Write C.csv and Co.csv");
  app.add_option("--out-dir", out_dir, "Output directory");
  app.set_version_flag("--version", kVersion);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  if (!subcommand.empty()) flags.subcommand = subcommand;
  if (out_dir) flags.out_dir = *out_dir;
  RunConfig cfg;
  try {
    cfg = parse_config(config ? std::optional<fs::path>(*config) : std::nullopt, flags);
  } catch (const std::exception& e) {
    err << "ppkrige: " << e.what() << '\n';
    // The manifest is written even when the configuration is rejected.
    RunConfig fallback;
    fallback.out_dir = flags.out_dir.value_or(fallback.out_dir);
    try {
      fs::create_directories(fallback.out_dir);
      Manifest m({});
      write_text(fallback.out_dir / "manifest.txt", m.text(1, e.what()));
    } catch (const std::exception&) {
    }
    return 1;
  }
  return run(cfg, err);
}

}  // namespace ppk
