#include "ppk/procsim.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <sstream>

#include "ppk/errors.hpp"
#include "ppk/parallel.hpp"

namespace ppk {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// FFTW planning is not thread safe; execution on distinct arrays is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

Rect dilate(const Rect& r, double margin) {
  return {r.x0 - margin, r.y0 - margin, r.x1 + margin, r.y1 + margin};
}

void check_budget(double expected, const SimOptions& options, const char* what) {
  if (expected > options.max_expected_points) {
    std::ostringstream os;
    os << "simulate: expected " << expected << " " << what << " exceeds the cap of "
       << options.max_expected_points;
    fail(ErrorKind::Resource, os.str());
  }
}

void uniform_points(Philox& rng, const Rect& r, std::int64_t count, std::vector<Point>& out) {
  out.reserve(out.size() + static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    const double x = rng.uniform(r.x0, r.x1);
    const double y = rng.uniform(r.y0, r.y1);
    out.push_back({x, y});
  }
}

PointPattern keep_observed(std::vector<Point> candidates, const Window& window) {
  PointPattern out{{}, window};
  out.points.reserve(candidates.size());
  for (const Point& p : candidates) {
    if (window.observed(p)) out.points.push_back(p);
  }
  return out;
}

PointPattern simulate_poisson(const PoissonSpec& s, const Window& w, Philox& rng,
                              const SimOptions& options) {
  const Rect& outer = w.outer();
  check_budget(s.lambda * outer.area(), options, "points");
  std::vector<Point> pts;
  uniform_points(rng, outer, rng.poisson(s.lambda * outer.area()), pts);
  return keep_observed(std::move(pts), w);
}

PointPattern simulate_thomas(const ThomasSpec& s, const Window& w, Philox& rng,
                             const SimOptions& options) {
  const Rect parents_region = dilate(w.outer(), options.thomas_margin_sigmas * s.sigma);
  check_budget(s.kappa * parents_region.area() * (1.0 + s.mu), options, "points");
  std::vector<Point> parents;
  uniform_points(rng, parents_region, rng.poisson(s.kappa * parents_region.area()), parents);
  std::vector<Point> pts;
  for (const Point& c : parents) {
    const std::int64_t m = rng.poisson(s.mu);
    for (std::int64_t k = 0; k < m; ++k) {
      const double dx = s.sigma * rng.normal();
      const double dy = s.sigma * rng.normal();
      pts.push_back({c.x + dx, c.y + dy});
    }
  }
  return keep_observed(std::move(pts), w);
}

PointPattern simulate_matern2(const MaternIISpec& s, const Window& w, Philox& rng,
                              const SimOptions& options) {
  const Rect region = dilate(w.outer(), s.radius);
  check_budget(s.lambda_basic * region.area(), options, "points");
  std::vector<Point> basic;
  uniform_points(rng, region, rng.poisson(s.lambda_basic * region.area()), basic);
  std::vector<double> marks(basic.size());
  for (double& m : marks) m = rng.uniform();

  // Bucket by radius so each point only inspects the 3x3 neighbouring buckets.
  const int bx = std::max(1, static_cast<int>(std::floor(region.width() / s.radius)));
  const int by = std::max(1, static_cast<int>(std::floor(region.height() / s.radius)));
  auto bucket_of = [&](const Point& p) {
    const int ix = std::clamp(static_cast<int>((p.x - region.x0) / region.width() * bx), 0, bx - 1);
    const int iy = std::clamp(static_cast<int>((p.y - region.y0) / region.height() * by), 0, by - 1);
    return std::pair{ix, iy};
  };
  std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(bx) * by);
  for (std::size_t k = 0; k < basic.size(); ++k) {
    const auto [ix, iy] = bucket_of(basic[k]);
    buckets[static_cast<std::size_t>(iy) * bx + ix].push_back(k);
  }
  const double r2 = s.radius * s.radius;
  std::vector<Point> kept;
  for (std::size_t k = 0; k < basic.size(); ++k) {
    const auto [ix, iy] = bucket_of(basic[k]);
    bool retained = true;
    for (int jy = std::max(0, iy - 1); retained && jy <= std::min(by - 1, iy + 1); ++jy) {
      for (int jx = std::max(0, ix - 1); retained && jx <= std::min(bx - 1, ix + 1); ++jx) {
        for (std::size_t l : buckets[static_cast<std::size_t>(jy) * bx + jx]) {
          if (l == k || marks[l] >= marks[k]) continue;
          const double dx = basic[l].x - basic[k].x;
          const double dy = basic[l].y - basic[k].y;
          if (dx * dx + dy * dy < r2) {
            retained = false;
            break;
          }
        }
      }
    }
    if (retained) kept.push_back(basic[k]);
  }
  return keep_observed(std::move(kept), w);
}

int raster_cells(double length, double pixel) {
  return std::max(1, static_cast<int>(std::ceil(length / pixel - 1e-9)));
}

}  // namespace

// ---------------------------------------------------------------------------
// ProcessSpec

double ProcessSpec::intensity() const {
  return std::visit(
      overloaded{
          [](const PoissonSpec& s) { return s.lambda; },
          [](const ThomasSpec& s) { return s.kappa * s.mu; },
          [](const MaternIISpec& s) {
            const double a = s.lambda_basic * std::numbers::pi * s.radius * s.radius;
            return (1.0 - std::exp(-a)) / (std::numbers::pi * s.radius * s.radius);
          },
          [](const CoxSpec& s) { return s.lambda; },
      },
      kind);
}

std::string ProcessSpec::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const PoissonSpec& s) { os << "poisson(lambda=" << s.lambda << ")"; },
                 [&](const ThomasSpec& s) {
                   os << "thomas(kappa=" << s.kappa << ", mu=" << s.mu << ", sigma=" << s.sigma
                      << ")";
                 },
                 [&](const MaternIISpec& s) {
                   os << "matern2(lambda_basic=" << s.lambda_basic << ", radius=" << s.radius
                      << ")";
                 },
                 [&](const CoxSpec& s) {
                   os << "cox(lambda=" << s.lambda << ", sigma_y=" << s.sigma_y
                      << ", range=" << s.range << ", raster=" << s.raster_side << ")";
                 },
             },
             kind);
  return os.str();
}

void ProcessSpec::validate(const Window& window) const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      fail(ErrorKind::InvalidArgument, std::string("process: ") + name + " must be positive");
    }
  };
  std::visit(overloaded{
                 [&](const PoissonSpec& s) { positive(s.lambda, "lambda"); },
                 [&](const ThomasSpec& s) {
                   positive(s.kappa, "kappa");
                   positive(s.mu, "mu");
                   positive(s.sigma, "sigma");
                 },
                 [&](const MaternIISpec& s) {
                   positive(s.lambda_basic, "lambda_basic");
                   positive(s.radius, "radius");
                   const double smallest =
                       std::min(window.outer().width(), window.outer().height());
                   if (!(s.radius < smallest)) {
                     fail(ErrorKind::InvalidArgument,
                          "process: hard-core radius must be below the smallest window dimension");
                   }
                 },
                 [&](const CoxSpec& s) {
                   positive(s.lambda, "lambda");
                   positive(s.sigma_y, "sigma_y");
                   positive(s.range, "range");
                   positive(s.raster_side, "raster_side");
                 },
             },
             kind);
}

// ---------------------------------------------------------------------------
// Gaussian field by circulant embedding

struct GaussianFieldSampler::Plan {
  fftw_plan plan = nullptr;
  ~Plan() {
    std::lock_guard lock(fftw_planner_mutex());
    if (plan) fftw_destroy_plan(plan);
  }
};

namespace {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

}  // namespace

GaussianFieldSampler::GaussianFieldSampler(int nx, int ny, double pixel,
                                           const std::function<double(double)>& cov)
    : nx_(nx), ny_(ny) {
  if (nx < 1 || ny < 1 || !(pixel > 0.0)) {
    fail(ErrorKind::InvalidArgument, "gaussian field: raster must be nonempty with positive pixel");
  }
  // Grow the torus until the embedding is nonnegative definite to working
  // precision; any residual negative eigenvalues are clipped and reported.
  for (int factor = 1;; factor *= 2) {
    mx_ = 2 * nx * factor;
    my_ = 2 * ny * factor;
    const std::size_t m = static_cast<std::size_t>(mx_) * my_;
    FftwBuffer buf(m);
    for (int j = 0; j < my_; ++j) {
      const double dy = std::min(j, my_ - j) * pixel;
      for (int i = 0; i < mx_; ++i) {
        const double dx = std::min(i, mx_ - i) * pixel;
        const std::size_t k = static_cast<std::size_t>(j) * mx_ + i;
        buf.data[k][0] = cov(std::hypot(dx, dy));
        buf.data[k][1] = 0.0;
      }
    }
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_plan p = fftw_plan_dft_2d(my_, mx_, buf.data, buf.data, FFTW_FORWARD, FFTW_ESTIMATE);
      fftw_execute(p);
      fftw_destroy_plan(p);
    }
    double total = 0.0;
    double negative = 0.0;
    double largest = 0.0;
    sqrt_eig_.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const double e = buf.data[k][0];
      total += std::abs(e);
      largest = std::max(largest, e);
      if (e < 0.0) negative += -e;
      sqrt_eig_[k] = e > 0.0 ? std::sqrt(e / static_cast<double>(m)) : 0.0;
    }
    double most_negative = 0.0;
    for (std::size_t k = 0; k < m; ++k) most_negative = std::min(most_negative, buf.data[k][0]);
    clipped_fraction_ = total > 0.0 ? negative / total : 0.0;
    if (most_negative >= -1e-10 * largest || factor >= 8) break;
  }

  plan_ = std::make_shared<Plan>();
  const std::size_t m = static_cast<std::size_t>(mx_) * my_;
  FftwBuffer scratch(m);
  std::lock_guard lock(fftw_planner_mutex());
  plan_->plan =
      fftw_plan_dft_2d(my_, mx_, scratch.data, scratch.data, FFTW_FORWARD, FFTW_ESTIMATE);
}

std::vector<double> GaussianFieldSampler::sample(Philox& rng) const {
  const std::size_t m = static_cast<std::size_t>(mx_) * my_;
  FftwBuffer buf(m);
  for (std::size_t k = 0; k < m; ++k) {
    buf.data[k][0] = sqrt_eig_[k] * rng.normal();
    buf.data[k][1] = sqrt_eig_[k] * rng.normal();
  }
  fftw_execute_dft(plan_->plan, buf.data, buf.data);
  std::vector<double> out(static_cast<std::size_t>(nx_) * ny_);
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      out[static_cast<std::size_t>(j) * nx_ + i] = buf.data[static_cast<std::size_t>(j) * mx_ + i][0];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Driving field

double DrivingField::max() const {
  return intensity.empty() ? 0.0 : *std::max_element(intensity.begin(), intensity.end());
}

double DrivingField::value_at(Point p) const {
  const int ix = std::clamp(static_cast<int>(std::floor((p.x - origin.x) / pixel)), 0, nx - 1);
  const int iy = std::clamp(static_cast<int>(std::floor((p.y - origin.y) / pixel)), 0, ny - 1);
  return intensity[static_cast<std::size_t>(iy) * nx + ix];
}

double DrivingField::average_over(const Rect& r) const {
  const int ix0 = std::max(0, static_cast<int>(std::floor((r.x0 - origin.x) / pixel)));
  const int iy0 = std::max(0, static_cast<int>(std::floor((r.y0 - origin.y) / pixel)));
  const int ix1 = std::min(nx - 1, static_cast<int>(std::floor((r.x1 - origin.x) / pixel)));
  const int iy1 = std::min(ny - 1, static_cast<int>(std::floor((r.y1 - origin.y) / pixel)));
  double mass = 0.0;
  double area = 0.0;
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      const Rect px{origin.x + ix * pixel, origin.y + iy * pixel, origin.x + (ix + 1) * pixel,
                    origin.y + (iy + 1) * pixel};
      const double a = intersection_area(px, r);
      mass += a * intensity[static_cast<std::size_t>(iy) * nx + ix];
      area += a;
    }
  }
  return area > 0.0 ? mass / area : 0.0;
}

Point DrivingField::pixel_center(std::size_t k) const {
  const auto ix = static_cast<int>(k % static_cast<std::size_t>(nx));
  const auto iy = static_cast<int>(k / static_cast<std::size_t>(nx));
  return {origin.x + (ix + 0.5) * pixel, origin.y + (iy + 0.5) * pixel};
}

// ---------------------------------------------------------------------------
// Cox

namespace {

GaussianFieldSampler make_cox_sampler(const CoxSpec& s, const Window& w) {
  ProcessSpec{s}.validate(w);
  const double var = s.sigma_y * s.sigma_y;
  const double range = s.range;
  return GaussianFieldSampler(raster_cells(w.outer().width(), s.raster_side),
                              raster_cells(w.outer().height(), s.raster_side), s.raster_side,
                              [var, range](double h) { return var * std::exp(-h / range); });
}

}  // namespace

CoxSimulator::CoxSimulator(const CoxSpec& spec, const Window& window, SimOptions options)
    : spec_(spec), window_(window), options_(options), sampler_(make_cox_sampler(spec, window)) {}

CoxRealization CoxSimulator::operator()(std::uint64_t seed, std::uint64_t stream) const {
  Philox rng(seed, stream);
  DrivingField field;
  field.origin = {window_.outer().x0, window_.outer().y0};
  field.pixel = spec_.raster_side;
  field.nx = sampler_.nx();
  field.ny = sampler_.ny();
  field.intensity = sampler_.sample(rng);
  for (double& v : field.intensity) {
    v += spec_.lambda;
    if (v < 0.0) {
      v = 0.0;
      ++field.truncated_pixels;
    }
  }
  const Rect& outer = window_.outer();
  const double peak = field.max();
  check_budget(peak * outer.area(), options_, "candidate points");
  std::vector<Point> candidates;
  uniform_points(rng, outer, rng.poisson(peak * outer.area()), candidates);
  std::vector<Point> accepted;
  accepted.reserve(candidates.size());
  for (const Point& p : candidates) {
    if (rng.uniform() * peak < field.value_at(p)) accepted.push_back(p);
  }
  return {keep_observed(std::move(accepted), window_), std::move(field)};
}

// ---------------------------------------------------------------------------

PointPattern simulate(const ProcessSpec& spec, const Window& window, std::uint64_t seed,
                      std::uint64_t stream, const SimOptions& options) {
  spec.validate(window);
  Philox rng(seed, stream);
  return std::visit(
      overloaded{
          [&](const PoissonSpec& s) { return simulate_poisson(s, window, rng, options); },
          [&](const ThomasSpec& s) { return simulate_thomas(s, window, rng, options); },
          [&](const MaternIISpec& s) { return simulate_matern2(s, window, rng, options); },
          [&](const CoxSpec& s) { return CoxSimulator(s, window, options)(seed, stream).pattern; },
      },
      spec.kind);
}

SimBatch simulate_batch(const ProcessSpec& spec, const Window& window, std::uint64_t seed,
                        std::size_t replicates, const SimOptions& options) {
  spec.validate(window);
  SimBatch batch{spec, seed, std::vector<PointPattern>(replicates), {}};
  if (const auto* cox = std::get_if<CoxSpec>(&spec.kind)) {
    const CoxSimulator sim(*cox, window, options);
    batch.fields.resize(replicates);
    parallel_for(replicates, [&](std::size_t r) {
      CoxRealization real = sim(seed, r);
      batch.replicates[r] = std::move(real.pattern);
      batch.fields[r] = std::move(real.field);
    });
  } else {
    parallel_for(replicates, [&](std::size_t r) {
      batch.replicates[r] = simulate(spec, window, seed, r, options);
    });
  }
  return batch;
}

PairCorrelation pcf_model(const ProcessSpec& spec) {
  return std::visit(
      overloaded{
          [](const PoissonSpec&) { return PairCorrelation::poisson(); },
          [](const ThomasSpec& s) {
            const double amp = 1.0 / (4.0 * std::numbers::pi * s.sigma * s.sigma * s.kappa);
            const double four_s2 = 4.0 * s.sigma * s.sigma;
            auto shape = [four_s2](double r) { return std::exp(-r * r / four_s2); };
            const double r_max = tail_cutoff(amp, shape, s.sigma);
            return PairCorrelation::parametric(
                [amp, shape](double r) { return 1.0 + amp * shape(r); }, r_max,
                ProcessSpec{s}.describe());
          },
          [](const MaternIISpec&) -> PairCorrelation {
            fail(ErrorKind::NoClosedForm,
                 "pcf_model: matern2 has no closed-form pair correlation; estimate it empirically");
          },
          [](const CoxSpec& s) {
            const double amp = (s.sigma_y * s.sigma_y) / (s.lambda * s.lambda);
            const double range = s.range;
            auto shape = [range](double r) { return std::exp(-r / range); };
            const double r_max = tail_cutoff(amp, shape, s.range);
            return PairCorrelation::parametric(
                [amp, shape](double r) { return 1.0 + amp * shape(r); }, r_max,
                ProcessSpec{s}.describe());
          },
      },
      spec.kind);
}

MomentReport mc_moment_oracle(const ProcessSpec& spec, const Window& window, const Rect& b,
                              const Rect& d, std::size_t replicates, std::uint64_t seed,
                              const SimOptions& options) {
  if (replicates < 100) {
    fail(ErrorKind::InvalidArgument, "mc_moment_oracle: needs at least 100 replicates");
  }
  spec.validate(window);
  std::vector<double> nb(replicates);
  std::vector<double> nd(replicates);
  std::unique_ptr<CoxSimulator> cox;
  if (const auto* c = std::get_if<CoxSpec>(&spec.kind)) {
    cox = std::make_unique<CoxSimulator>(*c, window, options);
  }
  parallel_for(replicates, [&](std::size_t r) {
    const PointPattern p = cox ? (*cox)(seed, r).pattern : simulate(spec, window, seed, r, options);
    double cb = 0.0;
    double cd = 0.0;
    for (const Point& q : p.points) {
      cb += b.contains_half_open(q) ? 1.0 : 0.0;
      cd += d.contains_half_open(q) ? 1.0 : 0.0;
    }
    nb[r] = cb;
    nd[r] = cd;
  });

  const double n = static_cast<double>(replicates);
  auto mean_se = [n](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return MomentEstimate{m, std::sqrt(ss / (n - 1.0) / n)};
  };
  MomentReport rep;
  rep.replicates = replicates;
  rep.mean_b = mean_se(nb);
  std::vector<double> sq(replicates);
  std::vector<double> dev2(replicates);
  std::vector<double> cross(replicates);
  const MomentEstimate md = mean_se(nd);
  for (std::size_t r = 0; r < replicates; ++r) {
    sq[r] = nb[r] * nb[r];
    dev2[r] = (nb[r] - rep.mean_b.value) * (nb[r] - rep.mean_b.value);
    cross[r] = (nb[r] - rep.mean_b.value) * (nd[r] - md.value);
  }
  rep.mean_b2 = mean_se(sq);
  // Unbiased (n-1) versions of the centred moments, SE from the spread of the products.
  rep.var_b = mean_se(dev2);
  rep.var_b.value *= n / (n - 1.0);
  rep.cov_bd = mean_se(cross);
  rep.cov_bd.value *= n / (n - 1.0);
  return rep;
}

}  // namespace ppk
