#include "ppk/pcf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ppk/errors.hpp"

namespace ppk {

PairCorrelation::PairCorrelation() = default;

PairCorrelation PairCorrelation::poisson() { return PairCorrelation(); }

PairCorrelation PairCorrelation::parametric(std::function<double(double)> g, double r_max,
                                            std::string label) {
  if (!(r_max >= 0.0) || !std::isfinite(r_max)) {
    fail(ErrorKind::InvalidArgument, "pcf: r_max must be finite and nonnegative");
  }
  PairCorrelation out;
  out.kind_ = Kind::Parametric;
  out.fn_ = std::move(g);
  out.r_max_ = r_max;
  out.label_ = std::move(label);
  return out;
}

PairCorrelation PairCorrelation::tabulated(std::vector<double> r, std::vector<double> g) {
  if (r.empty() || r.size() != g.size()) {
    fail(ErrorKind::InvalidArgument, "pcf: table needs matching, nonempty r and g columns");
  }
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!std::isfinite(r[k]) || !std::isfinite(g[k])) {
      fail(ErrorKind::InvalidArgument, "pcf: non-finite table entry at row " + std::to_string(k));
    }
    if (g[k] < 0.0) fail(ErrorKind::InvalidArgument, "pcf: negative g at row " + std::to_string(k));
    if (k > 0 && !(r[k] > r[k - 1])) {
      fail(ErrorKind::InvalidArgument, "pcf: r knots must be strictly ascending");
    }
  }
  if (g.back() != 1.0) {
    fail(ErrorKind::InvalidArgument, "pcf: last tabulated value must be 1 (continuous tail)");
  }
  PairCorrelation out;
  out.kind_ = Kind::Tabulated;
  out.r_max_ = r.back();
  out.r_ = std::move(r);
  out.g_ = std::move(g);
  out.label_ = "tabulated";
  return out;
}

double PairCorrelation::operator()(double r) const {
  if (kind_ == Kind::Poisson || r > r_max_) return 1.0;
  if (kind_ == Kind::Parametric) return fn_(r);
  if (r <= r_.front()) return g_.front();
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  const std::size_t hi = static_cast<std::size_t>(it - r_.begin());
  if (hi >= r_.size()) return g_.back();
  const std::size_t lo = hi - 1;
  const double t = (r - r_[lo]) / (r_[hi] - r_[lo]);
  return g_[lo] + t * (g_[hi] - g_[lo]);
}

double PairCorrelation::k_function(double r, int panels) const {
  if (r <= 0.0) return 0.0;
  if (panels % 2) ++panels;
  const double h = r / panels;
  auto f = [this](double s) { return 2.0 * std::numbers::pi * s * (*this)(s); };
  double acc = f(0.0) + f(r);
  for (int k = 1; k < panels; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(k * h);
  return acc * h / 3.0;
}

double tail_cutoff(double amplitude, const std::function<double(double)>& shape, double scale,
                   double tol) {
  if (std::abs(amplitude) < tol) return 0.0;
  double hi = scale;
  while (std::abs(amplitude * shape(hi)) >= tol) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (std::abs(amplitude * shape(mid)) >= tol ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace ppk
