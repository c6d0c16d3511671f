#pragma once

#include <functional>
#include <string>
#include <vector>

namespace ppk {

/// Pair correlation function g(r) of a stationary isotropic process.
///
/// Either a closed form or a table interpolated linearly between knots. In
/// both cases g(r) == 1 exactly for r > r_max, which gives g - 1 compact
/// support for the covariance integrals.
class PairCorrelation {
 public:
  /// Complete spatial randomness, g == 1.
  PairCorrelation();

  static PairCorrelation poisson();
  static PairCorrelation parametric(std::function<double(double)> g, double r_max,
                                    std::string label);
  /// Knots must be strictly ascending with g >= 0 and the last value equal to 1;
  /// below the first knot the first value is held.
  static PairCorrelation tabulated(std::vector<double> r, std::vector<double> g);

  double operator()(double r) const;

  double r_max() const noexcept { return r_max_; }
  bool is_poisson() const noexcept { return kind_ == Kind::Poisson; }
  bool is_tabulated() const noexcept { return kind_ == Kind::Tabulated; }
  const std::vector<double>& knots() const noexcept { return r_; }
  const std::vector<double>& values() const noexcept { return g_; }
  const std::string& label() const noexcept { return label_; }

  /// K(r) = int_0^r 2 pi s g(s) ds by composite Simpson quadrature.
  double k_function(double r, int panels = 512) const;

 private:
  enum class Kind { Poisson, Parametric, Tabulated };

  Kind kind_ = Kind::Poisson;
  std::function<double(double)> fn_;
  std::vector<double> r_;
  std::vector<double> g_;
  double r_max_ = 0.0;
  std::string label_ = "poisson";
};

/// Smallest r beyond which |amplitude * shape(r)| < tol for a decreasing
/// shape with shape(0) = 1; used to close parametric forms.
double tail_cutoff(double amplitude, const std::function<double(double)>& shape, double scale,
                   double tol = 1e-10);

}  // namespace ppk
