#pragma once

// Quadrature and root-finding shared by the model modules. Thin wrappers over
// Boost.Math so every caller uses the same tolerances.

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "tqlm/errors.hpp"

namespace tqlm::numerics {

inline constexpr double kQuadratureRelTol = 1e-12;

/// Adaptive 31-point Gauss-Kronrod on [a, b]; b may be +infinity.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = kQuadratureRelTol,
                 unsigned max_depth = 18) {
  if (a == b) return 0.0;
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, max_depth, rel_tol, &error);
  if (!std::isfinite(value)) {
    throw RangeError("quadrature produced a non-finite value");
  }
  return value;
}

/// Root of a continuous f on [lo, hi] with f(lo), f(hi) of opposite sign (or zero).
/// Returns the bracket midpoint after TOMS 748 has shrunk the bracket to ~1e-15 relative.
template <class F>
double solve_bracketed(F&& f, double lo, double hi, double f_lo, double f_hi) {
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw InternalError("solve_bracketed called without a sign change");
  }
  std::uintmax_t max_iter = 300;
  const auto tol = [](double x, double y) {
    return std::fabs(x - y) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                   std::max({std::fabs(x), std::fabs(y), 1e-300});
  };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, max_iter);
  return 0.5 * (a + b);
}

/// Kahan-Babuska (Neumaier) summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace tqlm::numerics
