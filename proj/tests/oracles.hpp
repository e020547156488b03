#pragma once

// Reference computations for the tests. Deliberately built from plain
// libm calls and textbook algorithms, sharing no code with the library.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

using Fn = std::function<double(double)>;

inline double simpson_rec(const Fn& f, double a, double b, double fa, double fm, double fb, double whole,
                          double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Adaptive Simpson on [a,b], split into `pieces` panels first.
inline double integrate(const Fn& f, double a, double b, double tol = 1e-13, int pieces = 64) {
  double total = 0.0;
  const double h = (b - a) / pieces;
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + i * h, hi = lo + h, mid = 0.5 * (lo + hi);
    const double flo = f(lo), fmid = f(mid), fhi = f(hi);
    total += simpson_rec(f, lo, hi, flo, fmid, fhi, h / 6.0 * (flo + 4.0 * fmid + fhi), tol / pieces, 40);
  }
  return total;
}

// Integral over [a, inf) through x = a + s/(1-s).
inline double integrate_to_inf(const Fn& f, double a, double tol = 1e-13) {
  const auto g = [&](double s) {
    if (s >= 1.0) return 0.0;
    const double d = 1.0 - s;
    const double v = f(a + s / d) / (d * d);
    return std::isfinite(v) ? v : 0.0;
  };
  return integrate(g, 0.0, 1.0, tol, 256);
}

inline double bisect(const Fn& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }
inline double normal_quantile(double p) {
  return bisect([p](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)) - p; }, -40.0, 40.0);
}

inline double student_pdf(double m, double z) {
  const double c = std::exp(std::lgamma(0.5 * (m + 1)) - std::lgamma(0.5 * m)) / std::sqrt(m * std::numbers::pi);
  return c * std::pow(1.0 + z * z / m, -0.5 * (m + 1));
}

// g(u) = e^{-u}/(1+e^{-u})^2 up to the constant fixed by unit mass of g(z^2/2).
inline double logistic_kernel(double z) {
  const double e = std::exp(-0.5 * z * z);
  return e / ((1.0 + e) * (1.0 + e));
}
inline double logistic_constant() {
  static const double c = 1.0 / (2.0 * integrate(logistic_kernel, 0.0, 60.0));
  return c;
}
inline double logistic_pdf(double z) { return logistic_constant() * logistic_kernel(z); }

enum class Family { normal, student5, logistic };

inline double pdf(Family f, double z) {
  switch (f) {
    case Family::normal: return normal_pdf(z);
    case Family::student5: return student_pdf(5.0, z);
    case Family::logistic: return logistic_pdf(z);
  }
  return 0.0;
}

inline double survival(Family f, double z) {
  if (f == Family::normal) return normal_sf(z);
  if (z < 0) return 1.0 - survival(f, -z);
  return integrate_to_inf([f](double x) { return pdf(f, x); }, z);
}

inline double quantile(Family f, double p) {
  return bisect([f, p](double z) { return (1.0 - survival(f, z)) - p; }, -200.0, 200.0, 120);
}

// Standard-member tail moments on [q_alpha, inf) of an arbitrary function h.
inline double tail_expectation(Family f, double alpha, const Fn& h) {
  const double q = quantile(f, alpha);
  return integrate_to_inf([&](double z) { return h(z) * pdf(f, z); }, q) / (1.0 - alpha);
}

// Conditional tail value U^{-1}(E[U(mu + sigma Z) | Z >= q]).
inline double tqlm(Family f, double mu, double sigma, double alpha, const Fn& u, const Fn& u_inv) {
  return u_inv(tail_expectation(f, alpha, [&](double z) { return u(mu + sigma * z); }));
}

// (1/g) log E[e^{g X} | X >= VaR] for X = mu + sigma Z, shifted for stability.
inline double entropic_tail(Family f, double mu, double sigma, double alpha, double g) {
  const double q = quantile(f, alpha);
  const double x0 = mu + sigma * q;
  const double e = tail_expectation(f, alpha, [&](double z) { return std::exp(g * (mu + sigma * z - x0)); });
  return x0 + std::log(e) / g;
}

// (1/g) log E e^{gX} over the whole line.
inline double entropic_full(Family f, double mu, double sigma, double g) {
  const auto h = [&](double z) { return std::exp(g * sigma * z) * pdf(f, z); };
  const double mass = integrate(h, -80.0, 80.0, 1e-14, 512);
  return mu + std::log(mass) / g;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace oracle
