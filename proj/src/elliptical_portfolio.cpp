#include "tqlm/elliptical_portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "numerics.hpp"
#include "tqlm/errors.hpp"
#include "tqlm/format.hpp"
#include "tqlm/risk_engine.hpp"

namespace tqlm {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double standard_tcerm(const DensityGenerator& g, double alpha, double gamma) {
  return tcerm_analytic(SymmetricModel(g, 0.0, 1.0), alpha, gamma);
}

// Nelder-Mead on R^d from a starting simplex of edge `step`.
struct SimplexResult {
  VectorXd x;
  double f;
};

SimplexResult nelder_mead(const std::function<double(const VectorXd&)>& f, const VectorXd& start,
                          double step, int max_iter) {
  const Index d = start.size();
  std::vector<VectorXd> pts(d + 1, start);
  std::vector<double> vals(d + 1);
  for (Index i = 0; i < d; ++i) pts[i + 1](i) += step;
  for (Index i = 0; i <= d; ++i) vals[i] = f(pts[i]);

  std::vector<Index> order(d + 1);
  for (int iter = 0; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return vals[a] < vals[b]; });
    const Index best = order.front();
    const Index worst = order.back();
    const Index second = order[d - 1];

    double diameter = 0.0;
    for (Index i = 0; i <= d; ++i) diameter = std::max(diameter, (pts[i] - pts[best]).lpNorm<Eigen::Infinity>());
    const double spread = vals[worst] - vals[best];
    if (diameter < 1e-11 && spread <= 1e-15 * (1.0 + std::fabs(vals[best]))) break;

    VectorXd centroid = VectorXd::Zero(d);
    for (Index i = 0; i <= d; ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(d);

    const VectorXd reflected = centroid + (centroid - pts[worst]);
    const double f_r = f(reflected);
    if (f_r < vals[best]) {
      const VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double f_e = f(expanded);
      if (f_e < f_r) {
        pts[worst] = expanded;
        vals[worst] = f_e;
      } else {
        pts[worst] = reflected;
        vals[worst] = f_r;
      }
      continue;
    }
    if (f_r < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = f_r;
      continue;
    }
    const bool outside = f_r < vals[worst];
    const VectorXd contracted =
        outside ? VectorXd(centroid + 0.5 * (reflected - centroid))
                : VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double f_c = f(contracted);
    if (f_c < (outside ? f_r : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = f_c;
      continue;
    }
    for (Index i = 0; i <= d; ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = f(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return {pts[it - vals.begin()], *it};
}

VectorXd full_weights(const VectorXd& free) {
  const Index n = free.size() + 1;
  VectorXd pi(n);
  pi.head(n - 1) = free;
  pi(n - 1) = 1.0 - free.sum();
  return pi;
}

}  // namespace

// ---------------------------------------------------------------------------

EllipticalModel::EllipticalModel(VectorXd mu, MatrixXd sigma, DensityGenerator generator)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), generator_(generator) {
  const Index n = mu_.size();
  if (n < 1) throw InputError("elliptical model needs at least one component");
  if (sigma_.rows() != n || sigma_.cols() != n) {
    throw InputError("scale matrix is " + std::to_string(sigma_.rows()) + "x" +
                     std::to_string(sigma_.cols()) + ", expected " + std::to_string(n) + "x" +
                     std::to_string(n));
  }
  if (!mu_.allFinite() || !sigma_.allFinite()) throw InputError("elliptical model has non-finite entries");
  const double asym = (sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) {
    throw ParameterError("scale matrix is not symmetric (max |S - S^T| = " + format_shortest(asym) + ")");
  }
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sigma_, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw ParameterError("scale matrix is not positive definite");
  }
}

PortfolioWeights::PortfolioWeights(VectorXd pi) : pi_(std::move(pi)) {
  if (pi_.size() == 0 || !pi_.allFinite()) throw InputError("weights must be finite and nonempty");
  const double s = pi_.sum();
  if (std::fabs(s - 1.0) > 1e-12) {
    throw ParameterError("weights sum to " + format_g17(s) + ", expected 1");
  }
}

SymmetricModel marginalize(const EllipticalModel& m, const PortfolioWeights& w) {
  if (w.size() != m.dimension()) throw InputError("weight vector and model differ in dimension");
  const double var = w.pi().dot(m.sigma() * w.pi());
  if (!(var > 0.0)) throw InternalError("portfolio variance is not positive");
  return SymmetricModel(m.generator(), w.pi().dot(m.mu()), std::sqrt(var));
}

double portfolio_tcerm(const EllipticalModel& m, const PortfolioWeights& w, double alpha, double gamma) {
  const SymmetricModel r = marginalize(m, w);
  return r.mu() + r.sigma() * standard_tcerm(m.generator(), alpha, gamma * r.sigma());
}

Partition partition(const EllipticalModel& m) {
  const Index n = static_cast<Index>(m.dimension());
  if (n < 2) throw ParameterError("partition needs at least two assets");
  const Index k = n - 1;
  const MatrixXd& s = m.sigma();
  Partition p;
  p.sigma11 = s.topLeftCorner(k, k);
  p.sigma1 = s.col(k).head(k);
  p.sigma_nn = s(k, k);
  const VectorXd one = VectorXd::Ones(k);
  p.Q = p.sigma11 - one * p.sigma1.transpose() - p.sigma1 * one.transpose() +
        p.sigma_nn * one * one.transpose();
  p.delta = m.mu()(k) * one - m.mu().head(k);
  const Eigen::LLT<MatrixXd> llt(p.Q);
  if (llt.info() != Eigen::Success) throw InternalError("partition matrix Q is not positive definite");
  return p;
}

std::string to_string(RootEquationForm form) {
  return form == RootEquationForm::scale_squared ? "scale_squared" : "variance";
}

double s_function(double t, const DensityGenerator& g, double alpha, double gamma, RootEquationForm form) {
  if (!(t > 0.0)) throw ParameterError("s(t) needs t > 0");
  if (form == RootEquationForm::scale_squared) return t * t * standard_tcerm(g, alpha, t * t * gamma);
  const double root = std::sqrt(t);
  return root * standard_tcerm(g, alpha, gamma * root);
}

double s_prime(double t, const DensityGenerator& g, double alpha, double gamma, RootEquationForm form) {
  const double h = std::max(1e-5, 1e-5 * t);
  const auto central = [&](double step) {
    return (s_function(t + step, g, alpha, gamma, form) - s_function(t - step, g, alpha, gamma, form)) /
           (2.0 * step);
  };
  const double coarse = central(h);
  const double fine = central(0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

VectorXd minimum_variance_weights(const EllipticalModel& m) {
  const Eigen::LLT<MatrixXd> llt(m.sigma());
  const VectorXd x = llt.solve(VectorXd::Ones(m.mu().size()));
  return x / x.sum();
}

BruteForceResult brute_force_min(const EllipticalModel& m, double alpha, double gamma) {
  const Index n = static_cast<Index>(m.dimension());
  if (n < 2) throw ParameterError("portfolio optimization needs at least two assets");
  const Index d = n - 1;
  const auto objective = [&](const VectorXd& free) {
    const VectorXd pi = full_weights(free);
    const double var = pi.dot(m.sigma() * pi);
    const double s = std::sqrt(var);
    return pi.dot(m.mu()) + s * standard_tcerm(m.generator(), alpha, gamma * s);
  };

  // Coarse grid around the minimum-variance point.
  const VectorXd centre = minimum_variance_weights(m).head(d);
  static constexpr double kOffsets[] = {-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0};
  constexpr Index kLevels = 7;
  VectorXd best = centre;
  double best_f = objective(centre);
  Index cells = 1;
  for (Index i = 0; i < d; ++i) cells *= kLevels;
  for (Index c = 0; c < cells; ++c) {
    VectorXd x = centre;
    Index rest = c;
    for (Index i = 0; i < d; ++i) {
      x(i) += kOffsets[rest % kLevels];
      rest /= kLevels;
    }
    const double fx = objective(x);
    if (fx < best_f) {
      best_f = fx;
      best = x;
    }
  }

  // Local refinement with shrinking restarts.
  double step = 0.1;
  for (int restart = 0; restart < 12; ++restart) {
    const SimplexResult r = nelder_mead(objective, best, step, 4000 * static_cast<int>(d));
    const double gain = best_f - r.f;
    if (r.f < best_f) {
      best = r.x;
      best_f = r.f;
    }
    if (restart > 0 && gain <= 1e-14 * (1.0 + std::fabs(best_f))) break;
    step = std::max(step * 0.1, 1e-6);
  }
  return BruteForceResult{PortfolioWeights(full_weights(best)), best_f};
}

MinRiskResult min_risk_weights(const EllipticalModel& m, double alpha, double gamma, RootEquationForm form) {
  if (!m.generator().has_mgf()) {
    throw MgfNonexistentError("Student-t has no moment generating function");
  }
  const Partition p = partition(m);
  const Index n = static_cast<Index>(m.dimension());
  const Index k = n - 1;

  const Eigen::LLT<MatrixXd> sigma_llt(m.sigma());
  const VectorXd sigma_inv_one = sigma_llt.solve(VectorXd::Ones(n));
  const double c0 = 1.0 / sigma_inv_one.sum();
  const VectorXd phi1 = c0 * sigma_inv_one;

  const Eigen::LLT<MatrixXd> q_llt(p.Q);
  const VectorXd q_inv_delta = q_llt.solve(p.delta);
  const double d_coef = p.delta.dot(q_inv_delta);
  VectorXd phi2(n);
  phi2.head(k) = q_inv_delta;
  phi2(k) = -q_inv_delta.sum();

  const auto root_fn = [&](double r) {
    return 2.0 * r * s_prime(d_coef * r * r + c0, m.generator(), alpha, gamma, form) - 1.0;
  };

  std::vector<double> scanned_r;
  std::vector<double> scanned_f;
  for (int i = 0; i <= 40; ++i) {
    const double r = 1e-3 * std::ldexp(1.0, i);
    scanned_r.push_back(r);
    scanned_f.push_back(root_fn(r));
  }
  std::size_t sign_changes = 0;
  std::size_t first = scanned_r.size();
  for (std::size_t i = 0; i + 1 < scanned_r.size(); ++i) {
    if ((scanned_f[i] > 0.0) != (scanned_f[i + 1] > 0.0)) {
      ++sign_changes;
      if (first == scanned_r.size()) first = i;
    }
  }
  if (sign_changes == 0) {
    std::vector<std::pair<double, double>> scanned;
    for (std::size_t i = 0; i < scanned_r.size(); ++i) scanned.emplace_back(scanned_r[i], scanned_f[i]);
    throw NoRootError("root equation 2 r s1(D r^2 + c0) - 1 has no sign change on [1e-3, " +
                          format_shortest(scanned_r.back()) + "]",
                      std::move(scanned));
  }
  const double r_star = numerics::solve_bracketed(root_fn, scanned_r[first], scanned_r[first + 1],
                                                  scanned_f[first], scanned_f[first + 1]);

  VectorXd pi = phi1 + r_star * phi2;
  pi(k) = 1.0 - pi.head(k).sum();
  const PortfolioWeights pi_star(pi);
  const BruteForceResult oracle = brute_force_min(m, alpha, gamma);
  const double deviation = (pi_star.pi() - oracle.weights.pi()).cwiseAbs().maxCoeff();

  MinRiskResult out{phi1,
                    phi2,
                    r_star,
                    pi_star,
                    portfolio_tcerm(m, pi_star, alpha, gamma),
                    form,
                    sign_changes,
                    oracle.weights,
                    oracle.objective,
                    deviation,
                    deviation > 1e-3 || sign_changes > 1,
                    ""};
  if (deviation > 1e-3) {
    out.diagnostic = "root-equation weights differ from the direct minimizer by " + format_g17(deviation) +
                     " (objective " + format_g17(out.objective) + " vs " + format_g17(oracle.objective) +
                     ")";
  } else if (sign_changes > 1) {
    out.diagnostic = "root function changes sign " + std::to_string(sign_changes) + " times";
  }
  return out;
}

}  // namespace tqlm
