#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tqlm/symmetric_model.hpp"

namespace tqlm {

/// E_n(mu, Sigma, g): Sigma symmetric (within 1e-12) and positive definite.
class EllipticalModel {
 public:
  EllipticalModel(Eigen::VectorXd mu, Eigen::MatrixXd sigma, DensityGenerator generator);

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(mu_.size()); }
  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  const DensityGenerator& generator() const noexcept { return generator_; }

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  DensityGenerator generator_;
};

/// Portfolio weights summing to one within 1e-12; short positions allowed.
class PortfolioWeights {
 public:
  explicit PortfolioWeights(Eigen::VectorXd pi);
  const Eigen::VectorXd& pi() const noexcept { return pi_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(pi_.size()); }
  double operator[](std::size_t i) const { return pi_(static_cast<Eigen::Index>(i)); }

 private:
  Eigen::VectorXd pi_;
};

/// pi^T X ~ S1(pi^T mu, pi^T Sigma pi, g).
SymmetricModel marginalize(const EllipticalModel& m, const PortfolioWeights& w);

/// pi^T mu + sqrt(pi^T Sigma pi) * rho^alpha_{gamma sqrt(pi^T Sigma pi)}(Z).
double portfolio_tcerm(const EllipticalModel& m, const PortfolioWeights& w, double alpha, double gamma);

struct Partition {
  Eigen::MatrixXd sigma11;  // leading (n-1) x (n-1) block
  Eigen::VectorXd sigma1;   // last column without its diagonal entry
  double sigma_nn;
  Eigen::MatrixXd Q;        // Sigma11 - 1 sigma1^T - sigma1 1^T + sigma_nn 1 1^T
  Eigen::VectorXd delta;    // mu_n 1 - mu_1
};

/// Throws ParameterError for n < 2 and InternalError if Q fails to be positive definite.
Partition partition(const EllipticalModel& m);

/// Which scalar function enters the root equation r * s1(D r^2 + c0) = 1/2.
///   scale_squared  s(t) = t^2 rho^alpha_{t^2 gamma}(Z)
///   variance       s(t) = sqrt(t) rho^alpha_{gamma sqrt(t)}(Z), the portfolio risk
///             at variance t, whose derivative gives the stationarity condition
///             along pi = phi1 + r phi2.
enum class RootEquationForm { scale_squared, variance };
std::string to_string(RootEquationForm form);

double s_function(double t, const DensityGenerator& g, double alpha, double gamma,
                  RootEquationForm form = RootEquationForm::scale_squared);
/// Central difference with h = max(1e-5, 1e-5 t), Richardson-extrapolated once.
double s_prime(double t, const DensityGenerator& g, double alpha, double gamma,
               RootEquationForm form = RootEquationForm::scale_squared);

struct BruteForceResult {
  PortfolioWeights weights;
  double objective;
};

/// Direct minimization of portfolio_tcerm over sum(pi) = 1: grid seed around
/// the minimum-variance weights, then Nelder-Mead restarts in the n-1 free
/// coordinates until the objective stalls below 1e-10.
BruteForceResult brute_force_min(const EllipticalModel& m, double alpha, double gamma);

struct MinRiskResult {
  Eigen::VectorXd phi1;
  Eigen::VectorXd phi2;
  double r_star;
  PortfolioWeights pi_star;
  double objective;
  RootEquationForm form;
  std::size_t sign_changes;  // over the scanned grid of r
  PortfolioWeights oracle;
  double oracle_objective;
  double max_deviation;  // max_i |pi*_i - oracle_i|
  bool discrepancy;      // deviation above 1e-3 or more than one sign change
  std::string diagnostic;
};

/// pi* = phi1 + r* phi2 with r* the positive root of 2 r s1(D r^2 + c0) - 1,
/// D = Delta^T Q^{-1} Delta, c0 = (1^T Sigma^{-1} 1)^{-1}. The result is always
/// compared against brute_force_min; a mismatch is reported, not hidden.
/// Throws NoRootError when the scan finds no sign change.
MinRiskResult min_risk_weights(const EllipticalModel& m, double alpha, double gamma,
                               RootEquationForm form = RootEquationForm::scale_squared);

/// Sigma^{-1} 1 / (1^T Sigma^{-1} 1).
Eigen::VectorXd minimum_variance_weights(const EllipticalModel& m);

}  // namespace tqlm
