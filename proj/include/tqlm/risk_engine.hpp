#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tqlm/sample_set.hpp"
#include "tqlm/symmetric_model.hpp"
#include "tqlm/utility_function.hpp"

namespace tqlm {

// Tail Quasi-Linear Mean
//
//   rho_U^alpha(X) = U^{-1}( E[ U(X) | X >= VaR_alpha(X) ] )
//
// evaluated empirically on a SampleSet or analytically on a SymmetricModel.
// With U linear it is the Conditional Tail Expectation; with U(x) = e^{gx}/g it
// is the tail conditional entropic measure (1/g) log E[e^{gX} | X >= VaR].
//
// Entropic levels with |gamma| below kGammaCteCutoff are evaluated as CTE.

inline constexpr double kGammaCteCutoff = 1e-8;

// ---- empirical ------------------------------------------------------------

/// ceil(alpha*n)-th order statistic.
double var_empirical(const SampleSet& s, double alpha);
TailSlice tail_slice(const SampleSet& s, double alpha);
double cte_empirical(const SampleSet& s, double alpha);
/// Population (1/k) variance of the k tail members.
double tail_variance_empirical(const SampleSet& s, double alpha);
/// Extended real: +inf only through the capped utility.
double tqlm_empirical(const SampleSet& s, double alpha, const UtilityFunction& u);
double tcerm_empirical(const SampleSet& s, double alpha, double gamma);

/// U^{-1}(mean of U over `values`), evaluated around an anchor so that constant
/// inputs come back exactly and exponential utilities cannot overflow.
double certainty_equivalent(std::span<const double> values, const UtilityFunction& u);

/// Unconditional quasi-linear mean U^{-1}(E U(X)) of the whole sample.
double quasi_linear_mean(const SampleSet& s, const UtilityFunction& u);

// ---- analytic (symmetric models) -----------------------------------------

double var_analytic(const SymmetricModel& model, double alpha);
/// mu + sigma * Gbar(q^2/2) / (1 - alpha), q = VaR_alpha(Z).
double cte_analytic(const SymmetricModel& model, double alpha);
double tail_variance_analytic(const SymmetricModel& model, double alpha);
/// Reduces to the standard member and integrates U(sigma z + mu) g(z^2/2) over
/// [q_alpha(Z), inf). Throws MgfNonexistentError when that integral diverges.
double tqlm_analytic(const SymmetricModel& model, double alpha, const UtilityFunction& u);
/// mu + kappa(g sigma)/g + (1/g) log( Fbar_Y(q_alpha(Z)) / (1 - alpha) ).
double tcerm_analytic(const SymmetricModel& model, double alpha, double gamma);
/// Normal closed form mu + g sigma^2/2 + (1/g) log( Phibar(Phi^{-1}(alpha) - g sigma) / (1 - alpha) ).
double tcerm_normal(double mu, double sigma, double alpha, double gamma);
/// U^{-1}(E U(X)) over the whole line; defined for linear and exponential U.
double quasi_linear_mean(const SymmetricModel& model, const UtilityFunction& u);

/// Second-order approximation cte - 0.5 * risk_aversion(u, evaluation_point) * tv.
double taylor_tqlm(double cte, double tv, const UtilityFunction& u, double evaluation_point);
inline double taylor_tqlm(double cte, double tv, const UtilityFunction& u) {
  return taylor_tqlm(cte, tv, u, cte);
}

// ---- dual representation of the entropic measure -------------------------

struct Atom {
  double point;
  double probability;
};

/// Finite distribution; probabilities positive and summing to one within 1e-12.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(std::vector<Atom> atoms);
  /// Uniform weights over the given points.
  static DiscreteDistribution uniform(std::span<const double> points);

  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

 private:
  std::vector<Atom> atoms_;
};

struct DualSolution {
  double value;  // objective evaluated at the optimizer
  DiscreteDistribution optimizer;
};

/// E_Q[X] - (1/gamma) E_Q[log dQ/dP] for Q given as probabilities on P's atoms
/// (zero entries allowed). The entropic measure is the supremum of this over Q << P.
double dual_objective(const DiscreteDistribution& reference, std::span<const double> q, double gamma);

/// Optimizes dual_objective over Q << reference. The optimizer is
/// Q*(z) ~ e^{gamma z} P(z) and the optimal value is entropic_value(). Requires gamma > 0.
DualSolution dual_entropic(const DiscreteDistribution& reference, double gamma);

/// (1/gamma) log sum_z e^{gamma z} P(z).
double entropic_value(const DiscreteDistribution& reference, double gamma);

// ---- reports --------------------------------------------------------------

enum class MeasureKind { var, cte, tail_variance, tqlm, tcerm, taylor };
std::string to_string(MeasureKind kind);

struct RiskReport {
  double alpha;
  MeasureKind kind;
  std::string utility;  // canonical utility spec, empty when not applicable
  double value;
  std::optional<double> standard_error;  // empirical mode only
  std::string provenance;                // model spec or sample description
};

/// Empirical estimate with a plug-in asymptotic standard error: influence
/// function of the tail mean for CTE/TV/TQLM (delta method through U^{-1}), and
/// a Siddiqui spacing density estimate for VaR. Taylor carries no error.
RiskReport empirical_report(const SampleSet& s, double alpha, MeasureKind kind,
                            const UtilityFunction& u = UtilityFunction::linear());

RiskReport analytic_report(const SymmetricModel& model, double alpha, MeasureKind kind,
                           const UtilityFunction& u = UtilityFunction::linear());

}  // namespace tqlm
