#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tqlm/sample_set.hpp"
#include "tqlm/symmetric_model.hpp"
#include "tqlm/utility_function.hpp"

namespace tqlm {

/// Exponential loss with the given rate; closed forms make it the reference fixture.
struct ExponentialLoss {
  double rate;
  friend bool operator==(const ExponentialLoss&, const ExponentialLoss&) = default;
};

using LossModel = std::variant<SampleSet, SymmetricModel, ExponentialLoss>;

/// `exponential(<rate>)` or any symmetric model spec.
LossModel parse_loss(std::string_view spec);
std::string describe(const LossModel& loss);

double loss_var(const LossModel& loss, double alpha);

/// E[(X - a)_+]; sample mean for samples, closed form or quadrature for models.
double expected_excess(const LossModel& loss, double a);

/// Admissible treaty acting on the positive part of the loss:
///
///   f(x) = q_low * min(x_+, b) + q_high * (x - b)_+,   b >= 0, q_low, q_high in [0, 1]
///
/// so 0 <= f(x) <= x_+ and both f and R_f(x) = x - f(x) are nondecreasing.
class Treaty {
 public:
  enum class Kind { none, stop_loss, proportional, excess_quota, layered };

  static Treaty none();
  /// f(x) = (x - a)_+
  static Treaty stop_loss(double retention);
  /// f(x) = q x_+
  static Treaty proportional(double share);
  /// f(x) = q (x - d)_+
  static Treaty excess_quota(double share, double deductible);
  /// Stop-loss above b plus a quota share q of the layer below: q min(x_+, b) + (x - b)_+.
  static Treaty layered(double share, double limit);

  Kind kind() const noexcept { return kind_; }
  double low_share() const noexcept { return q_low_; }
  double high_share() const noexcept { return q_high_; }
  double breakpoint() const noexcept { return b_; }
  std::string to_string() const;

  double ceded(double x) const noexcept;
  double retained(double x) const noexcept;
  /// Slope of R_f for large x.
  double tail_retained_slope() const noexcept { return 1.0 - q_high_; }

  /// E[f(X)]
  double expected_ceded(const LossModel& loss) const;

 private:
  Treaty(Kind kind, double q_low, double q_high, double b);
  Kind kind_;
  double q_low_;
  double q_high_;
  double b_;
};

struct ReinsuranceProblem {
  LossModel loss;
  double theta;   // premium loading > 0
  double budget;  // P > 0
  double alpha;
};

struct RetentionSolution {
  double retention;          // a*
  double var;                // VaR_alpha(X)
  double feasibility_bound;  // (1 + theta) E[(X - VaR)_+]
  double premium_residual;   // (1 + theta) E[(X - a*)_+] - P
};

/// Solves (1 + theta) E[(X - a)_+] = P for a > VaR_alpha(X). Throws
/// FeasibilityError when P is not below the feasibility bound.
RetentionSolution solve_retention(const ReinsuranceProblem& p);

/// rho_U^alpha(R_f(X)). Throws MgfNonexistentError when the retained tail makes
/// the utility integral diverge.
double retained_risk(const LossModel& loss, const Treaty& t, double alpha, const UtilityFunction& u);

enum class CandidateFamily { proportional, mixed_stop_loss };
std::string to_string(CandidateFamily family);

struct CandidateResult {
  Treaty treaty;
  double premium_residual;
  double risk;    // +inf when the retained risk diverges
  double margin;  // risk - stop-loss risk
  bool passes;
};

struct OptimalityReport {
  RetentionSolution retention;
  double stop_loss_risk;
  double tolerance;  // margins must be >= -tolerance
  std::vector<CandidateResult> candidates;
  bool all_pass;
};

/// Compares the stop-loss treaty at a* against premium-matched members of an
/// admissible family:
///   proportional     q (x - d)_+ for `count` shares q, d chosen to match P
///                    (the smallest share is the pure proportional treaty),
///   mixed_stop_loss  stop-loss at b > a* mixed with a quota share below b.
/// The tolerance is 1e-9 for models and 3 standard errors of the stop-loss
/// estimate for samples. Requires a strictly convex utility.
OptimalityReport verify_optimality(const ReinsuranceProblem& p, const UtilityFunction& u,
                                   CandidateFamily family, std::size_t count = 20);

}  // namespace tqlm
