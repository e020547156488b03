#pragma once

#include <string>
#include <string_view>

namespace tqlm {

enum class UtilityKind { linear, exponential, power, logarithmic, capped };

enum class Curvature { linear, concave, convex };

/// An increasing continuous transform U from a closed catalogue:
///
///   linear          U(x) = x
///   exp:<g>         U(x) = (1/g) e^{g x},     g != 0
///   pow:<g>         U(x) = (1/g) x^g,         g != 0, x > 0
///   log             U(x) = ln x,              x > 0
///   cap:<c>         U(x) = min(x, c)
///
/// Every member has a closed-form generalized inverse
/// U^{-1}(y) = inf{x : U(x) >= y}, which may be +/-infinity.
class UtilityFunction {
 public:
  static UtilityFunction linear();
  static UtilityFunction exponential(double gamma);
  static UtilityFunction power(double gamma);
  static UtilityFunction logarithmic();
  static UtilityFunction capped(double cap);

  /// Parses `linear`, `exp:<g>`, `pow:<g>`, `log` or `cap:<c>`.
  static UtilityFunction parse(std::string_view spec);

  UtilityKind kind() const noexcept { return kind_; }
  /// gamma for exp/pow, the cap for capped, 0 otherwise.
  double parameter() const noexcept { return parameter_; }

  /// Canonical spec string; round-trips through parse().
  std::string to_string() const;

  /// Open lower bound of the domain (0 for pow/log, -inf otherwise).
  double domain_lower_bound() const noexcept;
  bool in_domain(double x) const noexcept;

  double evaluate(double x) const;
  double derivative(double x) const;
  double generalized_inverse(double y) const noexcept;

  /// Arrow-Pratt coefficient -U''(x)/U'(x).
  double risk_aversion(double x) const;

  Curvature curvature() const noexcept;
  bool is_concave() const noexcept { return curvature() != Curvature::convex; }
  bool is_convex() const noexcept { return curvature() != Curvature::concave; }
  /// Strictly convex and strictly increasing on its whole domain.
  bool is_strictly_convex() const noexcept;

  /// False only for the capped kind at or above its cap.
  bool strictly_increasing_at(double x) const noexcept;

  friend bool operator==(const UtilityFunction&, const UtilityFunction&) = default;

 private:
  UtilityFunction(UtilityKind kind, double parameter) : kind_(kind), parameter_(parameter) {}
  void require_domain(double x) const;

  UtilityKind kind_;
  double parameter_;
};

inline double evaluate(const UtilityFunction& u, double x) { return u.evaluate(x); }
inline double generalized_inverse(const UtilityFunction& u, double y) { return u.generalized_inverse(y); }
inline double risk_aversion(const UtilityFunction& u, double x) { return u.risk_aversion(x); }

}  // namespace tqlm
