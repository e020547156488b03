#include "tqlm/utility_function.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "tqlm/errors.hpp"
#include "tqlm/format.hpp"

namespace tqlm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double parse_number(std::string_view text, std::string_view spec) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty() || !std::isfinite(value)) {
    throw InputError("malformed number in utility spec '" + std::string(spec) + "'");
  }
  return value;
}

}  // namespace

UtilityFunction UtilityFunction::linear() { return {UtilityKind::linear, 0.0}; }

UtilityFunction UtilityFunction::exponential(double gamma) {
  if (gamma == 0.0 || !std::isfinite(gamma)) {
    throw ParameterError("exponential utility needs a finite nonzero gamma");
  }
  return {UtilityKind::exponential, gamma};
}

UtilityFunction UtilityFunction::power(double gamma) {
  if (gamma == 0.0 || !std::isfinite(gamma)) {
    throw ParameterError("power utility needs a finite nonzero gamma");
  }
  return {UtilityKind::power, gamma};
}

UtilityFunction UtilityFunction::logarithmic() { return {UtilityKind::logarithmic, 0.0}; }

UtilityFunction UtilityFunction::capped(double cap) {
  if (!std::isfinite(cap)) throw ParameterError("capped utility needs a finite cap");
  return {UtilityKind::capped, cap};
}

UtilityFunction UtilityFunction::parse(std::string_view spec) {
  while (!spec.empty() && std::isspace(static_cast<unsigned char>(spec.front()))) spec.remove_prefix(1);
  while (!spec.empty() && std::isspace(static_cast<unsigned char>(spec.back()))) spec.remove_suffix(1);
  if (spec == "linear") return linear();
  if (spec == "log") return logarithmic();
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw InputError("unknown utility spec '" + std::string(spec) + "'");
  }
  const auto head = spec.substr(0, colon);
  const double value = parse_number(spec.substr(colon + 1), spec);
  if (head == "exp") return exponential(value);
  if (head == "pow") return power(value);
  if (head == "cap") return capped(value);
  throw InputError("unknown utility spec '" + std::string(spec) + "'");
}

std::string UtilityFunction::to_string() const {
  switch (kind_) {
    case UtilityKind::linear: return "linear";
    case UtilityKind::logarithmic: return "log";
    case UtilityKind::exponential: return "exp:" + format_shortest(parameter_);
    case UtilityKind::power: return "pow:" + format_shortest(parameter_);
    case UtilityKind::capped: return "cap:" + format_shortest(parameter_);
  }
  return {};
}

double UtilityFunction::domain_lower_bound() const noexcept {
  switch (kind_) {
    case UtilityKind::power:
    case UtilityKind::logarithmic: return 0.0;
    default: return -kInf;
  }
}

bool UtilityFunction::in_domain(double x) const noexcept {
  if (std::isnan(x)) return false;
  switch (kind_) {
    case UtilityKind::power:
    case UtilityKind::logarithmic: return x > 0.0;
    default: return true;
  }
}

void UtilityFunction::require_domain(double x) const {
  if (!in_domain(x)) {
    throw DomainError("utility " + to_string() + " is undefined at x=" + format_shortest(x));
  }
}

double UtilityFunction::evaluate(double x) const {
  require_domain(x);
  double y = 0.0;
  switch (kind_) {
    case UtilityKind::linear: y = x; break;
    case UtilityKind::exponential: y = std::exp(parameter_ * x) / parameter_; break;
    case UtilityKind::power: y = std::pow(x, parameter_) / parameter_; break;
    case UtilityKind::logarithmic: y = std::log(x); break;
    case UtilityKind::capped: y = x <= parameter_ ? x : parameter_; break;
  }
  if (!std::isfinite(y) && std::isfinite(x)) {
    throw RangeError("utility " + to_string() + " overflows at x=" + format_shortest(x));
  }
  return y;
}

double UtilityFunction::derivative(double x) const {
  require_domain(x);
  switch (kind_) {
    case UtilityKind::linear: return 1.0;
    case UtilityKind::exponential: return std::exp(parameter_ * x);
    case UtilityKind::power: return std::pow(x, parameter_ - 1.0);
    case UtilityKind::logarithmic: return 1.0 / x;
    case UtilityKind::capped:
      if (x == parameter_) {
        throw DifferentiabilityError("capped utility has a kink at " + format_shortest(x));
      }
      return x < parameter_ ? 1.0 : 0.0;
  }
  return 0.0;
}

double UtilityFunction::generalized_inverse(double y) const noexcept {
  if (std::isnan(y)) return y;
  switch (kind_) {
    case UtilityKind::linear: return y;
    case UtilityKind::logarithmic: return std::exp(y);
    case UtilityKind::capped: return y <= parameter_ ? y : kInf;
    case UtilityKind::exponential: {
      // Range is (0, inf) for g > 0 and (-inf, 0) for g < 0.
      const double scaled = parameter_ * y;
      if (scaled <= 0.0) return parameter_ > 0.0 ? -kInf : kInf;
      return std::log(scaled) / parameter_;
    }
    case UtilityKind::power: {
      const double scaled = parameter_ * y;
      if (scaled <= 0.0) return parameter_ > 0.0 ? 0.0 : kInf;
      return std::pow(scaled, 1.0 / parameter_);
    }
  }
  return y;
}

double UtilityFunction::risk_aversion(double x) const {
  require_domain(x);
  switch (kind_) {
    case UtilityKind::linear: return 0.0;
    case UtilityKind::exponential: return -parameter_;
    case UtilityKind::power: return (1.0 - parameter_) / x;
    case UtilityKind::logarithmic: return 1.0 / x;
    case UtilityKind::capped:
      if (x >= parameter_) {
        throw DifferentiabilityError("capped utility has no risk aversion at or above its cap " +
                                     format_shortest(parameter_));
      }
      return 0.0;
  }
  return 0.0;
}

Curvature UtilityFunction::curvature() const noexcept {
  switch (kind_) {
    case UtilityKind::linear: return Curvature::linear;
    case UtilityKind::exponential: return parameter_ > 0.0 ? Curvature::convex : Curvature::concave;
    case UtilityKind::power:
      if (parameter_ == 1.0) return Curvature::linear;
      return parameter_ > 1.0 ? Curvature::convex : Curvature::concave;
    case UtilityKind::logarithmic:
    case UtilityKind::capped: return Curvature::concave;
  }
  return Curvature::linear;
}

bool UtilityFunction::is_strictly_convex() const noexcept {
  return (kind_ == UtilityKind::exponential && parameter_ > 0.0) ||
         (kind_ == UtilityKind::power && parameter_ > 1.0);
}

bool UtilityFunction::strictly_increasing_at(double x) const noexcept {
  return kind_ != UtilityKind::capped || x < parameter_;
}

}  // namespace tqlm
