#pragma once

#include <stdexcept>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace tqlm {

/// Broad classes of failure. The CLI maps these onto exit codes.
enum class ErrorKind {
  input,           // malformed or empty data
  parameter,       // argument outside its admissible range
  domain,          // value outside a utility's domain
  range,           // non-finite intermediate (overflow / NaN)
  differentiability,
  mgf_nonexistent, // exponential moment does not exist
  unsupported_generator,
  feasibility,
  no_root,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define TQLM_DEFINE_ERROR(Name, Kind)                                           \
  class Name : public Error {                                                   \
   public:                                                                      \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}    \
  };

TQLM_DEFINE_ERROR(InputError, input)
TQLM_DEFINE_ERROR(ParameterError, parameter)
TQLM_DEFINE_ERROR(DomainError, domain)
TQLM_DEFINE_ERROR(RangeError, range)
TQLM_DEFINE_ERROR(DifferentiabilityError, differentiability)
TQLM_DEFINE_ERROR(MgfNonexistentError, mgf_nonexistent)
TQLM_DEFINE_ERROR(UnsupportedGeneratorError, unsupported_generator)
TQLM_DEFINE_ERROR(FeasibilityError, feasibility)
TQLM_DEFINE_ERROR(InternalError, internal)

#undef TQLM_DEFINE_ERROR

/// Raised by bracketed root searches; carries the scanned (argument, value) pairs.
class NoRootError : public Error {
 public:
  NoRootError(const std::string& what, std::vector<std::pair<double, double>> scanned)
      : Error(ErrorKind::no_root, what + " scanned: " + render(scanned)), scanned_(std::move(scanned)) {}
  const std::vector<std::pair<double, double>>& scanned() const noexcept { return scanned_; }

 private:
  static std::string render(const std::vector<std::pair<double, double>>& points) {
    std::string out;
    char buf[64];
    for (const auto& [x, y] : points) {
      std::snprintf(buf, sizeof buf, "%s(%.6g, %.6g)", out.empty() ? "" : " ", x, y);
      out += buf;
    }
    return out;
  }
  std::vector<std::pair<double, double>> scanned_;
};

}  // namespace tqlm
