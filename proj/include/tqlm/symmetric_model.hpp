#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "tqlm/sample_set.hpp"

namespace tqlm {

enum class GeneratorKind { normal, student_t, logistic };

/// Density generator g of a symmetric family, together with the standard
/// member Z ~ S1(0, 1, g) whose density is g(z^2 / 2).
///
///   normal     g(u) = e^{-u} / sqrt(2 pi)
///   student_t  g(u) = K_m (1 + 2u/m)^{-(m+1)/2}
///   logistic   g(u) = c e^{-u} / (1 + e^{-u})^2, c fixed so that Z integrates to one
class DensityGenerator {
 public:
  static DensityGenerator normal() { return DensityGenerator(GeneratorKind::normal, 0.0); }
  static DensityGenerator student_t(double degrees_of_freedom);
  static DensityGenerator logistic() { return DensityGenerator(GeneratorKind::logistic, 0.0); }

  /// `normal`, `logistic` or `t(<m>)`.
  static DensityGenerator parse(std::string_view spec);

  GeneratorKind kind() const noexcept { return kind_; }
  double degrees_of_freedom() const noexcept { return dof_; }
  std::string to_string() const;

  double g(double u) const;
  /// log g(u), finite wherever g underflows.
  double log_g(double u) const;
  /// Cumulative generator Gbar(t) = int_t^inf g(v) dv. Throws
  /// UnsupportedGeneratorError when Gbar(0) is infinite (student_t with m <= 1).
  double cumulative(double t) const;

  // Standard member Z.
  double density(double z) const;
  double cdf(double z) const;
  double survival(double z) const;
  double quantile(double p) const;
  /// sigma_Z^2 = 2 int_0^inf t^2 g(t^2/2) dt; +inf when the variance does not exist.
  double variance_factor() const;

  bool has_mgf() const noexcept { return kind_ != GeneratorKind::student_t; }
  /// kappa(t) = log psi(-t^2/2) = log E[e^{tZ}]. Throws MgfNonexistentError for student_t.
  double cumulant(double t) const;

  /// Z beyond this many units from the mode of an (optionally tilted) light-tailed
  /// density carries relative mass below 1e-40. Only meaningful when has_mgf().
  static constexpr double kLightTailWidth = 14.0;

  friend bool operator==(const DensityGenerator&, const DensityGenerator&) = default;

 private:
  DensityGenerator(GeneratorKind kind, double dof) : kind_(kind), dof_(dof) {}
  void require_mgf() const;

  GeneratorKind kind_;
  double dof_;
};

/// Exponentially tilted standard member Y with density
/// f_Y(y) = e^{tilt y} g(y^2/2) / psi(-tilt^2/2).
struct TiltedTail {
  DensityGenerator base;
  double tilt;
  double log_normalizer;  // kappa(tilt)

  static TiltedTail make(const DensityGenerator& base, double tilt);
  double density(double y) const;
  /// Fbar_Y(z) = int_z^inf f_Y(y) dy.
  double survival(double z) const;
};

double tilted_tail_survival(double tilt, double z, const DensityGenerator& generator);

/// S1(mu, sigma^2, g): density f(x) = (1/sigma) g(((x - mu)/sigma)^2 / 2).
class SymmetricModel {
 public:
  /// Throws ParameterError unless mu is finite and sigma > 0.
  SymmetricModel(DensityGenerator generator, double mu, double sigma);

  static SymmetricModel normal(double mu, double sigma) {
    return {DensityGenerator::normal(), mu, sigma};
  }
  static SymmetricModel student_t(double m, double mu, double sigma) {
    return {DensityGenerator::student_t(m), mu, sigma};
  }
  static SymmetricModel logistic(double mu, double sigma) {
    return {DensityGenerator::logistic(), mu, sigma};
  }

  /// `normal(mu,sigma)`, `t(m,mu,sigma)` or `logistic(mu,sigma)`.
  static SymmetricModel parse(std::string_view spec);
  std::string to_string() const;

  const DensityGenerator& generator() const noexcept { return generator_; }
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  double sigma_z_sq() const { return generator_.variance_factor(); }
  SymmetricModel standard() const { return {generator_, 0.0, 1.0}; }

  double density(double x) const;
  double cdf(double x) const;
  double survival(double x) const;
  /// mu + sigma * q_alpha(Z). Throws ParameterError unless alpha is in (0,1).
  double quantile(double alpha) const;
  double cumulative_generator(double t) const;
  double cumulant(double t) const { return generator_.cumulant(t); }

  /// n independent draws, reproducible for a fixed seed.
  SampleSet sample(std::size_t n, std::uint64_t seed) const;

  friend bool operator==(const SymmetricModel&, const SymmetricModel&) = default;

 private:
  DensityGenerator generator_;
  double mu_;
  double sigma_;
};

inline double density(const SymmetricModel& m, double x) { return m.density(x); }
inline double cdf(const SymmetricModel& m, double x) { return m.cdf(x); }
inline double quantile(const SymmetricModel& m, double alpha) { return m.quantile(alpha); }
inline double cumulative_generator(const SymmetricModel& m, double t) { return m.cumulative_generator(t); }
inline double cumulant(const SymmetricModel& m, double t) { return m.cumulant(t); }
inline SampleSet sample(const SymmetricModel& m, std::size_t n, std::uint64_t seed) {
  return m.sample(n, seed);
}

}  // namespace tqlm
