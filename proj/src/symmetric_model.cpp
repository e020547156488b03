#include "tqlm/symmetric_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "numerics.hpp"
#include "spec_parse.hpp"
#include "tqlm/errors.hpp"
#include "tqlm/format.hpp"

namespace tqlm {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;
constexpr double kSqrt2 = std::numbers::sqrt2;

double normal_survival(double z) { return 0.5 * std::erfc(z / kSqrt2); }

// ---------------------------------------------------------------------------
// Logistic member of the symmetric family.
//
// Its standard density c * s(z) with s(z) = e^{-z^2/2} / (1 + e^{-z^2/2})^2 has
// no closed-form cdf. c comes from adaptive quadrature; the upper tail mass is
// tabulated on a fine grid over [0, 40] with a 10-point Gauss-Legendre rule per
// cell, so cdf queries only integrate inside a single cell.

double logistic_shape(double z) {
  const double e = std::exp(-0.5 * z * z);
  return e / ((1.0 + e) * (1.0 + e));
}

// 1 / (1 + e^{-y^2/2})^2, the factor that separates the logistic shape from a Gaussian.
double logistic_weight(double y) {
  const double e = std::exp(-0.5 * y * y);
  return 1.0 / ((1.0 + e) * (1.0 + e));
}

double cell_integral(double a, double b) {
  return boost::math::quadrature::gauss<double, 10>::integrate(logistic_shape, a, b);
}

struct LogisticTables {
  static constexpr double kStep = 1.0 / 32.0;
  static constexpr int kCells = 1280;  // covers [0, 40]
  static constexpr double kEnd = kStep * kCells;

  double c = 0.0;
  double variance = 0.0;
  std::vector<double> upper_mass;  // upper_mass[i] = P(Z >= i * kStep)

  LogisticTables() {
    const double half = numerics::integrate(logistic_shape, 0.0, kEnd, 1e-15);
    c = 1.0 / (2.0 * half);
    variance = 2.0 * c *
               numerics::integrate([](double t) { return t * t * logistic_shape(t); }, 0.0, kEnd,
                                   1e-15);
    upper_mass.assign(kCells + 1, 0.0);
    for (int i = kCells - 1; i >= 0; --i) {
      upper_mass[i] = upper_mass[i + 1] + c * cell_integral(i * kStep, (i + 1) * kStep);
    }
  }

  double survival_nonneg(double z) const {
    if (z >= kEnd) {
      // s(z) = e^{-z^2/2} (1 + O(e^{-z^2/2})) out here.
      return c * std::sqrt(2.0 * std::numbers::pi) * normal_survival(z);
    }
    const int i = static_cast<int>(z / kStep);
    return upper_mass[i + 1] + c * cell_integral(z, (i + 1) * kStep);
  }

  // Solves P(Z >= z) = tail for z >= 0, tail in (0, 0.5].
  double upper_quantile(double tail) const {
    if (tail >= 0.5) return 0.0;
    const auto it = std::partition_point(upper_mass.begin(), upper_mass.end(),
                                         [tail](double m) { return m >= tail; });
    if (it == upper_mass.end()) {
      throw InternalError("logistic quantile table exhausted");
    }
    const int j = static_cast<int>(it - upper_mass.begin());
    const double lo = (j - 1) * kStep;
    const double hi = j * kStep;
    const double m_lo = upper_mass[j - 1];
    const double m_hi = upper_mass[j];
    const double guess = lo + (m_lo - tail) / (m_lo - m_hi) * kStep;
    std::uintmax_t iters = 60;
    return boost::math::tools::newton_raphson_iterate(
        [&](double z) {
          return std::make_pair(survival_nonneg(z) - tail, -c * logistic_shape(z));
        },
        std::clamp(guess, lo, hi), lo, hi, 50, iters);
  }
};

const LogisticTables& logistic_tables() {
  static const LogisticTables tables;
  return tables;
}

// Kernel e^{-(y-t)^2/2} w(y) of the tilted logistic density up to a constant.
double tilted_logistic_kernel(double y, double tilt) {
  const double d = y - tilt;
  return std::exp(-0.5 * d * d) * logistic_weight(y);
}

double tilted_logistic_mass(double tilt) {
  constexpr double w = DensityGenerator::kLightTailWidth;
  return numerics::integrate([tilt](double y) { return tilted_logistic_kernel(y, tilt); },
                             tilt - w, tilt + w);
}

double student_t_constant(double m) {
  return std::exp(std::lgamma(0.5 * (m + 1.0)) - std::lgamma(0.5 * m)) /
         std::sqrt(m * std::numbers::pi);
}

void require_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ParameterError("probability level must lie in (0,1), got " + format_shortest(p));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

DensityGenerator DensityGenerator::student_t(double degrees_of_freedom) {
  if (!(degrees_of_freedom > 0.0) || !std::isfinite(degrees_of_freedom)) {
    throw ParameterError("student_t needs positive finite degrees of freedom");
  }
  return DensityGenerator(GeneratorKind::student_t, degrees_of_freedom);
}

DensityGenerator DensityGenerator::parse(std::string_view spec) {
  const auto call = detail::parse_call(spec);
  if (call.name == "normal" && call.args.empty()) return normal();
  if (call.name == "logistic" && call.args.empty()) return logistic();
  if (call.name == "t" && call.args.size() == 1) return student_t(call.args[0]);
  throw InputError("unknown generator spec '" + std::string(spec) + "'");
}

std::string DensityGenerator::to_string() const {
  switch (kind_) {
    case GeneratorKind::normal: return "normal";
    case GeneratorKind::logistic: return "logistic";
    case GeneratorKind::student_t: return "t(" + format_shortest(dof_) + ")";
  }
  return {};
}

double DensityGenerator::g(double u) const {
  switch (kind_) {
    case GeneratorKind::normal: return kInvSqrt2Pi * std::exp(-u);
    case GeneratorKind::student_t:
      return student_t_constant(dof_) * std::pow(1.0 + 2.0 * u / dof_, -0.5 * (dof_ + 1.0));
    case GeneratorKind::logistic: {
      const double e = std::exp(-u);
      return logistic_tables().c * e / ((1.0 + e) * (1.0 + e));
    }
  }
  return 0.0;
}

double DensityGenerator::log_g(double u) const {
  switch (kind_) {
    case GeneratorKind::normal: return std::log(kInvSqrt2Pi) - u;
    case GeneratorKind::student_t:
      return std::log(student_t_constant(dof_)) - 0.5 * (dof_ + 1.0) * std::log1p(2.0 * u / dof_);
    case GeneratorKind::logistic:
      return std::log(logistic_tables().c) - u - 2.0 * std::log1p(std::exp(-u));
  }
  return 0.0;
}

double DensityGenerator::cumulative(double t) const {
  if (t < 0.0) throw ParameterError("cumulative generator needs t >= 0");
  switch (kind_) {
    case GeneratorKind::normal: return kInvSqrt2Pi * std::exp(-t);
    case GeneratorKind::student_t: {
      if (dof_ <= 1.0) {
        throw UnsupportedGeneratorError("cumulative generator of " + to_string() +
                                        " is infinite at 0 (needs m > 1)");
      }
      const double m = dof_;
      return student_t_constant(m) * m / (m - 1.0) * std::pow(1.0 + 2.0 * t / m, -0.5 * (m - 1.0));
    }
    case GeneratorKind::logistic: {
      const double e = std::exp(-t);
      return logistic_tables().c * e / (1.0 + e);
    }
  }
  return 0.0;
}

double DensityGenerator::density(double z) const { return g(0.5 * z * z); }

double DensityGenerator::cdf(double z) const {
  switch (kind_) {
    case GeneratorKind::normal: return normal_survival(-z);
    case GeneratorKind::student_t:
      return boost::math::cdf(boost::math::students_t_distribution<double>(dof_), z);
    case GeneratorKind::logistic: {
      const auto& t = logistic_tables();
      return z < 0.0 ? t.survival_nonneg(-z) : 1.0 - t.survival_nonneg(z);
    }
  }
  return 0.0;
}

double DensityGenerator::survival(double z) const {
  switch (kind_) {
    case GeneratorKind::normal: return normal_survival(z);
    case GeneratorKind::student_t:
      return boost::math::cdf(
          boost::math::complement(boost::math::students_t_distribution<double>(dof_), z));
    case GeneratorKind::logistic: {
      const auto& t = logistic_tables();
      return z >= 0.0 ? t.survival_nonneg(z) : 1.0 - t.survival_nonneg(-z);
    }
  }
  return 0.0;
}

double DensityGenerator::quantile(double p) const {
  require_probability(p);
  switch (kind_) {
    case GeneratorKind::normal:
      return boost::math::quantile(boost::math::normal_distribution<double>(), p);
    case GeneratorKind::student_t:
      return boost::math::quantile(boost::math::students_t_distribution<double>(dof_), p);
    case GeneratorKind::logistic: {
      const auto& t = logistic_tables();
      return p >= 0.5 ? t.upper_quantile(1.0 - p) : -t.upper_quantile(p);
    }
  }
  return 0.0;
}

double DensityGenerator::variance_factor() const {
  switch (kind_) {
    case GeneratorKind::normal: return 1.0;
    case GeneratorKind::student_t:
      return dof_ > 2.0 ? dof_ / (dof_ - 2.0) : std::numeric_limits<double>::infinity();
    case GeneratorKind::logistic: return logistic_tables().variance;
  }
  return 0.0;
}

void DensityGenerator::require_mgf() const {
  if (!has_mgf()) {
    throw MgfNonexistentError("Student-t has no moment generating function");
  }
}

double DensityGenerator::cumulant(double t) const {
  require_mgf();
  if (kind_ == GeneratorKind::normal) return 0.5 * t * t;
  // psi(-t^2/2) = c e^{t^2/2} int e^{-(y-t)^2/2} w(y) dy
  return 0.5 * t * t + std::log(logistic_tables().c * tilted_logistic_mass(t));
}

// ---------------------------------------------------------------------------

TiltedTail TiltedTail::make(const DensityGenerator& base, double tilt) {
  return TiltedTail{base, tilt, base.cumulant(tilt)};
}

double TiltedTail::density(double y) const {
  return std::exp(tilt * y - log_normalizer) * base.g(0.5 * y * y);
}

double TiltedTail::survival(double z) const {
  if (base.kind() == GeneratorKind::normal) return normal_survival(z - tilt);
  constexpr double w = DensityGenerator::kLightTailWidth;
  const double t = tilt;
  const auto kernel = [t](double y) { return tilted_logistic_kernel(y, t); };
  const double total = tilted_logistic_mass(t);
  if (z >= t) return numerics::integrate(kernel, z, z + w) / total;
  if (z <= t - w) return 1.0;
  return 1.0 - numerics::integrate(kernel, z - w, z) / total;
}

double tilted_tail_survival(double tilt, double z, const DensityGenerator& generator) {
  return TiltedTail::make(generator, tilt).survival(z);
}

// ---------------------------------------------------------------------------

SymmetricModel::SymmetricModel(DensityGenerator generator, double mu, double sigma)
    : generator_(generator), mu_(mu), sigma_(sigma) {
  if (!std::isfinite(mu)) throw ParameterError("location mu must be finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("scale sigma must be positive and finite, got " + format_shortest(sigma));
  }
}

SymmetricModel SymmetricModel::parse(std::string_view spec) {
  const auto call = detail::parse_call(spec);
  if (call.name == "normal" && call.args.size() == 2) return normal(call.args[0], call.args[1]);
  if (call.name == "logistic" && call.args.size() == 2) return logistic(call.args[0], call.args[1]);
  if (call.name == "t" && call.args.size() == 3) {
    return student_t(call.args[0], call.args[1], call.args[2]);
  }
  throw InputError("unknown model spec '" + std::string(spec) +
                   "' (expected normal(mu,sigma), t(m,mu,sigma) or logistic(mu,sigma))");
}

std::string SymmetricModel::to_string() const {
  const std::string loc = format_shortest(mu_) + "," + format_shortest(sigma_);
  switch (generator_.kind()) {
    case GeneratorKind::normal: return "normal(" + loc + ")";
    case GeneratorKind::logistic: return "logistic(" + loc + ")";
    case GeneratorKind::student_t:
      return "t(" + format_shortest(generator_.degrees_of_freedom()) + "," + loc + ")";
  }
  return {};
}

double SymmetricModel::density(double x) const {
  return generator_.density((x - mu_) / sigma_) / sigma_;
}

double SymmetricModel::cdf(double x) const { return generator_.cdf((x - mu_) / sigma_); }

double SymmetricModel::survival(double x) const {
  return generator_.survival((x - mu_) / sigma_);
}

double SymmetricModel::quantile(double alpha) const {
  return mu_ + sigma_ * generator_.quantile(alpha);
}

double SymmetricModel::cumulative_generator(double t) const { return generator_.cumulative(t); }

SampleSet SymmetricModel::sample(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw ParameterError("sample size must be at least 1");
  boost::random::mt19937_64 engine(seed);
  std::vector<double> draws(n);
  switch (generator_.kind()) {
    case GeneratorKind::normal: {
      boost::random::normal_distribution<double> normal;
      for (auto& x : draws) x = mu_ + sigma_ * normal(engine);
      break;
    }
    case GeneratorKind::student_t: {
      boost::random::normal_distribution<double> normal;
      boost::random::chi_squared_distribution<double> chi2(generator_.degrees_of_freedom());
      const double m = generator_.degrees_of_freedom();
      for (auto& x : draws) {
        const double z = normal(engine);
        x = mu_ + sigma_ * z / std::sqrt(chi2(engine) / m);
      }
      break;
    }
    case GeneratorKind::logistic: {
      boost::random::uniform_01<double> uniform;
      for (auto& x : draws) {
        double u = 0.0;
        do {
          u = uniform(engine);
        } while (u <= 0.0);
        x = mu_ + sigma_ * generator_.quantile(u);
      }
      break;
    }
  }
  return SampleSet(std::move(draws));
}

}  // namespace tqlm
