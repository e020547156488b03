#include "tqlm/risk_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "numerics.hpp"
#include "tqlm/errors.hpp"
#include "tqlm/format.hpp"

namespace tqlm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool gamma_is_negligible(double gamma) { return std::fabs(gamma) < kGammaCteCutoff; }

double min_of(std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }
double max_of(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }

// anchor + mean(x - anchor)
double anchored_mean(std::span<const double> v, double anchor) {
  numerics::CompensatedSum sum;
  for (double x : v) sum.add(x - anchor);
  return anchor + sum.value() / static_cast<double>(v.size());
}

// (1/g) log mean e^{g x}, shifted so every exponent is <= 0.
double entropic_mean(std::span<const double> v, double gamma) {
  const double anchor = gamma > 0.0 ? max_of(v) : min_of(v);
  numerics::CompensatedSum sum;
  for (double x : v) sum.add(std::expm1(gamma * (x - anchor)));
  const double mean_m1 = sum.value() / static_cast<double>(v.size());
  const double r = anchor + std::log1p(mean_m1) / gamma;
  if (!std::isfinite(r)) {
    throw RangeError("exponential utility overflow at gamma*max = " +
                     format_shortest(gamma * max_of(v)));
  }
  return r;
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ParameterError("alpha must lie in (0,1), got " + format_shortest(alpha));
  }
}

// Upper integration limit for light-tailed standard members; `extra` widens it
// for integrands that grow polynomially.
double light_upper(double q, double extra = 0.0) {
  return std::max(q, 0.0) + DensityGenerator::kLightTailWidth + extra;
}

// int_q^inf h(z) g(z^2/2) dz
template <class H>
double tail_integral(const DensityGenerator& gen, double q, H&& h, double extra = 0.0) {
  const auto f = [&](double z) {
    const double d = gen.density(z);
    return d == 0.0 ? 0.0 : h(z) * d;
  };
  if (gen.has_mgf()) return numerics::integrate(f, q, light_upper(q, extra));
  return numerics::integrate(f, q, kInf);
}

double standard_quantile(const SymmetricModel& model, double alpha) {
  require_alpha(alpha);
  return model.generator().quantile(alpha);
}

// (1/g) log( E[e^{g X} 1{X >= VaR}] / (1 - alpha) ) by direct quadrature in the log domain.
double exponential_tail_quadrature(const SymmetricModel& model, double alpha, double gamma) {
  const auto& gen = model.generator();
  const double q = standard_quantile(model, alpha);
  const double t = gamma * model.sigma();
  if (!gen.has_mgf() && t > 0.0) {
    throw MgfNonexistentError("Student-t has no moment generating function");
  }
  const auto exponent = [&](double z) { return t * z + gen.log_g(0.5 * z * z); };
  double z0 = std::max(q, t);
  double upper = z0 + DensityGenerator::kLightTailWidth;
  if (!gen.has_mgf()) {
    z0 = std::max(q, 0.0);
    upper = kInf;
  }
  const double shift = exponent(z0);
  const double j = numerics::integrate(
      [&](double z) {
        const double e = exponent(z) - shift;
        return std::isfinite(e) ? std::exp(e) : 0.0;
      },
      q, upper);
  return model.mu() + (shift + std::log(j) - std::log1p(-alpha)) / gamma;
}

}  // namespace

// ---------------------------------------------------------------------------
// empirical

double var_empirical(const SampleSet& s, double alpha) {
  const auto sorted = s.sorted();
  return sorted[var_order_index(alpha, sorted.size()) - 1];
}

TailSlice tail_slice(const SampleSet& s, double alpha) { return TailSlice(s, alpha); }

double cte_empirical(const SampleSet& s, double alpha) {
  const TailSlice slice(s, alpha);
  return anchored_mean(slice.members(), slice.threshold());
}

double tail_variance_empirical(const SampleSet& s, double alpha) {
  const TailSlice slice(s, alpha);
  const double m = anchored_mean(slice.members(), slice.threshold());
  numerics::CompensatedSum sum;
  for (double x : slice.members()) sum.add((x - m) * (x - m));
  return sum.value() / static_cast<double>(slice.count());
}

double certainty_equivalent(std::span<const double> values, const UtilityFunction& u) {
  if (values.empty()) throw InputError("certainty equivalent of an empty set");
  const double lo = min_of(values);
  const double hi = max_of(values);
  for (double x : {lo, hi}) {
    if (!u.in_domain(x)) {
      throw DomainError("value " + format_shortest(x) + " outside the domain of " + u.to_string());
    }
  }
  switch (u.kind()) {
    case UtilityKind::linear: return anchored_mean(values, lo);
    case UtilityKind::exponential:
      if (gamma_is_negligible(u.parameter())) return anchored_mean(values, lo);
      return entropic_mean(values, u.parameter());
    default: break;
  }
  if (lo == hi && u.strictly_increasing_at(lo)) return lo;
  const double base = u.evaluate(lo);
  numerics::CompensatedSum sum;
  for (double x : values) sum.add(u.evaluate(x) - base);
  return u.generalized_inverse(base + sum.value() / static_cast<double>(values.size()));
}

double tqlm_empirical(const SampleSet& s, double alpha, const UtilityFunction& u) {
  if (u.kind() == UtilityKind::linear) return cte_empirical(s, alpha);
  const TailSlice slice(s, alpha);
  return certainty_equivalent(slice.members(), u);
}

double tcerm_empirical(const SampleSet& s, double alpha, double gamma) {
  if (gamma_is_negligible(gamma)) return cte_empirical(s, alpha);
  const TailSlice slice(s, alpha);
  return entropic_mean(slice.members(), gamma);
}

double quasi_linear_mean(const SampleSet& s, const UtilityFunction& u) {
  return certainty_equivalent(s.values(), u);
}

// ---------------------------------------------------------------------------
// analytic

double var_analytic(const SymmetricModel& model, double alpha) { return model.quantile(alpha); }

double cte_analytic(const SymmetricModel& model, double alpha) {
  const double q = standard_quantile(model, alpha);
  return model.mu() + model.sigma() * model.cumulative_generator(0.5 * q * q) / (1.0 - alpha);
}

double tail_variance_analytic(const SymmetricModel& model, double alpha) {
  const auto& gen = model.generator();
  const double q = standard_quantile(model, alpha);
  if (gen.kind() == GeneratorKind::student_t && gen.degrees_of_freedom() <= 2.0) return kInf;
  const double tail = 1.0 - alpha;
  const double m1 = gen.cumulative(0.5 * q * q) / tail - q;
  const double m2 = tail_integral(gen, q, [q](double z) { return (z - q) * (z - q); }) / tail;
  return model.sigma() * model.sigma() * std::max(m2 - m1 * m1, 0.0);
}

double tqlm_analytic(const SymmetricModel& model, double alpha, const UtilityFunction& u) {
  const auto& gen = model.generator();
  const double q = standard_quantile(model, alpha);
  const double mu = model.mu();
  const double sigma = model.sigma();
  const double v = mu + sigma * q;

  switch (u.kind()) {
    case UtilityKind::linear: return cte_analytic(model, alpha);
    case UtilityKind::exponential:
      if (gamma_is_negligible(u.parameter())) return cte_analytic(model, alpha);
      return exponential_tail_quadrature(model, alpha, u.parameter());
    default: break;
  }

  if (!u.in_domain(v)) {
    throw DomainError("VaR " + format_shortest(v) + " lies outside the domain of " + u.to_string());
  }
  if (u.kind() == UtilityKind::power && !gen.has_mgf() &&
      u.parameter() >= gen.degrees_of_freedom()) {
    throw MgfNonexistentError("E[X^" + format_shortest(u.parameter()) + "] diverges for " +
                              gen.to_string());
  }

  const double tail = 1.0 - alpha;
  const double base = u.evaluate(v);
  double excess = 0.0;  // int_q^inf (U(sigma z + mu) - U(v)) g dz
  if (u.kind() == UtilityKind::capped) {
    const double cap = u.parameter();
    if (cap <= v) return u.generalized_inverse(base);
    const double zc = (cap - mu) / sigma;
    const auto linear_part = [&](double z) { return sigma * (z - q); };
    excess = numerics::integrate(
                 [&](double z) { return linear_part(z) * gen.density(z); }, q, zc) +
             (cap - v) * gen.survival(zc);
  } else {
    const double extra = u.kind() == UtilityKind::power ? std::sqrt(std::max(u.parameter(), 0.0)) : 0.0;
    excess = tail_integral(
        gen, q, [&](double z) { return u.evaluate(mu + sigma * z) - base; }, extra);
  }
  return u.generalized_inverse(base + excess / tail);
}

double tcerm_analytic(const SymmetricModel& model, double alpha, double gamma) {
  if (gamma_is_negligible(gamma)) return cte_analytic(model, alpha);
  const auto& gen = model.generator();
  const double q = standard_quantile(model, alpha);
  const double t = gamma * model.sigma();
  const TiltedTail tilted = TiltedTail::make(gen, t);
  const double survival = tilted.survival(q);
  return model.mu() + tilted.log_normalizer / gamma +
         (std::log(survival) - std::log1p(-alpha)) / gamma;
}

double tcerm_normal(double mu, double sigma, double alpha, double gamma) {
  require_alpha(alpha);
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  const SymmetricModel standard = SymmetricModel::normal(0.0, 1.0);
  const double q = standard.quantile(alpha);
  if (gamma_is_negligible(gamma)) {
    return mu + sigma * standard.density(q) / (1.0 - alpha);
  }
  const double shifted = 0.5 * std::erfc((q - gamma * sigma) / std::numbers::sqrt2);
  return mu + 0.5 * gamma * sigma * sigma + (std::log(shifted) - std::log1p(-alpha)) / gamma;
}

double quasi_linear_mean(const SymmetricModel& model, const UtilityFunction& u) {
  switch (u.kind()) {
    case UtilityKind::linear: return model.mu();
    case UtilityKind::exponential: {
      const double g = u.parameter();
      if (gamma_is_negligible(g)) return model.mu();
      return model.mu() + model.cumulant(g * model.sigma()) / g;
    }
    default:
      throw ParameterError("unconditional quasi-linear mean of a symmetric model needs a linear or "
                           "exponential utility, got " + u.to_string());
  }
}

double taylor_tqlm(double cte, double tv, const UtilityFunction& u, double evaluation_point) {
  if (tv < 0.0) throw ParameterError("tail variance must be >= 0");
  if (tv == 0.0) return cte;
  return cte - 0.5 * u.risk_aversion(evaluation_point) * tv;
}

// ---------------------------------------------------------------------------
// dual representation

DiscreteDistribution::DiscreteDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InputError("discrete distribution needs at least one atom");
  numerics::CompensatedSum total;
  for (const auto& a : atoms_) {
    if (!std::isfinite(a.point)) throw InputError("atom location is not finite");
    if (!(a.probability > 0.0)) throw ParameterError("atom probabilities must be positive");
    total.add(a.probability);
  }
  if (std::fabs(total.value() - 1.0) > 1e-12) {
    throw ParameterError("atom probabilities sum to " + format_shortest(total.value()));
  }
}

DiscreteDistribution DiscreteDistribution::uniform(std::span<const double> points) {
  std::vector<Atom> atoms;
  atoms.reserve(points.size());
  const double p = 1.0 / static_cast<double>(points.size());
  for (double x : points) atoms.push_back({x, p});
  return DiscreteDistribution(std::move(atoms));
}

double entropic_value(const DiscreteDistribution& reference, double gamma) {
  if (gamma == 0.0) throw ParameterError("gamma must be nonzero");
  double anchor = reference.atoms().front().point;
  for (const auto& a : reference.atoms()) {
    anchor = gamma > 0.0 ? std::max(anchor, a.point) : std::min(anchor, a.point);
  }
  numerics::CompensatedSum sum;
  for (const auto& a : reference.atoms()) sum.add(a.probability * std::expm1(gamma * (a.point - anchor)));
  return anchor + std::log1p(sum.value()) / gamma;
}

double dual_objective(const DiscreteDistribution& reference, std::span<const double> q, double gamma) {
  if (gamma == 0.0) throw ParameterError("gamma must be nonzero");
  const auto atoms = reference.atoms();
  if (q.size() != atoms.size()) throw InputError("measure and reference differ in size");
  numerics::CompensatedSum mean;
  numerics::CompensatedSum divergence;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] < 0.0) throw ParameterError("measure has a negative weight");
    if (q[i] == 0.0) continue;
    mean.add(q[i] * atoms[i].point);
    divergence.add(q[i] * std::log(q[i] / atoms[i].probability));
  }
  return mean.value() - divergence.value() / gamma;
}

DualSolution dual_entropic(const DiscreteDistribution& reference, double gamma) {
  if (!(gamma > 0.0)) throw ParameterError("dual representation needs gamma > 0");
  const auto atoms = reference.atoms();
  double anchor = atoms.front().point;
  for (const auto& a : atoms) anchor = std::max(anchor, a.point);
  std::vector<double> weights(atoms.size());
  numerics::CompensatedSum total;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    weights[i] = atoms[i].probability * std::exp(gamma * (atoms[i].point - anchor));
    total.add(weights[i]);
  }
  std::vector<Atom> tilted(atoms.size());
  std::vector<double> q(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    q[i] = weights[i] / total.value();
    tilted[i] = {atoms[i].point, q[i]};
  }
  // Renormalize against drift in the probability sum before validation.
  numerics::CompensatedSum check;
  for (double w : q) check.add(w);
  for (auto& a : tilted) a.probability /= check.value();
  const double value = dual_objective(reference, q, gamma);
  return DualSolution{value, DiscreteDistribution(std::move(tilted))};
}

// ---------------------------------------------------------------------------
// reports

std::string to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::var: return "var";
    case MeasureKind::cte: return "cte";
    case MeasureKind::tail_variance: return "tail_variance";
    case MeasureKind::tqlm: return "tqlm";
    case MeasureKind::tcerm: return "tcerm";
    case MeasureKind::taylor: return "taylor";
  }
  return "unknown";
}

namespace {

double require_exponential(const UtilityFunction& u) {
  if (u.kind() != UtilityKind::exponential) {
    throw ParameterError("entropic measure needs an exp:<gamma> utility, got " + u.to_string());
  }
  return u.parameter();
}

// Plug-in asymptotic standard error of the tail mean of h over the slice.
template <class H>
double tail_mean_error(const TailSlice& slice, H&& h, double mean_h) {
  numerics::CompensatedSum sq;
  for (double x : slice.members()) {
    const double d = h(x) - mean_h;
    sq.add(d * d);
  }
  const double k = static_cast<double>(slice.count());
  const double var_tail = sq.value() / k;
  const double jump = mean_h - h(slice.threshold());
  const double outside = 1.0 - slice.fraction();
  return std::sqrt((var_tail + outside * jump * jump) / k);
}

double var_error(const SampleSet& s, double alpha) {
  const auto sorted = s.sorted();
  const std::size_t n = sorted.size();
  const std::size_t k = var_order_index(alpha, n);
  const auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t lo = k > m ? k - m : 1;
  const std::size_t hi = std::min(n, k + m);
  const double spacing = sorted[hi - 1] - sorted[lo - 1];
  if (spacing <= 0.0 || hi == lo) return 0.0;
  const double density = static_cast<double>(hi - lo) / (static_cast<double>(n) * spacing);
  return std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(n)) / density;
}

double tqlm_error(const TailSlice& slice, const UtilityFunction& u, double rho) {
  const auto members = slice.members();
  if (u.kind() == UtilityKind::linear ||
      (u.kind() == UtilityKind::exponential && gamma_is_negligible(u.parameter()))) {
    const double m = anchored_mean(members, slice.threshold());
    return tail_mean_error(slice, [](double x) { return x; }, m);
  }
  if (u.kind() == UtilityKind::exponential) {
    const double g = u.parameter();
    const double anchor = g > 0.0 ? max_of(members) : min_of(members);
    const auto h = [g, anchor](double x) { return std::exp(g * (x - anchor)); };
    numerics::CompensatedSum sum;
    for (double x : members) sum.add(h(x));
    const double m = sum.value() / static_cast<double>(members.size());
    return tail_mean_error(slice, h, m) / (std::fabs(g) * m);
  }
  const double base = u.evaluate(min_of(members));
  const auto h = [&u, base](double x) { return u.evaluate(x) - base; };
  numerics::CompensatedSum sum;
  for (double x : members) sum.add(h(x));
  const double m = sum.value() / static_cast<double>(members.size());
  return tail_mean_error(slice, h, m) / u.derivative(rho);
}

}  // namespace

RiskReport empirical_report(const SampleSet& s, double alpha, MeasureKind kind,
                            const UtilityFunction& u) {
  RiskReport r{alpha, kind, "", 0.0, std::nullopt, "sample(n=" + std::to_string(s.size()) + ")"};
  const TailSlice slice(s, alpha);
  switch (kind) {
    case MeasureKind::var:
      r.value = slice.threshold();
      r.standard_error = var_error(s, alpha);
      break;
    case MeasureKind::cte: {
      r.value = cte_empirical(s, alpha);
      const double m = r.value;
      r.standard_error = tail_mean_error(slice, [](double x) { return x; }, m);
      break;
    }
    case MeasureKind::tail_variance: {
      const double c = cte_empirical(s, alpha);
      r.value = tail_variance_empirical(s, alpha);
      r.standard_error = tail_mean_error(slice, [c](double x) { return (x - c) * (x - c); }, r.value);
      break;
    }
    case MeasureKind::tqlm:
    case MeasureKind::tcerm: {
      if (kind == MeasureKind::tcerm) require_exponential(u);
      r.utility = u.to_string();
      r.value = tqlm_empirical(s, alpha, u);
      if (std::isfinite(r.value) && !(u.kind() == UtilityKind::capped && r.value >= u.parameter())) {
        r.standard_error = tqlm_error(slice, u, r.value);
      }
      break;
    }
    case MeasureKind::taylor:
      r.utility = u.to_string();
      r.value = taylor_tqlm(cte_empirical(s, alpha), tail_variance_empirical(s, alpha), u);
      break;
  }
  return r;
}

RiskReport analytic_report(const SymmetricModel& model, double alpha, MeasureKind kind,
                           const UtilityFunction& u) {
  RiskReport r{alpha, kind, "", 0.0, std::nullopt, model.to_string()};
  switch (kind) {
    case MeasureKind::var: r.value = var_analytic(model, alpha); break;
    case MeasureKind::cte: r.value = cte_analytic(model, alpha); break;
    case MeasureKind::tail_variance: r.value = tail_variance_analytic(model, alpha); break;
    case MeasureKind::tqlm:
      r.utility = u.to_string();
      r.value = tqlm_analytic(model, alpha, u);
      break;
    case MeasureKind::tcerm:
      r.utility = u.to_string();
      r.value = tcerm_analytic(model, alpha, require_exponential(u));
      break;
    case MeasureKind::taylor:
      r.utility = u.to_string();
      r.value = taylor_tqlm(cte_analytic(model, alpha), tail_variance_analytic(model, alpha), u);
      break;
  }
  return r;
}

}  // namespace tqlm
