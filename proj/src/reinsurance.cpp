#include "tqlm/reinsurance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "numerics.hpp"
#include "spec_parse.hpp"
#include "tqlm/errors.hpp"
#include "tqlm/format.hpp"
#include "tqlm/risk_engine.hpp"

namespace tqlm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};

// E[(Z - z)_+] for the standard member.
double standard_excess(const DensityGenerator& gen, double z) {
  if (z < 0.0) return -z + standard_excess(gen, -z);
  if (gen.kind() == GeneratorKind::student_t && gen.degrees_of_freedom() <= 1.0) {
    throw UnsupportedGeneratorError("expected excess needs a finite mean, " + gen.to_string() +
                                    " has none");
  }
  const auto f = [&](double y) { return (y - z) * gen.density(y); };
  if (gen.has_mgf()) return numerics::integrate(f, z, z + DensityGenerator::kLightTailWidth + 1.0);
  return numerics::integrate(f, z, kInf);
}

double loss_survival(const LossModel& loss, double x) {
  return std::visit(overloaded{
                        [&](const SampleSet&) -> double { throw InternalError("sample survival"); },
                        [&](const SymmetricModel& m) { return m.survival(x); },
                        [&](const ExponentialLoss& e) { return x <= 0.0 ? 1.0 : std::exp(-e.rate * x); },
                    },
                    loss);
}

// Typical spread of the loss, used to size brackets.
double loss_scale(const LossModel& loss) {
  return std::visit(overloaded{
                        [](const SampleSet& s) {
                          const auto v = s.sorted();
                          return std::max(v.back() - v.front(), 1e-12);
                        },
                        [](const SymmetricModel& m) { return m.sigma(); },
                        [](const ExponentialLoss& e) { return 1.0 / e.rate; },
                    },
                    loss);
}

// Smallest d >= lower with E[(X - d)_+] = target, given E[(X - lower)_+] >= target.
double solve_excess_level(const LossModel& loss, double target, double lower) {
  const auto h = [&](double d) { return expected_excess(loss, d) - target; };
  const double h_lo = h(lower);
  if (h_lo <= 0.0) return lower;
  double step = std::max(std::fabs(lower), loss_scale(loss));
  double hi = lower + step;
  double h_hi = h(hi);
  for (int i = 0; h_hi > 0.0; ++i) {
    if (i > 200) throw InternalError("could not bracket the retention");
    step *= 2.0;
    hi = lower + step;
    h_hi = h(hi);
  }
  return numerics::solve_bracketed(h, lower, hi, h_lo, h_hi);
}

struct Segment {
  double lo;
  double hi;
  double slope;  // dR/dx on the segment
};

// Pieces of R_f above x0 on which R_f is linear.
std::vector<Segment> retained_segments(const Treaty& t, double x0) {
  std::vector<double> cuts{x0};
  for (double c : {0.0, t.breakpoint()}) {
    if (c > cuts.back()) cuts.push_back(c);
  }
  cuts.push_back(kInf);
  std::vector<Segment> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = std::isinf(cuts[i + 1]) ? cuts[i] + 1.0 : 0.5 * (cuts[i] + cuts[i + 1]);
    double slope = 1.0;
    if (mid >= t.breakpoint() && mid >= 0.0) {
      slope = 1.0 - t.high_share();
    } else if (mid >= 0.0) {
      slope = 1.0 - t.low_share();
    }
    out.push_back({cuts[i], cuts[i + 1], slope});
  }
  return out;
}

// Lowest x with R_f(x) = R_f(v); the tail event {R_f(X) >= VaR(R_f(X))} is {X >= x0}.
double tail_start(const Treaty& t, double v) {
  double x0 = v;
  if (t.high_share() == 1.0 && v >= t.breakpoint()) x0 = t.breakpoint();
  if (t.low_share() == 1.0 && x0 >= 0.0 && x0 <= t.breakpoint()) x0 = 0.0;
  return x0;
}

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void check_divergence(const LossModel& loss, const Treaty& t, const UtilityFunction& u) {
  const double slope = t.tail_retained_slope();
  if (slope <= 0.0) return;
  const double g = u.parameter();
  if (const auto* e = std::get_if<ExponentialLoss>(&loss)) {
    if (u.kind() == UtilityKind::exponential && g * slope >= e->rate) {
      throw MgfNonexistentError("E[exp(" + format_shortest(g) + " R)] diverges: retained slope " +
                                format_shortest(slope) + " against exponential rate " +
                                format_shortest(e->rate));
    }
  }
  if (const auto* m = std::get_if<SymmetricModel>(&loss)) {
    const auto& gen = m->generator();
    if (gen.has_mgf()) return;
    if (u.kind() == UtilityKind::exponential && g > 0.0) {
      throw MgfNonexistentError("Student-t has no moment generating function");
    }
    if (u.kind() == UtilityKind::power && g >= gen.degrees_of_freedom()) {
      throw MgfNonexistentError("E[R^" + format_shortest(g) + "] diverges for " + gen.to_string());
    }
  }
}

// Exponential utility on an exponential loss: every segment integral is closed form.
double entropic_exponential(const ExponentialLoss& e, const Treaty& t, double gamma, double x0,
                            double r0) {
  const double lambda = e.rate;
  double log_total = -kInf;
  for (const auto& s : retained_segments(t, x0)) {
    const double k = gamma * s.slope - lambda;
    const double length = s.hi - s.lo;
    double integral;
    if (std::isinf(length)) {
      integral = -1.0 / k;
    } else if (k == 0.0) {
      integral = length;
    } else {
      integral = std::expm1(k * length) / k;
    }
    const double log_term = gamma * (t.retained(s.lo) - r0) - lambda * (s.lo - x0) +
                            std::log(lambda) + std::log(integral);
    log_total = log_sum_exp(log_total, log_term);
  }
  return r0 + log_total / gamma;
}

double entropic_symmetric(const SymmetricModel& m, const Treaty& t, double gamma, double x0,
                          double r0) {
  const auto& gen = m.generator();
  const double mu = m.mu();
  const double sigma = m.sigma();
  double log_total = -kInf;
  for (const auto& s : retained_segments(t, x0)) {
    const double za = (s.lo - mu) / sigma;
    const double zb = std::isinf(s.hi) ? kInf : (s.hi - mu) / sigma;
    const auto exponent = [&](double z) {
      return gamma * (t.retained(mu + sigma * z) - r0) + gen.log_g(0.5 * z * z);
    };
    const double mode = std::clamp(gamma * sigma * s.slope, za, std::isinf(zb) ? kInf : zb);
    const double shift = std::max(exponent(za), exponent(mode));
    double upper = zb;
    if (std::isinf(zb) && gen.has_mgf()) upper = std::max(za, mode) + DensityGenerator::kLightTailWidth;
    const double j = numerics::integrate(
        [&](double z) {
          const double ex = exponent(z) - shift;
          return std::isfinite(ex) ? std::exp(ex) : 0.0;
        },
        za, upper);
    if (j > 0.0) log_total = log_sum_exp(log_total, shift + std::log(j));
  }
  return r0 + (log_total - std::log(m.survival(x0))) / gamma;
}

// U^{-1}(E[U(R) | X >= x0]) for a general catalogue utility.
double general_retained(const LossModel& loss, const Treaty& t, const UtilityFunction& u, double x0,
                        double r0) {
  if (!u.in_domain(r0)) {
    throw DomainError("retained VaR " + format_shortest(r0) + " outside the domain of " +
                      u.to_string());
  }
  const double base = u.evaluate(r0);
  const auto h = [&](double x) { return u.evaluate(t.retained(x)) - base; };
  double excess = 0.0;
  for (const auto& s : retained_segments(t, x0)) {
    if (const auto* e = std::get_if<ExponentialLoss>(&loss)) {
      const double lambda = e->rate;
      excess += numerics::integrate(
          [&](double x) {
            const double d = lambda * std::exp(-lambda * x);
            return d == 0.0 ? 0.0 : h(x) * d;
          },
          s.lo, s.hi);
    } else {
      const auto& m = std::get<SymmetricModel>(loss);
      const auto& gen = m.generator();
      const double za = (s.lo - m.mu()) / m.sigma();
      double zb = std::isinf(s.hi) ? kInf : (s.hi - m.mu()) / m.sigma();
      if (std::isinf(zb) && gen.has_mgf()) {
        const double extra = u.kind() == UtilityKind::power ? std::sqrt(std::max(u.parameter(), 0.0)) : 0.0;
        zb = std::max(za, 0.0) + DensityGenerator::kLightTailWidth + extra;
      }
      excess += numerics::integrate(
          [&](double z) {
            const double d = gen.density(z);
            return d == 0.0 ? 0.0 : h(m.mu() + m.sigma() * z) * d;
          },
          za, zb);
    }
  }
  return u.generalized_inverse(base + excess / loss_survival(loss, x0));
}

}  // namespace

// ---------------------------------------------------------------------------

LossModel parse_loss(std::string_view spec) {
  const auto call = detail::parse_call(spec);
  if (call.name == "exponential") {
    if (call.args.size() != 1 || !(call.args[0] > 0.0)) {
      throw ParameterError("exponential loss needs one positive rate: '" + std::string(spec) + "'");
    }
    return ExponentialLoss{call.args[0]};
  }
  return SymmetricModel::parse(spec);
}

std::string describe(const LossModel& loss) {
  return std::visit(overloaded{
                        [](const SampleSet& s) { return "sample(n=" + std::to_string(s.size()) + ")"; },
                        [](const SymmetricModel& m) { return m.to_string(); },
                        [](const ExponentialLoss& e) { return "exponential(" + format_shortest(e.rate) + ")"; },
                    },
                    loss);
}

double loss_var(const LossModel& loss, double alpha) {
  return std::visit(overloaded{
                        [&](const SampleSet& s) { return var_empirical(s, alpha); },
                        [&](const SymmetricModel& m) { return m.quantile(alpha); },
                        [&](const ExponentialLoss& e) {
                          if (!(alpha > 0.0 && alpha < 1.0)) {
                            throw ParameterError("alpha must lie in (0,1), got " + format_shortest(alpha));
                          }
                          return -std::log1p(-alpha) / e.rate;
                        },
                    },
                    loss);
}

double expected_excess(const LossModel& loss, double a) {
  return std::visit(overloaded{
                        [&](const SampleSet& s) {
                          numerics::CompensatedSum sum;
                          for (double x : s.values()) {
                            if (x > a) sum.add(x - a);
                          }
                          return sum.value() / static_cast<double>(s.size());
                        },
                        [&](const SymmetricModel& m) {
                          return m.sigma() * standard_excess(m.generator(), (a - m.mu()) / m.sigma());
                        },
                        [&](const ExponentialLoss& e) {
                          if (a <= 0.0) return 1.0 / e.rate - a;
                          return std::exp(-e.rate * a) / e.rate;
                        },
                    },
                    loss);
}

// ---------------------------------------------------------------------------

Treaty::Treaty(Kind kind, double q_low, double q_high, double b)
    : kind_(kind), q_low_(q_low), q_high_(q_high), b_(b) {
  const auto share_ok = [](double q) { return q >= 0.0 && q <= 1.0; };
  if (!share_ok(q_low) || !share_ok(q_high)) {
    throw ParameterError("treaty shares must lie in [0,1]");
  }
  if (!(b >= 0.0) || !std::isfinite(b)) throw ParameterError("treaty retention must be finite and >= 0");
}

Treaty Treaty::none() { return Treaty(Kind::none, 0.0, 0.0, 0.0); }
Treaty Treaty::stop_loss(double retention) { return Treaty(Kind::stop_loss, 0.0, 1.0, retention); }
Treaty Treaty::proportional(double share) { return Treaty(Kind::proportional, 0.0, share, 0.0); }
Treaty Treaty::excess_quota(double share, double deductible) {
  return Treaty(Kind::excess_quota, 0.0, share, deductible);
}
Treaty Treaty::layered(double share, double limit) { return Treaty(Kind::layered, share, 1.0, limit); }

std::string Treaty::to_string() const {
  switch (kind_) {
    case Kind::none: return "none";
    case Kind::stop_loss: return "stop_loss(" + format_g17(b_) + ")";
    case Kind::proportional: return "proportional(" + format_g17(q_high_) + ")";
    case Kind::excess_quota: return "excess_quota(" + format_g17(q_high_) + "," + format_g17(b_) + ")";
    case Kind::layered: return "layered(" + format_g17(q_low_) + "," + format_g17(b_) + ")";
  }
  return "unknown";
}

double Treaty::ceded(double x) const noexcept {
  if (x <= 0.0) return 0.0;
  return q_low_ * std::min(x, b_) + q_high_ * std::max(x - b_, 0.0);
}

// Piecewise so that stop-loss gives min(x, a) exactly.
double Treaty::retained(double x) const noexcept {
  if (x <= 0.0) return x;
  if (x <= b_) return x - q_low_ * x;
  return (b_ - q_low_ * b_) + (1.0 - q_high_) * (x - b_);
}

double Treaty::expected_ceded(const LossModel& loss) const {
  if (q_low_ == 0.0 && q_high_ == 0.0) return 0.0;
  if (const auto* s = std::get_if<SampleSet>(&loss)) {
    numerics::CompensatedSum sum;
    for (double x : s->values()) sum.add(ceded(x));
    return sum.value() / static_cast<double>(s->size());
  }
  const double above = expected_excess(loss, b_);
  double total = q_high_ * above;
  if (q_low_ > 0.0) total += q_low_ * (expected_excess(loss, 0.0) - above);
  return total;
}

// ---------------------------------------------------------------------------

RetentionSolution solve_retention(const ReinsuranceProblem& p) {
  if (!(p.theta > 0.0) || !std::isfinite(p.theta)) throw ParameterError("loading theta must be > 0");
  if (!(p.budget > 0.0) || !std::isfinite(p.budget)) throw ParameterError("budget P must be > 0");
  const double v = loss_var(p.loss, p.alpha);
  const double load = 1.0 + p.theta;
  const double bound = load * expected_excess(p.loss, v);
  if (!(p.budget < bound)) {
    throw FeasibilityError("budget " + format_shortest(p.budget) +
                           " is not below the feasibility bound (1+theta)E[(X-VaR)_+] = " +
                           format_g17(bound));
  }
  const double a = solve_excess_level(p.loss, p.budget / load, v);
  return RetentionSolution{a, v, bound, load * expected_excess(p.loss, a) - p.budget};
}

double retained_risk(const LossModel& loss, const Treaty& t, double alpha, const UtilityFunction& u) {
  if (const auto* s = std::get_if<SampleSet>(&loss)) {
    std::vector<double> r;
    r.reserve(s->size());
    for (double x : s->values()) r.push_back(t.retained(x));
    return tqlm_empirical(SampleSet(std::move(r)), alpha, u);
  }
  check_divergence(loss, t, u);
  const double v = loss_var(loss, alpha);
  const double x0 = tail_start(t, v);
  const double r0 = t.retained(v);
  if (u.kind() == UtilityKind::exponential && std::fabs(u.parameter()) >= kGammaCteCutoff) {
    if (const auto* e = std::get_if<ExponentialLoss>(&loss)) {
      return entropic_exponential(*e, t, u.parameter(), x0, r0);
    }
    return entropic_symmetric(std::get<SymmetricModel>(loss), t, u.parameter(), x0, r0);
  }
  const auto lin = u.kind() == UtilityKind::exponential ? UtilityFunction::linear() : u;
  return general_retained(loss, t, lin, x0, r0);
}

std::string to_string(CandidateFamily family) {
  return family == CandidateFamily::proportional ? "proportional" : "mixed_stop_loss";
}

OptimalityReport verify_optimality(const ReinsuranceProblem& p, const UtilityFunction& u,
                                   CandidateFamily family, std::size_t count) {
  if (!u.is_strictly_convex()) {
    throw ParameterError("optimality check needs a strictly convex utility, got " + u.to_string());
  }
  if (count == 0) throw ParameterError("candidate count must be positive");
  OptimalityReport report;
  report.retention = solve_retention(p);
  const double a = report.retention.retention;
  const Treaty star = Treaty::stop_loss(a);
  report.stop_loss_risk = retained_risk(p.loss, star, p.alpha, u);

  if (const auto* s = std::get_if<SampleSet>(&p.loss)) {
    std::vector<double> r;
    for (double x : s->values()) r.push_back(star.retained(x));
    const auto rep = empirical_report(SampleSet(std::move(r)), p.alpha, MeasureKind::tqlm, u);
    report.tolerance = 3.0 * rep.standard_error.value_or(0.0);
  } else {
    report.tolerance = 1e-9;
  }

  const double load = 1.0 + p.theta;
  const double ceded_target = p.budget / load;
  const double positive_mean = expected_excess(p.loss, 0.0);

  std::vector<Treaty> treaties;
  if (family == CandidateFamily::proportional) {
    const double q_min = ceded_target / positive_mean;
    if (!(q_min < 1.0)) throw FeasibilityError("budget exceeds the cost of a full quota share");
    for (std::size_t i = 0; i < count; ++i) {
      const double q = q_min + (1.0 - q_min) * static_cast<double>(i) / static_cast<double>(count);
      if (i == 0) {
        treaties.push_back(Treaty::proportional(q));
        continue;
      }
      const double d = solve_excess_level(p.loss, ceded_target / q, 0.0);
      treaties.push_back(Treaty::excess_quota(q, d));
    }
  } else {
    const double scale = std::max(a - report.retention.var, 1e-3 * std::max(1.0, std::fabs(a)));
    for (std::size_t i = 0; i < count; ++i) {
      const double b = a + scale * 0.02 * std::pow(1.35, static_cast<double>(i));
      const double above = expected_excess(p.loss, b);
      const double q = (ceded_target - above) / (positive_mean - above);
      if (!(q >= 0.0 && q <= 1.0)) continue;
      treaties.push_back(Treaty::layered(q, b));
    }
  }

  report.all_pass = true;
  for (const auto& t : treaties) {
    CandidateResult c{t, load * t.expected_ceded(p.loss) - p.budget, 0.0, 0.0, false};
    try {
      c.risk = retained_risk(p.loss, t, p.alpha, u);
    } catch (const MgfNonexistentError&) {
      c.risk = kInf;
    }
    c.margin = c.risk - report.stop_loss_risk;
    c.passes = c.margin >= -report.tolerance && std::fabs(c.premium_residual) <= 1e-8;
    report.all_pass = report.all_pass && c.passes;
    report.candidates.push_back(c);
  }
  return report;
}

}  // namespace tqlm
