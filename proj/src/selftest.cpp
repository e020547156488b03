#include "tqlm/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "tqlm/allocation.hpp"
#include "tqlm/elliptical_portfolio.hpp"
#include "tqlm/errors.hpp"
#include "tqlm/format.hpp"
#include "tqlm/reinsurance.hpp"
#include "tqlm/risk_engine.hpp"

namespace tqlm {
namespace {

using Rng = boost::random::mt19937_64;

PropertyResult check(const std::string& name, const std::function<std::string(bool&)>& body) {
  bool ok = true;
  std::string detail;
  try {
    detail = body(ok);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("threw: ") + e.what();
  }
  return {name, ok, detail};
}

std::string worst(const char* label, double value) {
  return std::string(label) + " " + format_g17(value);
}

}  // namespace

std::vector<PropertyResult> run_selftest(std::uint64_t seed) {
  std::vector<PropertyResult> out;
  const double alphas[] = {0.8, 0.9, 0.95, 0.99};

  out.push_back(check("utility_inverse_roundtrip", [&](bool& ok) {
    Rng rng(seed);
    boost::random::uniform_real_distribution<double> x01(0.05, 5.0);
    const UtilityFunction kinds[] = {UtilityFunction::linear(), UtilityFunction::exponential(0.7),
                                     UtilityFunction::exponential(-0.7), UtilityFunction::power(0.5),
                                     UtilityFunction::power(2.0), UtilityFunction::logarithmic(),
                                     UtilityFunction::capped(2.5)};
    double err = 0.0;
    for (const auto& u : kinds) {
      for (int i = 0; i < 200; ++i) {
        const double x = x01(rng);
        if (!u.strictly_increasing_at(x)) continue;
        const double y = u.evaluate(x);
        err = std::max({err, std::fabs(u.evaluate(u.generalized_inverse(y)) - y) / std::max(1.0, std::fabs(y)),
                        std::fabs(u.generalized_inverse(y) - x) / std::max(1.0, x)});
      }
    }
    ok = err <= 1e-12;
    return worst("max relative error", err);
  }));

  out.push_back(check("sandwich_analytic", [&](bool& ok) {
    std::size_t cases = 0;
    double slack = 0.0;
    for (const auto& gen : {DensityGenerator::normal(), DensityGenerator::student_t(5), DensityGenerator::logistic()}) {
      for (double a : alphas) {
        // Shifted location keeps the tail inside the power and log domains.
        const SymmetricModel m(gen, 10.0, 1.0);
        const double var = var_analytic(m, a);
        const double cte = cte_analytic(m, a);
        for (const auto& u : {UtilityFunction::exponential(-0.5), UtilityFunction::logarithmic(),
                              UtilityFunction::power(0.5), UtilityFunction::capped(var)}) {
          const double r = tqlm_analytic(m, a, u);
          slack = std::min({slack, r - var, cte - r});
          ++cases;
        }
        for (const auto& u : {UtilityFunction::exponential(0.5), UtilityFunction::power(2.0)}) {
          if (!gen.has_mgf() && u.kind() == UtilityKind::exponential) continue;
          slack = std::min(slack, tqlm_analytic(m, a, u) - cte);
          ++cases;
        }
      }
    }
    ok = slack >= -1e-9;
    return std::to_string(cases) + " cases, " + worst("worst slack", slack);
  }));

  out.push_back(check("closed_form_vs_quadrature", [&](bool& ok) {
    double err = 0.0;
    for (double a : {0.5, 0.8, 0.9, 0.95, 0.99}) {
      for (double g : {-1.0, -0.3, 0.2, 0.5, 1.5}) {
        const double closed = tcerm_normal(0.0, 1.0, a, g);
        const double quad = tqlm_analytic(SymmetricModel::normal(0.0, 1.0), a, UtilityFunction::exponential(g));
        err = std::max(err, std::fabs(closed - quad));
      }
    }
    ok = err <= 1e-8;
    return worst("max abs difference", err);
  }));

  out.push_back(check("entropic_limits", [&](bool& ok) {
    double err = 0.0;
    for (const auto& m : {SymmetricModel::normal(1.0, 2.0), SymmetricModel::logistic(-0.5, 1.5)}) {
      err = std::max(err, std::fabs(tcerm_analytic(m, 0.95, 1e-6) - cte_analytic(m, 0.95)));
      err = std::max(err, std::fabs(tcerm_analytic(m, 1e-6, 0.4) - quasi_linear_mean(m, UtilityFunction::exponential(0.4))));
    }
    ok = err <= 1e-4;
    return worst("max abs difference", err);
  }));

  out.push_back(check("taylor_second_order", [&](bool& ok) {
    const auto m = SymmetricModel::normal(0.0, 1.0);
    const double cte = cte_analytic(m, 0.95);
    const double tv = tail_variance_analytic(m, 0.95);
    std::vector<double> errs;
    for (double g : {0.4, 0.2, 0.1}) {
      errs.push_back(std::fabs(tcerm_analytic(m, 0.95, g) - taylor_tqlm(cte, tv, UtilityFunction::exponential(g))));
    }
    const double r1 = errs[0] / errs[1];
    const double r2 = errs[1] / errs[2];
    ok = std::fabs(r1 - 4.0) <= 1.0 && std::fabs(r2 - 4.0) <= 1.0;
    return "ratios " + format_g17(r1) + " " + format_g17(r2);
  }));

  out.push_back(check("dual_representation", [&](bool& ok) {
    Rng rng(seed + 1);
    const auto tail = SymmetricModel::normal(0.0, 1.0).sample(1000, seed + 1);
    const TailSlice slice(tail, 0.95);
    const auto points = slice.members();
    const auto ref = DiscreteDistribution::uniform(points);
    const double g = 0.7;
    const auto sol = dual_entropic(ref, g);
    const double target = entropic_value(ref, g);
    boost::random::uniform_real_distribution<double> jitter(0.5, 1.5);
    double beaten = 0.0;
    for (int k = 0; k < 200; ++k) {
      std::vector<double> q;
      double sum = 0.0;
      for (const auto& a : sol.optimizer.atoms()) {
        q.push_back(a.probability * jitter(rng));
        sum += q.back();
      }
      for (auto& w : q) w /= sum;
      beaten = std::max(beaten, dual_objective(ref, q, g) - sol.value);
    }
    const double err = std::fabs(sol.value - target);
    ok = err <= 1e-12 && beaten <= 1e-12;
    return std::to_string(points.size()) + " atoms, " + worst("value error", err) + ", " +
           worst("best perturbed excess", beaten);
  }));

  out.push_back(check("allocation_linear_additivity", [&](bool& ok) {
    Rng rng(seed + 2);
    boost::random::normal_distribution<double> z;
    std::vector<std::vector<double>> rows(5, std::vector<double>(20000));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (auto& x : rows[i]) x = (1.0 + static_cast<double>(i)) * z(rng);
    }
    const JointSample j(std::move(rows));
    const double gap = allocation_gap(j, 0.95, UtilityFunction::linear());
    ok = std::fabs(gap) <= 1e-12;
    return worst("gap", gap);
  }));

  out.push_back(check("reinsurance_exponential_retention", [&](bool& ok) {
    const ReinsuranceProblem p{ExponentialLoss{1.0}, 0.2, 0.03, 0.95};
    const double err = std::fabs(solve_retention(p).retention - std::log(40.0));
    bool margins = true;
    for (double g : {0.5, 2.0}) {
      margins = margins && verify_optimality(p, UtilityFunction::exponential(g), CandidateFamily::proportional).all_pass;
    }
    ok = err <= 1e-8 && margins;
    return worst("retention error", err) + (margins ? ", margins ok" : ", negative margin");
  }));

  out.push_back(check("portfolio_symmetric_pair", [&](bool& ok) {
    const EllipticalModel m(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), DensityGenerator::normal());
    const auto r = min_risk_weights(m, 0.95, 0.3);
    const double err = std::max(std::fabs(r.pi_star[0] - 0.5), std::fabs(r.pi_star[1] - 0.5));
    ok = err <= 1e-6;
    return worst("max weight error", err);
  }));

  out.push_back(check("monte_carlo_consistency", [&](bool& ok) {
    const auto m = SymmetricModel::normal(0.0, 1.0);
    const auto s = m.sample(200000, seed + 3);
    double worst_z = 0.0;
    const auto u = UtilityFunction::exponential(0.5);
    for (auto kind : {MeasureKind::var, MeasureKind::cte, MeasureKind::tail_variance, MeasureKind::tqlm}) {
      const auto e = empirical_report(s, 0.95, kind, u);
      const auto a = analytic_report(m, 0.95, kind, u);
      worst_z = std::max(worst_z, std::fabs(e.value - a.value) / *e.standard_error);
    }
    ok = worst_z <= 3.0;
    return worst("largest |z|", worst_z);
  }));

  return out;
}

}  // namespace tqlm
