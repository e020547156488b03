// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tqlm/allocation.hpp"
#include "tqlm/cli.hpp"
#include "tqlm/elliptical_portfolio.hpp"
#include "tqlm/reinsurance.hpp"
#include "tqlm/risk_engine.hpp"

using namespace tqlm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Check {
  bool ok = true;
  std::string first_failure;
  int count = 0;

  void expect(bool cond, const std::string& what) {
    ++count;
    if (!cond && ok) first_failure = what;
    ok = ok && cond;
  }
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

const oracle::Family kFamilies[] = {oracle::Family::normal, oracle::Family::student5, oracle::Family::logistic};

DensityGenerator generator_of(oracle::Family f) {
  switch (f) {
    case oracle::Family::normal: return DensityGenerator::normal();
    case oracle::Family::student5: return DensityGenerator::student_t(5);
    default: return DensityGenerator::logistic();
  }
}

// ---------------------------------------------------------------------------

Check sandwich() {
  Check c;
  for (auto f : kFamilies) {
    const SymmetricModel m(generator_of(f), 10.0, 1.0);
    for (double a : {0.8, 0.9, 0.95, 0.99}) {
      const double var = var_analytic(m, a), cte = cte_analytic(m, a);
      const std::string at = "family " + std::to_string(int(f)) + " alpha " + num(a);
      for (const auto& u : {UtilityFunction::exponential(-0.5), UtilityFunction::logarithmic(), UtilityFunction::power(0.5),
                            UtilityFunction::capped(var)}) {
        const double r = tqlm_analytic(m, a, u);
        c.expect(r >= var - 1e-9 && r <= cte + 1e-9, at + " " + u.to_string() + ": " + num(var) + " <= " + num(r) + " <= " + num(cte));
      }
      for (const auto& u : {UtilityFunction::exponential(0.5), UtilityFunction::power(2.0)}) {
        if (f == oracle::Family::student5 && u.kind() == UtilityKind::exponential) continue;  // no mgf
        const double r = tqlm_analytic(m, a, u);
        c.expect(r >= cte - 1e-9, at + " " + u.to_string() + ": " + num(r) + " >= " + num(cte));
      }
    }
  }
  return c;
}

Check closed_form() {
  Check c;
  const double ref = oracle::entropic_tail(oracle::Family::normal, 0, 1, 0.95, 0.5);
  const double v = tcerm_normal(0, 1, 0.95, 0.5);
  c.expect(std::fabs(v - ref) <= 1e-8, "headline " + num(v) + " vs " + num(ref));
  std::printf("  tcerm_normal(0,1,0.95,0.5) = %.12f, quadrature %.12f\n", v, ref);
  for (double a : {0.5, 0.8, 0.9, 0.95, 0.99}) {
    for (double g : {-1.0, -0.3, 0.1, 0.5, 1.5}) {
      const double q = oracle::entropic_tail(oracle::Family::normal, 0.3, 1.7, a, g);
      c.expect(std::fabs(tcerm_normal(0.3, 1.7, a, g) - q) <= 1e-8, "grid alpha " + num(a) + " gamma " + num(g));
      c.expect(std::fabs(tcerm_analytic(SymmetricModel::normal(0.3, 1.7), a, g) - q) <= 1e-8,
               "analytic grid alpha " + num(a) + " gamma " + num(g));
    }
  }
  return c;
}

Check limits() {
  Check c;
  for (auto f : {oracle::Family::normal, oracle::Family::logistic}) {
    const SymmetricModel m(generator_of(f), 1.0, 2.0);
    for (double a : {0.5, 0.9, 0.95}) {
      const double cte = 1.0 + 2.0 * oracle::tail_expectation(f, a, [](double z) { return z; });
      c.expect(std::fabs(tcerm_analytic(m, a, 1e-6) - cte) <= 1e-4, "gamma -> 0 at alpha " + num(a));
      c.expect(std::fabs(cte_analytic(m, a) - cte) <= 1e-9, "cte formula at alpha " + num(a));
    }
    // unit scale: the tilt moves the law by gamma sigma^2, so the mass cut off below
    // the 1e-6 quantile grows quickly with sigma when gamma < 0
    const SymmetricModel unit(generator_of(f), 1.0, 1.0);
    for (double g : {-0.5, 0.3, 0.8}) {
      const double full = oracle::entropic_full(f, 1.0, 1.0, g);
      const double gap = std::fabs(tcerm_analytic(unit, 1e-6, g) - full);
      c.expect(gap <= 1e-4, "alpha -> 0 at gamma " + num(g) + ", gap " + num(gap));
    }
  }
  for (auto f : kFamilies) {
    const SymmetricModel m(generator_of(f), -0.7, 1.3);
    for (double a : {0.01, 0.3, 0.5, 0.9, 0.99}) {
      const double ref = -0.7 + 1.3 * oracle::quantile(f, a);
      c.expect(std::fabs(var_analytic(m, a) - ref) <= 1e-10, "quantile alpha " + num(a));
    }
  }
  return c;
}

Check taylor_order() {
  Check c;
  const auto m = SymmetricModel::normal(0, 1);
  // CTE and TV from quadrature
  const double cte = oracle::tail_expectation(oracle::Family::normal, 0.95, [](double z) { return z; });
  const double m2 = oracle::tail_expectation(oracle::Family::normal, 0.95, [](double z) { return z * z; });
  const double tv = m2 - cte * cte;
  std::vector<double> err;
  for (double g : {0.4, 0.2, 0.1}) err.push_back(std::fabs(tcerm_analytic(m, 0.95, g) - (cte + g / 2 * tv)));
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double ratio = err[i] / err[i + 1];
    std::printf("  error ratio %.4f\n", ratio);
    c.expect(ratio >= 3.0 && ratio <= 5.0, "ratio " + num(ratio));
  }
  return c;
}

Check monte_carlo() {
  Check c;
  double worst = 0.0;
  for (const auto& m : {SymmetricModel::normal(1, 2), SymmetricModel::logistic(0.5, 1)}) {
    const auto s = m.sample(1'000'000, 20240611);
    const auto compare = [&](MeasureKind kind, const UtilityFunction& u) {
      for (double a : {0.9, 0.95, 0.99}) {
        const auto e = empirical_report(s, a, kind, u);
        const auto t = analytic_report(m, a, kind, u);
        const double z = std::fabs(e.value - t.value) / *e.standard_error;
        worst = std::max(worst, z);
        c.expect(z <= 3.0, m.to_string() + " " + to_string(kind) + " " + u.to_string() + " alpha " + num(a) + " z " + num(z));
      }
    };
    compare(MeasureKind::var, UtilityFunction::linear());
    compare(MeasureKind::cte, UtilityFunction::linear());
    compare(MeasureKind::tail_variance, UtilityFunction::linear());
    for (const auto& u : {UtilityFunction::exponential(0.5), UtilityFunction::exponential(-0.5)}) {
      compare(MeasureKind::tcerm, u);
      compare(MeasureKind::tqlm, u);
    }
  }
  std::printf("  largest |z| %.3f\n", worst);
  return c;
}

Check dual() {
  Check c;
  // standard normal tail above the 0.9 quantile, cut into 50 equal-probability cells
  const double alpha = 0.9, g = 0.8;
  std::vector<double> pts;
  for (int k = 0; k < 50; ++k) pts.push_back(oracle::normal_quantile(alpha + (1 - alpha) * (k + 0.5) / 50));
  const auto ref = DiscreteDistribution::uniform(pts);
  double mgf = 0.0;
  for (double z : pts) mgf += std::exp(g * z) / 50.0;
  const double closed = std::log(mgf) / g;

  const auto sol = dual_entropic(ref, g);
  std::vector<double> qstar;
  for (const auto& a : sol.optimizer.atoms()) qstar.push_back(a.probability);
  const double at_q = dual_objective(ref, qstar, g);
  c.expect(std::fabs(at_q - closed) <= 1e-12, "Q* objective " + num(at_q) + " vs " + num(closed));
  c.expect(std::fabs(sol.value - closed) <= 1e-12, "reported value");

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ud(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> q(50);
    double sum = 0.0;
    for (int i = 0; i < 50; ++i) sum += q[i] = qstar[i] * std::exp(0.3 * (trial % 4 + 1) * ud(rng));
    for (auto& x : q) x /= sum;
    c.expect(dual_objective(ref, q, g) <= at_q, "perturbation " + std::to_string(trial));
  }
  return c;
}

Check allocation() {
  Check c;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  std::lognormal_distribution<double> ld(0.0, 0.7);
  std::vector<std::vector<double>> rows(5, std::vector<double>(500'000));
  for (std::size_t k = 0; k < rows[0].size(); ++k) {
    const double common = nd(rng);
    for (std::size_t i = 0; i < 5; ++i) rows[i][k] = (i < 3 ? nd(rng) + 0.5 * common : ld(rng)) * (1.0 + i);
  }
  const JointSample j(rows);
  for (double a : {0.5, 0.9, 0.99}) {
    const double gap = allocation_gap(j, a, UtilityFunction::linear());
    c.expect(std::fabs(gap) <= 1e-12, "linear gap " + num(gap) + " at alpha " + num(a));
  }
  const SymmetricModel ms[] = {SymmetricModel::normal(0, 1), SymmetricModel::logistic(0.5, 1), SymmetricModel::normal(1, 2)};
  const auto co = comonotone_sample(ms, 500'000, 13);
  const auto cm = countermonotone_pair(SymmetricModel::normal(0, 1), SymmetricModel::logistic(0, 1), 500'000, 14);
  for (double g : {0.3, 1.0}) {
    const auto r = allocate(co, 0.95, UtilityFunction::exponential(g));
    c.expect(r.gap >= -3 * *r.gap_standard_error, "comonotone gap " + num(r.gap));
    const auto s = allocate(cm, 0.95, UtilityFunction::exponential(g));
    c.expect(s.gap <= 3 * *s.gap_standard_error, "countermonotone gap " + num(s.gap));
  }
  return c;
}

Check reinsurance() {
  Check c;
  const ReinsuranceProblem p{ExponentialLoss{1.0}, 0.2, 0.03, 0.95};
  const double target = std::log(40.0);
  const auto a = verify_optimality(p, UtilityFunction::exponential(0.5), CandidateFamily::proportional);
  const auto b = verify_optimality(p, UtilityFunction::exponential(2.0), CandidateFamily::proportional);
  c.expect(std::fabs(a.retention.retention - target) <= 1e-8, "retention " + num(a.retention.retention));
  c.expect(a.retention.retention == b.retention.retention, "retention depends on the utility");
  for (const auto* rep : {&a, &b}) {
    c.expect(rep->candidates.size() == 20, "candidate count");
    for (const auto& cand : rep->candidates) {
      c.expect(cand.margin >= -1e-9, cand.treaty.to_string() + " margin " + num(cand.margin));
      c.expect(std::fabs(1.2 * cand.treaty.expected_ceded(p.loss) - 0.03) <= 1e-8, "premium match " + cand.treaty.to_string());
    }
  }
  return c;
}

MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  MatrixXd x(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) x(i, k) = nd(rng);
  const MatrixXd s = x * x.transpose() / n + 0.3 * MatrixXd::Identity(n, n);
  return 0.5 * (s + s.transpose());
}

Check portfolio() {
  Check c;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ud(-0.3, 0.3);
  const int dims[] = {2, 3, 4, 3, 2};
  const double gammas[] = {0.1, 0.3, 0.1, 0.3, 0.3};
  for (int f = 0; f < 5; ++f) {
    const int n = dims[f];
    VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu(i) = ud(rng);
    const EllipticalModel m(mu, random_spd(n, rng), DensityGenerator::normal());
    for (auto form : {RootEquationForm::scale_squared, RootEquationForm::variance}) {
      const auto r = min_risk_weights(m, 0.95, gammas[f], form);
      const bool matched = r.max_deviation <= 1e-3;
      std::printf("  fixture %d (n=%d, gamma=%.1f) %-13s deviation %.3g %s\n", f, n, gammas[f], to_string(form).c_str(),
                  r.max_deviation, matched ? "matched" : (r.discrepancy ? "diagnostic fired" : "UNFLAGGED"));
      c.expect(matched || (r.discrepancy && !r.diagnostic.empty()), "fixture " + std::to_string(f) + " " + to_string(form));
    }
  }

  MatrixXd s2(2, 2);
  s2 << 1.0, 0.4, 0.4, 1.0;
  const EllipticalModel sym(VectorXd::Constant(2, 0.1), s2, DensityGenerator::normal());
  for (auto form : {RootEquationForm::scale_squared, RootEquationForm::variance}) {
    const auto r = min_risk_weights(sym, 0.95, 0.3, form);
    c.expect(std::fabs(r.pi_star[0] - 0.5) <= 1e-6 && std::fabs(r.pi_star[1] - 0.5) <= 1e-6, "symmetric pair");
  }

  for (int n : {2, 3, 4}) {
    const EllipticalModel m(VectorXd::Constant(n, 0.05), random_spd(n, rng), DensityGenerator::normal());
    const VectorXd w = m.sigma().ldlt().solve(VectorXd::Ones(n));
    const VectorXd mv = w / w.sum();
    const auto r = min_risk_weights(m, 0.95, 1e-6);
    c.expect((r.pi_star.pi() - mv).cwiseAbs().maxCoeff() <= 1e-4, "small gamma root path, n=" + std::to_string(n));
    c.expect((r.oracle.pi() - mv).cwiseAbs().maxCoeff() <= 1e-4, "small gamma direct search, n=" + std::to_string(n));
  }
  return c;
}

std::vector<std::string> read_args(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> args;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) args.push_back(line);
  }
  return args;
}

Check golden() {
  Check c;
  namespace fs = std::filesystem;
  const fs::path dir = TQLM_GOLDEN_DIR;
  const fs::path cwd = fs::current_path();
  fs::current_path(dir);
  std::vector<std::string> seen;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".args") continue;
    const auto args = read_args(e.path());
    seen.push_back(args.front());
    std::ifstream f(fs::path(e.path()).replace_extension(".out"), std::ios::binary);
    const std::string expected{std::istreambuf_iterator<char>(f), {}};
    for (int rep = 0; rep < 2; ++rep) {
      std::ostringstream out, err;
      const int code = cli::run(args, out, err);
      c.expect(code == 0, e.path().filename().string() + " exit " + std::to_string(code));
      c.expect(out.str() == expected, e.path().filename().string() + " differs from its golden file");
    }
  }
  fs::current_path(cwd);
  for (const char* cmd : {"measure", "sweep", "allocate", "reinsure", "portfolio", "selftest"}) {
    c.expect(std::find(seen.begin(), seen.end(), cmd) != seen.end(), std::string("no golden case for ") + cmd);
  }
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Check()> run;
  };
  const Criterion criteria[] = {
      {1, "sandwich VaR <= TQLM <= CTE, convex TQLM >= CTE", 10, sandwich},
      {2, "closed form vs tail quadrature", 5, closed_form},
      {3, "limit recovery and quantile formula", 0, limits},
      {4, "second-order error shrinks by four", 0, taylor_order},
      {5, "Monte Carlo within 3 SE of analytic", 30, monte_carlo},
      {6, "dual representation on 50 atoms", 0, dual},
      {7, "allocation gaps", 0, allocation},
      {8, "stop-loss retention and optimality", 0, reinsurance},
      {9, "minimal-risk portfolio weights", 60, portfolio},
      {10, "CLI golden files", 0, golden},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = cr.run();
    } catch (const std::exception& e) {
      c.ok = false;
      c.first_failure = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s > 0 && secs >= cr.budget_s) {
      c.expect(false, "runtime " + num(secs) + " s over " + num(cr.budget_s) + " s");
    }
    std::printf("%s criterion %d: %s (%d checks, %.2f s)%s%s\n", c.ok ? "PASS" : "FAIL", cr.id, cr.name, c.count, secs,
                c.ok ? "" : " -- ", c.first_failure.c_str());
    std::fflush(stdout);
    if (!c.ok) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
