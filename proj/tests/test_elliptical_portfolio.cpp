#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tqlm/elliptical_portfolio.hpp"
#include "tqlm/errors.hpp"
#include "tqlm/risk_engine.hpp"

using namespace tqlm;
using Catch::Approx;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = nd(rng);
  MatrixXd s = a * a.transpose() / n + 0.5 * MatrixXd::Identity(n, n);
  return 0.5 * (s + s.transpose());
}

EllipticalModel random_model(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(-0.5, 0.5);
  VectorXd mu(n);
  for (int i = 0; i < n; ++i) mu(i) = ud(rng);
  return EllipticalModel(mu, random_spd(n, rng), DensityGenerator::normal());
}

// closed-form normal objective, independent of the library path
double normal_objective(const EllipticalModel& m, const VectorXd& pi, double alpha, double gamma) {
  const double s = std::sqrt(pi.dot(m.sigma() * pi));
  const double q = oracle::normal_quantile(alpha);
  return pi.dot(m.mu()) + gamma * s * s / 2 + std::log(oracle::normal_sf(q - gamma * s) / (1 - alpha)) / gamma;
}

}  // namespace

TEST_CASE("model validation") {
  CHECK_THROWS_AS(EllipticalModel(vec({0, 0}), MatrixXd::Identity(3, 3), DensityGenerator::normal()), InputError);
  MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(EllipticalModel(vec({0, 0}), asym, DensityGenerator::normal()), ParameterError);
  MatrixXd sing(2, 2);
  sing << 1, 1, 1, 1;
  CHECK_THROWS_AS(EllipticalModel(vec({0, 0}), sing, DensityGenerator::normal()), ParameterError);
  CHECK_THROWS_AS(PortfolioWeights(vec({0.5, 0.6})), ParameterError);
  CHECK_NOTHROW(PortfolioWeights(vec({1.5, -0.5})));
}

TEST_CASE("identity partition") {
  const EllipticalModel m(vec({0, 0}), MatrixXd::Identity(2, 2), DensityGenerator::normal());
  const auto p = partition(m);
  REQUIRE(p.Q.rows() == 1);
  CHECK(p.Q(0, 0) == 2.0);
  CHECK(p.delta(0) == 0.0);
  CHECK_THROWS_AS(partition(EllipticalModel(vec({1}), MatrixXd::Identity(1, 1), DensityGenerator::normal())),
                  ParameterError);
}

TEST_CASE("partition blocks for a 3x3 model") {
  MatrixXd s(3, 3);
  s << 2, 0.3, 0.1, 0.3, 1, -0.2, 0.1, -0.2, 1.5;
  const EllipticalModel m(vec({0.1, 0.4, 0.7}), s, DensityGenerator::normal());
  const auto p = partition(m);
  // Q_ij = s_ij - s_in - s_jn + s_nn
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(p.Q(i, j) == Approx(s(i, j) - s(i, 2) - s(j, 2) + s(2, 2)).epsilon(1e-15));
  CHECK(p.delta(0) == Approx(0.6).epsilon(1e-15));
  CHECK(p.delta(1) == Approx(0.3).epsilon(1e-15));
}

TEST_CASE("marginal of a normal model is normal with the quadratic-form variance") {
  MatrixXd s(2, 2);
  s << 1, 0.5, 0.5, 2;
  const EllipticalModel m(vec({1, -1}), s, DensityGenerator::normal());
  const PortfolioWeights w(vec({0.3, 0.7}));
  const auto r = marginalize(m, w);
  CHECK(r.mu() == Approx(-0.4).epsilon(1e-15));
  CHECK(r.sigma() * r.sigma() == Approx(0.09 + 0.98 + 2 * 0.21 * 0.5).epsilon(1e-14));

  // Monte Carlo through a Cholesky factor
  const Eigen::LLT<MatrixXd> llt(s);
  const MatrixXd l = llt.matrixL();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  const int n = 1'000'000;
  double sum = 0, sum2 = 0;
  for (int k = 0; k < n; ++k) {
    const VectorXd x = m.mu() + l * vec({nd(rng), nd(rng)});
    const double y = w.pi().dot(x);
    sum += y;
    sum2 += y * y;
  }
  const double mean = sum / n, var = sum2 / n - mean * mean;
  CHECK(var == Approx(r.sigma() * r.sigma()).epsilon(0.01));
  CHECK(mean == Approx(-0.4).margin(0.01));
}

TEST_CASE("portfolio tcerm on unit weights is the marginal tcerm") {
  MatrixXd s(3, 3);
  s << 2, 0.3, 0.1, 0.3, 1, -0.2, 0.1, -0.2, 1.5;
  const EllipticalModel m(vec({0.1, 0.4, 0.7}), s, DensityGenerator::normal());
  for (int i = 0; i < 3; ++i) {
    VectorXd e = VectorXd::Zero(3);
    e(i) = 1;
    const double v = portfolio_tcerm(m, PortfolioWeights(e), 0.95, 0.5);
    CHECK(v == Approx(tcerm_normal(m.mu()(i), std::sqrt(s(i, i)), 0.95, 0.5)).epsilon(1e-12));
    CHECK(v == Approx(normal_objective(m, e, 0.95, 0.5)).epsilon(1e-12));
  }
}

TEST_CASE("portfolio tcerm matches the normal closed form on random weights") {
  const auto m = random_model(4, 3);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 20; ++k) {
    VectorXd pi(4);
    for (int i = 0; i < 3; ++i) pi(i) = nd(rng);
    pi(3) = 1 - pi.head(3).sum();
    for (double g : {-0.4, 0.1, 0.8})
      CHECK(portfolio_tcerm(m, PortfolioWeights(pi), 0.9, g) == Approx(normal_objective(m, pi, 0.9, g)).epsilon(1e-11));
  }
}

TEST_CASE("logistic portfolio tcerm scales with the model") {
  MatrixXd s(2, 2);
  s << 1, 0.2, 0.2, 0.5;
  const EllipticalModel m(vec({0, 0}), s, DensityGenerator::logistic());
  const EllipticalModel m4(vec({0, 0}), 4 * s, DensityGenerator::logistic());
  const PortfolioWeights w(vec({0.4, 0.6}));
  // 2X under exp(g) equals 2 * X under exp(2g)
  CHECK(portfolio_tcerm(m4, w, 0.95, 0.3) == Approx(2 * portfolio_tcerm(m, w, 0.95, 0.6)).epsilon(1e-10));
  const auto r = marginalize(m, w);
  CHECK(portfolio_tcerm(m, w, 0.95, 0.3) == Approx(tcerm_analytic(r, 0.95, 0.3)).epsilon(1e-13));
}

TEST_CASE("s function at t = 1 is the standard tcerm") {
  const auto g = DensityGenerator::normal();
  const double rho = tcerm_normal(0, 1, 0.95, 0.3);
  CHECK(s_function(1.0, g, 0.95, 0.3, RootEquationForm::scale_squared) == Approx(rho).epsilon(1e-12));
  CHECK(s_function(1.0, g, 0.95, 0.3, RootEquationForm::variance) == Approx(rho).epsilon(1e-12));
  const double cte = cte_analytic(SymmetricModel::normal(0, 1), 0.95);
  for (double t : {0.5, 2.0, 3.0}) {
    CHECK(s_function(t, g, 0.95, 1e-7) == Approx(t * t * cte).epsilon(1e-6));
    CHECK(s_function(t, g, 0.95, 1e-7, RootEquationForm::variance) == Approx(std::sqrt(t) * cte).epsilon(1e-6));
  }
  CHECK_THROWS_AS(s_function(0.0, g, 0.95, 0.3), ParameterError);
}

TEST_CASE("s prime agrees with a wide Richardson difference") {
  for (auto form : {RootEquationForm::scale_squared, RootEquationForm::variance}) {
    for (const auto& g : {DensityGenerator::normal(), DensityGenerator::logistic()}) {
      for (double t : {0.3, 1.0, 2.5}) {
        const auto s = [&](double x) { return s_function(x, g, 0.9, 0.4, form); };
        const double h = 1e-3;
        const double d1 = (s(t + h) - s(t - h)) / (2 * h), d2 = (s(t + 2 * h) - s(t - 2 * h)) / (4 * h);
        CHECK(s_prime(t, g, 0.9, 0.4, form) == Approx((4 * d1 - d2) / 3).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("symmetric two-asset fixture gives equal weights") {
  MatrixXd s(2, 2);
  s << 1, 0.3, 0.3, 1;
  const EllipticalModel m(vec({0.2, 0.2}), s, DensityGenerator::normal());
  for (auto form : {RootEquationForm::scale_squared, RootEquationForm::variance}) {
    const auto r = min_risk_weights(m, 0.95, 0.3, form);
    CHECK(r.pi_star[0] == Approx(0.5).margin(1e-6));
    CHECK(r.pi_star[1] == Approx(0.5).margin(1e-6));
    CHECK(r.oracle[0] == Approx(0.5).margin(1e-6));
    CHECK_FALSE(r.discrepancy);
  }
}

TEST_CASE("equal means reduce to minimum variance weights") {
  std::mt19937_64 rng(17);
  for (int n : {2, 3, 4}) {
    const EllipticalModel m(VectorXd::Constant(n, 0.3), random_spd(n, rng), DensityGenerator::normal());
    const auto r = min_risk_weights(m, 0.95, 0.3);
    const VectorXd mv = m.sigma().llt().solve(VectorXd::Ones(n));
    CHECK((r.phi1 - mv / mv.sum()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(r.phi2.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((r.pi_star.pi() - mv / mv.sum()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("small gamma limit matches minimum variance weights") {
  std::mt19937_64 rng(23);
  for (int n : {2, 3}) {
    const EllipticalModel m(VectorXd::Constant(n, -0.1), random_spd(n, rng), DensityGenerator::normal());
    const auto bf = brute_force_min(m, 0.95, 1e-6);
    const VectorXd mv = minimum_variance_weights(m).eval();
    CHECK((bf.weights.pi() - mv).cwiseAbs().maxCoeff() <= 1e-4);
    const auto r = min_risk_weights(m, 0.95, 1e-6, RootEquationForm::variance);
    CHECK((r.pi_star.pi() - mv).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("root-equation weights on random fixtures") {
  std::uint64_t seed = 100;
  for (int n : {2, 3, 4}) {
    for (double g : {0.1, 0.3}) {
      const auto m = random_model(n, seed++);
      for (auto form : {RootEquationForm::scale_squared, RootEquationForm::variance}) {
        const auto r = min_risk_weights(m, 0.95, g, form);
        CHECK(std::fabs(r.pi_star.pi().sum() - 1.0) <= 1e-10);
        CHECK(std::fabs(r.phi1.sum() - 1.0) <= 1e-12);
        CHECK(std::fabs(r.phi2.sum()) <= 1e-12);
        CHECK(r.r_star > 0);
        const bool close = r.max_deviation <= 1e-3;
        CHECK((close || (r.discrepancy && !r.diagnostic.empty())));
        CHECK(r.objective >= r.oracle_objective - 1e-10);
      }
      // the stationarity form lands on the direct minimizer
      const auto v = min_risk_weights(m, 0.95, g, RootEquationForm::variance);
      CHECK(v.max_deviation <= 1e-3);
      CHECK_FALSE(v.discrepancy);
    }
  }
}

TEST_CASE("brute force beats random portfolios") {
  const auto m = random_model(3, 31);
  const auto bf = brute_force_min(m, 0.95, 0.3);
  CHECK(std::fabs(bf.weights.pi().sum() - 1.0) <= 1e-12);
  CHECK(bf.objective == Approx(normal_objective(m, bf.weights.pi(), 0.95, 0.3)).epsilon(1e-11));
  std::mt19937_64 rng(32);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 1000; ++k) {
    VectorXd pi(3);
    pi(0) = bf.weights[0] + nd(rng) * (k % 2 ? 1.0 : 0.01);
    pi(1) = bf.weights[1] + nd(rng) * (k % 2 ? 1.0 : 0.01);
    pi(2) = 1 - pi(0) - pi(1);
    CHECK(normal_objective(m, pi, 0.95, 0.3) >= bf.objective - 1e-12);
  }
}

TEST_CASE("brute force agrees with golden-section search on two assets") {
  const auto m = random_model(2, 41);
  for (double g : {0.1, 0.5}) {
    const auto f = [&](double x) { return normal_objective(m, vec({x, 1 - x}), 0.95, g); };
    double a = -10, b = 10;
    const double phi = (std::sqrt(5.0) - 1) / 2;
    for (int k = 0; k < 200; ++k) {
      const double c = b - phi * (b - a), d = a + phi * (b - a);
      if (f(c) < f(d)) b = d;
      else a = c;
    }
    const double x = (a + b) / 2;
    const auto bf = brute_force_min(m, 0.95, g);
    CHECK(bf.weights[0] == Approx(x).margin(1e-6));
    CHECK(bf.objective == Approx(f(x)).epsilon(1e-12));
  }
}

TEST_CASE("mean shift moves the objective but not the weights") {
  const auto m = random_model(3, 55);
  const EllipticalModel shifted(m.mu().array() + 2.5, m.sigma(), m.generator());
  const auto a = min_risk_weights(m, 0.95, 0.3, RootEquationForm::variance);
  const auto b = min_risk_weights(shifted, 0.95, 0.3, RootEquationForm::variance);
  CHECK((a.pi_star.pi() - b.pi_star.pi()).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(b.objective == Approx(a.objective + 2.5).epsilon(1e-12));
}

TEST_CASE("root scan failure and generator errors") {
  MatrixXd s(2, 2);
  s << 1, 0.2, 0.2, 2;
  const EllipticalModel m(vec({0, 1}), s, DensityGenerator::normal());
  try {
    (void)min_risk_weights(m, 0.2, -1.0, RootEquationForm::variance);
    FAIL("expected NoRootError");
  } catch (const NoRootError& e) {
    CHECK(e.scanned().size() == 41);
    CHECK(std::string(e.what()).find("no sign change") != std::string::npos);
  }
  const EllipticalModel t(vec({0, 1}), s, DensityGenerator::student_t(5));
  CHECK_THROWS_AS(min_risk_weights(t, 0.95, 0.3), MgfNonexistentError);
  CHECK_THROWS_AS(portfolio_tcerm(t, PortfolioWeights(vec({0.5, 0.5})), 0.95, 0.3), MgfNonexistentError);
}
