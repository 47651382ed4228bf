#include <doctest.h>

#include <cmath>

#include "gencal/datagen.hpp"
#include "gencal/error.hpp"
#include "gencal/glm.hpp"
#include "gencal/rng.hpp"
#include "oracles.hpp"

using namespace gencal;

namespace {

const FamilySpec kPoisson(FamilyKind::poisson);
const FamilySpec kBernoulli(FamilyKind::bernoulli);
const FamilySpec kGaussian(FamilyKind::gaussian);
const LinkSpec kLog(LinkKind::log);
const LinkSpec kLogit(LinkKind::logit);
const LinkSpec kIdentity(LinkKind::identity);

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<std::string> names(int p) {
  std::vector<std::string> out;
  for (int j = 1; j <= p; ++j) out.push_back("x" + std::to_string(j));
  return out;
}

struct Problem {
  Eigen::VectorXd y;
  Eigen::MatrixXd Z;  // covariates without intercept
};

Problem random_problem(Rng& rng, int n, int p, bool poisson) {
  Problem pr{Eigen::VectorXd(n), Eigen::MatrixXd(n, p)};
  Eigen::VectorXd beta(p + 1);
  for (int j = 0; j <= p; ++j) beta[j] = 0.6 * (rng.uniform() - 0.5);
  for (int i = 0; i < n; ++i) {
    double eta = beta[0];
    for (int j = 0; j < p; ++j) {
      pr.Z(i, j) = rng.normal();
      eta += beta[j + 1] * pr.Z(i, j);
    }
    pr.y[i] = poisson ? static_cast<double>(rng.poisson(std::exp(eta)))
                      : (rng.uniform() < oracle::expit(eta) ? 1.0 : 0.0);
  }
  return pr;
}

Eigen::MatrixXd with_ones(const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd X(Z.rows(), Z.cols() + 1);
  X.col(0).setOnes();
  X.rightCols(Z.cols()) = Z;
  return X;
}

}  // namespace

TEST_CASE("intercept-only fits") {
  const GlmFit p = fit_glm(vec({1, 2, 3}), DesignMatrix::intercept_only(3), kPoisson, kLog);
  CHECK(p.coefficients[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(p.converged);
  const GlmFit b = fit_glm(vec({1, 1, 0, 0}), DesignMatrix::intercept_only(4), kBernoulli, kLogit);
  CHECK(std::abs(b.coefficients[0]) < 1e-12);
}

TEST_CASE("offset-only fits") {
  const auto a = fit_glm_offset_only(vec({2, 4}), vec({std::log(2.0), std::log(4.0)}), kPoisson, kLog);
  CHECK(std::abs(a.coefficients[0]) < 1e-12);
  const auto b = fit_glm_offset_only(vec({2, 4}), vec({0.0, std::log(2.0)}), kPoisson, kLog);
  const double root = oracle::bisect_decreasing(
      [](double c) { return 6.0 - std::exp(c) * 3.0; }, -5, 5);
  CHECK(b.coefficients[0] == doctest::Approx(root).epsilon(1e-12));
  CHECK(b.coefficients[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const auto c = fit_glm_offset_only(vec({1, 0}), vec({0, 0}), kBernoulli, kLogit);
  CHECK(std::abs(c.coefficients[0]) < 1e-12);
}

TEST_CASE("Newton oracle agreement on random Poisson and Bernoulli problems") {
  Rng rng(derive_seed(99, 6));
  for (int rep = 0; rep < 10; ++rep) {
    const bool poisson = rep % 2 == 0;
    const int p = 1 + rep % 5;
    const Problem pr = random_problem(rng, 200, p, poisson);
    const GlmFit fit = fit_glm(pr.y, DesignMatrix::with_intercept(pr.Z, names(p)),
                               poisson ? kPoisson : kBernoulli, poisson ? kLog : kLogit);
    const Eigen::VectorXd ref = oracle::newton_glm(pr.y, with_ones(pr.Z), poisson);
    CHECK((fit.coefficients - ref).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("Gaussian identity reproduces least squares") {
  Rng rng(8);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 60, p = 3;
    Eigen::MatrixXd Z(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) Z(i, j) = rng.normal();
      y[i] = 1.0 + Z(i, 0) - 2.0 * Z(i, 2) + rng.normal();
    }
    const Eigen::MatrixXd X = with_ones(Z);
    const Eigen::VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    const GlmFit fit = fit_glm(y, DesignMatrix::with_intercept(Z, names(p)), kGaussian, kIdentity);
    CHECK((fit.coefficients - ols).lpNorm<Eigen::Infinity>() < 1e-8);
    const double sigma2 = (y - X * ols).squaredNorm() / (n - p - 1);
    CHECK(fit.dispersion == doctest::Approx(sigma2).epsilon(1e-10));
  }
}

TEST_CASE("property: deviance trace is non-increasing") {
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    const bool poisson = rep % 2 == 1;
    const Problem pr = random_problem(rng, 150, 4, poisson);
    const GlmFit fit = fit_glm(pr.y, DesignMatrix::with_intercept(pr.Z, names(4)),
                               poisson ? kPoisson : kBernoulli, poisson ? kLog : kLogit);
    for (std::size_t t = 1; t < fit.deviance_trace.size(); ++t) {
      CHECK(fit.deviance_trace[t] <= fit.deviance_trace[t - 1] + 1e-10);
    }
  }
}

TEST_CASE("property: row permutation leaves coefficients unchanged") {
  Rng rng(41);
  const int n = 120;
  const Problem pr = random_problem(rng, n, 3, true);
  Eigen::VectorXd off(n), w(n);
  for (int i = 0; i < n; ++i) {
    off[i] = 0.3 * rng.normal();
    w[i] = 0.5 + rng.uniform();
  }
  const GlmFit a = fit_glm(pr.y, DesignMatrix::with_intercept(pr.Z, names(3)), kPoisson, kLog, off, w);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
  perm.setIdentity();
  for (int i = n - 1; i > 0; --i) std::swap(perm.indices()[i], perm.indices()[rng.below(i + 1)]);
  const Eigen::MatrixXd Zp = perm * pr.Z;
  const Eigen::VectorXd yp = perm * pr.y, op = perm * off, wp = perm * w;
  const GlmFit b = fit_glm(yp, DesignMatrix::with_intercept(Zp, names(3)), kPoisson, kLog, op, wp);
  CHECK((a.coefficients - b.coefficients).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("property: offset equals a column with coefficient frozen at one") {
  Rng rng(51);
  const int n = 200;
  const Problem pr = random_problem(rng, n, 2, true);
  Eigen::VectorXd off(n);
  for (int i = 0; i < n; ++i) off[i] = 0.5 * rng.normal();
  const GlmFit fit = fit_glm(pr.y, DesignMatrix::with_intercept(pr.Z, names(2)), kPoisson, kLog, off);
  const Eigen::VectorXd ref = oracle::newton_glm(pr.y, with_ones(pr.Z), true, off);
  CHECK((fit.coefficients - ref).lpNorm<Eigen::Infinity>() < 1e-8);

  // Profile likelihood over the offset scale peaks at one when the data
  // were fitted with the offset freed: compare with the offset-only path.
  const GlmFit only = fit_glm_offset_only(pr.y, off, kPoisson, kLog);
  const Eigen::VectorXd ref0 = oracle::newton_glm(pr.y, Eigen::MatrixXd::Ones(n, 1), true, off);
  CHECK(only.coefficients[0] == doctest::Approx(ref0[0]).epsilon(1e-10));
}

TEST_CASE("predictions") {
  Rng rng(61);
  const Problem pr = random_problem(rng, 100, 2, true);
  const DesignMatrix X = DesignMatrix::with_intercept(pr.Z, names(2));
  const GlmFit fit = fit_glm(pr.y, X, kPoisson, kLog);
  CHECK((predict_glm(fit, X) - fit.fitted_mean).lpNorm<Eigen::Infinity>() == 0.0);

  const GlmFit two = fit_glm(vec({1, 2, 3}), DesignMatrix::intercept_only(3), kPoisson, kLog);
  CHECK(predict_glm(two, DesignMatrix::intercept_only(1))[0] == doctest::Approx(2.0).epsilon(1e-12));

  Eigen::MatrixXd other = pr.Z;
  CHECK_THROWS_AS(predict_glm(fit, DesignMatrix::with_intercept(other, {"a", "b"})), ValidationError);
}

TEST_CASE("rank deficiency names the collinear column") {
  Eigen::MatrixXd Z(6, 2);
  Z << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10, 6, 12;
  try {
    fit_glm(vec({1, 0, 2, 1, 3, 2}), DesignMatrix::with_intercept(Z, {"a", "b"}), kPoisson, kLog);
    FAIL("expected RankDeficiencyError");
  } catch (const RankDeficiencyError& e) {
    CHECK(!e.columns().empty());
  }
}

TEST_CASE("separation diverges") {
  Eigen::MatrixXd Z(6, 1);
  Z << -3, -2, -1, 1, 2, 3;
  CHECK_THROWS_AS(fit_glm(vec({0, 0, 0, 1, 1, 1}), DesignMatrix::with_intercept(Z, {"x"}),
                          kBernoulli, kLogit),
                  NumericalError);
}

TEST_CASE("design matrix validation") {
  Eigen::MatrixXd Z(3, 1);
  Z << 1, 1, 1;
  CHECK_THROWS_AS(DesignMatrix::with_intercept(Z, {"c"}), ValidationError);
  Z << 1, std::nan(""), 2;
  CHECK_THROWS_AS(DesignMatrix::with_intercept(Z, {"c"}), ValidationError);
  CHECK_THROWS_AS(DesignMatrix(Eigen::MatrixXd::Ones(3, 1), {"a", "b"}, true), ValidationError);
  CHECK_THROWS_AS(fit_glm(vec({-1, 2, 3}), DesignMatrix::intercept_only(3), kPoisson, kLog),
                  ValidationError);
  CHECK_THROWS_AS(fit_glm(vec({1, 2}), DesignMatrix::intercept_only(3), kPoisson, kLog),
                  ValidationError);
}

TEST_CASE("simulated data: coefficients within three Wald standard errors") {
  SimConfig cfg;
  cfg.n_population = 100000;
  const SimData data = generate(cfg);
  const GlmFit fit = fit_glm(data.train.y, DesignMatrix::with_intercept(data.train.X, names(5)),
                             kPoisson, kLog);
  const Eigen::VectorXd ref = oracle::newton_glm(data.train.y, with_ones(data.train.X), true);
  CHECK((fit.coefficients - ref).lpNorm<Eigen::Infinity>() < 1e-6);
  const Eigen::VectorXd d = fit.coefficients - cfg.beta;
  const double wald = d.dot(fit.covariance.ldlt().solve(d));
  CHECK(wald < 22.458);  // chi-square(6) 0.999 quantile
  const Eigen::VectorXd se = fit.standard_errors();
  for (Eigen::Index j = 0; j < d.size(); ++j) CHECK(std::abs(d[j]) < 3.0 * se[j]);
}
