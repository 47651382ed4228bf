#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gencal/error.hpp"
#include "gencal/expfam.hpp"
#include "gencal/rng.hpp"
#include "oracles.hpp"

using namespace gencal;

namespace {

const FamilyKind kFamilies[] = {FamilyKind::bernoulli, FamilyKind::poisson, FamilyKind::gaussian,
                                FamilyKind::gamma};

}  // namespace

TEST_CASE("link values at anchor points") {
  CHECK(link_apply(LinkSpec(LinkKind::logit), 0.5) == 0.0);
  CHECK(link_apply(LinkSpec(LinkKind::log), 1.0) == 0.0);
  CHECK(link_apply(LinkSpec(LinkKind::identity), 3.5) == 3.5);
  CHECK(link_apply(LinkSpec(LinkKind::inverse), 4.0) == 0.25);
}

TEST_CASE("logit of expit(1) is 1, expit found by bisection") {
  const double p = oracle::bisect_decreasing([](double m) { return 1.0 - std::log(m / (1 - m)); },
                                             1e-9, 1 - 1e-9);
  CHECK(p == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  CHECK(link_apply(LinkSpec(LinkKind::logit), p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(LinkSpec(LinkKind::logit).g_inverse(1.0) == doctest::Approx(p).epsilon(1e-14));
}

TEST_CASE("link domain errors carry the value") {
  try {
    link_apply(LinkSpec(LinkKind::logit), 1.0);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.value() == 1.0);
  }
  CHECK_THROWS_AS(link_apply(LinkSpec(LinkKind::log), 0.0), DomainError);
  CHECK_THROWS_AS(link_apply(LinkSpec(LinkKind::log), -2.0), DomainError);
  CHECK_THROWS_AS(link_apply(LinkSpec(LinkKind::inverse), 0.0), DomainError);
  CHECK_THROWS_AS(link_apply(LinkSpec(LinkKind::identity), std::nan("")), DomainError);
}

TEST_CASE("g_inverse inverts g and g_prime matches finite differences") {
  for (LinkKind k : {LinkKind::logit, LinkKind::log, LinkKind::identity, LinkKind::inverse}) {
    const LinkSpec link(k);
    for (double mu : {0.05, 0.3, 0.5, 0.8}) {
      CHECK(link.g_inverse(link.g(mu)) == doctest::Approx(mu).epsilon(1e-13));
      const double h = 1e-6;
      const double fd = (link.g(mu + h) - link.g(mu - h)) / (2 * h);
      CHECK(link.g_prime(mu) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("parsing tokens") {
  CHECK(parse_family("poisson").kind() == FamilyKind::poisson);
  CHECK(parse_family("binomial").kind() == FamilyKind::bernoulli);
  CHECK(parse_link("inverse").kind() == LinkKind::inverse);
  CHECK_THROWS_AS(parse_family("tweedie"), ValidationError);
  CHECK_THROWS_AS(parse_link("probit"), ValidationError);
  CHECK(FamilySpec(FamilyKind::gamma).canonical_link().kind() == LinkKind::inverse);
  CHECK(FamilySpec(FamilyKind::bernoulli).canonical_link().kind() == LinkKind::logit);
}

TEST_CASE("deviance anchor values") {
  const FamilySpec pois(FamilyKind::poisson);
  Eigen::VectorXd y(2), mu(2);
  y << 2, 0;
  mu << 2, 0;
  CHECK(deviance(pois, y, mu) == 0.0);

  Eigen::VectorXd y1(1), mu1(1);
  y1 << 1;
  mu1 << std::exp(1.0);
  CHECK(deviance(pois, y1, mu1) == doctest::Approx(2 * (std::exp(1.0) - 2)).epsilon(1e-14));
  CHECK(deviance(pois, y1, mu1) == doctest::Approx(1.43656).epsilon(1e-5));

  Eigen::VectorXd yg(2), mg(2), w(2);
  yg << 1, 2;
  mg << 0, 0;
  w << 1, 1;
  CHECK(deviance(FamilySpec(FamilyKind::gaussian), yg, mg, w) == 5.0);
}

TEST_CASE("deviance rejects a boundary mean that differs from y") {
  Eigen::VectorXd y(1), mu(1);
  y << 1;
  mu << 0;
  CHECK_THROWS_AS(deviance(FamilySpec(FamilyKind::poisson), y, mu), ValidationError);
}

TEST_CASE("property: IRLS working weight positive for canonical pairs") {
  for (FamilyKind fk : kFamilies) {
    const FamilySpec fam(fk);
    const LinkSpec link = fam.canonical_link();
    for (int i = 1; i < 100; ++i) {
      const double mu = i / 100.0;
      const double gp = link.g_prime(mu);
      CHECK(1.0 / (fam.variance(mu) * gp * gp) > 0.0);
    }
  }
}

TEST_CASE("property: deviance is permutation invariant") {
  Rng rng(21);
  for (FamilyKind fk : kFamilies) {
    const FamilySpec fam(fk);
    const int n = 37;
    Eigen::VectorXd y(n), mu(n);
    for (int i = 0; i < n; ++i) {
      mu[i] = 0.05 + 0.9 * rng.uniform();
      y[i] = fk == FamilyKind::bernoulli ? (rng.uniform() < mu[i] ? 1.0 : 0.0)
             : fk == FamilyKind::poisson ? static_cast<double>(rng.poisson(mu[i]))
                                         : 0.1 + rng.uniform();
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::rotate(perm.begin(), perm.begin() + 11, perm.end());
    Eigen::VectorXd yp(n), mp(n);
    for (int i = 0; i < n; ++i) {
      yp[i] = y[perm[i]];
      mp[i] = mu[perm[i]];
    }
    CHECK(deviance(fam, yp, mp) == doctest::Approx(deviance(fam, y, mu)).epsilon(1e-13));
  }
}

TEST_CASE("property: Bernoulli deviance is -2 log-likelihood") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(15));
    Eigen::VectorXd y(n), mu(n);
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      mu[i] = 0.01 + 0.98 * rng.uniform();
      y[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
      ll += y[i] * std::log(mu[i]) + (1 - y[i]) * std::log(1 - mu[i]);
    }
    CHECK(deviance(FamilySpec(FamilyKind::bernoulli), y, mu) ==
          doctest::Approx(-2 * ll).epsilon(1e-12));
  }
}
