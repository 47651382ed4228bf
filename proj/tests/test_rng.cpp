#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "gencal/datagen.hpp"
#include "gencal/error.hpp"
#include "gencal/rng.hpp"

using namespace gencal;

TEST_CASE("engine is the standard 64-bit Mersenne Twister") {
  Rng rng(5489);
  std::uint64_t last = 0;
  for (int i = 0; i < 10000; ++i) last = rng.next_u64();
  CHECK(last == 9981545732273789042ULL);
}

TEST_CASE("derived seeds differ across streams and indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 8; ++s) {
    for (std::uint64_t i = 0; i < 8; ++i) seen.insert(derive_seed(1, s, i));
  }
  CHECK(seen.size() == 64);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}

TEST_CASE("uniform draws lie in [0, 1) and below() stays in range") {
  Rng rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(rng.below(13) < 13);
  }
  CHECK_THROWS_AS(rng.below(0), ValidationError);
}

TEST_CASE("normal draws have unit moments") {
  Rng rng(11);
  const int n = 400000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 0.01);
}

TEST_CASE("poisson draws at lambda 4") {
  Rng rng(derive_seed(1, 2));
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(poisson_draw(4.0, rng));
    s += k;
    s2 += k * k;
  }
  const double mean = s / n;
  const double var = (s2 - n * mean * mean) / (n - 1);
  CHECK(mean >= 3.992);
  CHECK(mean <= 4.008);
  CHECK(var / mean >= 0.99);
  CHECK(var / mean <= 1.01);
}

TEST_CASE("poisson pmf matches at both sampler regimes") {
  for (double lambda : {3.0, 15.0}) {
    Rng rng(derive_seed(3, 4, static_cast<std::uint64_t>(lambda)));
    const int n = 500000;
    std::vector<int> counts(200, 0);
    for (int i = 0; i < n; ++i) {
      const auto k = poisson_draw(lambda, rng);
      if (k < counts.size()) ++counts[k];
    }
    const int mode = static_cast<int>(lambda);
    const double p = std::exp(mode * std::log(lambda) - lambda - std::lgamma(mode + 1.0));
    const double sd = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(counts[mode] / double(n) - p) < 5 * sd);
  }
}

TEST_CASE("poisson draw rejects invalid rates") {
  Rng rng(1);
  CHECK_THROWS_AS(poisson_draw(0.0, rng), ValidationError);
  CHECK_THROWS_AS(poisson_draw(-1.0, rng), ValidationError);
  CHECK_THROWS_AS(poisson_draw(std::nan(""), rng), ValidationError);
}
