#include <doctest.h>

#include "bridgesmc/rng.hpp"
#include "bridgesmc/special.hpp"
#include "support/stats.hpp"

using namespace bridgesmc;

TEST_CASE("digamma matches the recurrence and known values") {
  // psi(1) = -gamma, psi(0.5) = -gamma - 2 log 2
  const double euler_gamma = 0.57721566490153286;
  CHECK(digamma(1.0) == doctest::Approx(-euler_gamma).epsilon(1e-12));
  CHECK(digamma(0.5) == doctest::Approx(-euler_gamma - 2.0 * std::log(2.0)).epsilon(1e-12));
  for (double x : {0.3, 1.7, 4.2, 11.0}) {
    CHECK(digamma(x + 1.0) == doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-12));
  }
  CHECK_THROWS_AS(digamma(-1.0), std::domain_error);
}

TEST_CASE("regularized incomplete gamma against closed forms") {
  // P(1, x) = 1 - exp(-x)
  for (double x : {0.1, 1.0, 3.5, 10.0}) {
    CHECK(reg_lower_gamma(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-12));
  }
  // P(1/2, x) = erf(sqrt(x))
  for (double x : {0.2, 1.3, 4.0}) {
    CHECK(reg_lower_gamma(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
  }
  CHECK(reg_lower_gamma(2.5, 0.0) == 0.0);
}

TEST_CASE("gamma quantile inverts the cdf to 1e-10") {
  for (double shape : {0.4, 1.0, 2.3, 17.0}) {
    for (double rate : {0.5, 1.0, 8.0}) {
      for (double u : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.999}) {
        const double x = gamma_quantile(shape, rate, u);
        CHECK(reg_lower_gamma(shape, rate * x) == doctest::Approx(u).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-8, 1e-3, 0.25, 0.5, 0.77, 1.0 - 1e-6}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("two-sample KS accepts equal laws and rejects distinct ones") {
  Rng rng(11);
  std::vector<double> a(4000), b(4000), c(4000);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  for (auto& v : c) v = rng.normal() + 1.0;
  CHECK(teststats::ks2_pvalue(a, b) > 0.001);
  CHECK(teststats::ks2_pvalue(a, c) < 1e-6);
}
