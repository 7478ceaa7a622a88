#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "tubeband/error.hpp"
#include "tubeband/tube.hpp"

using namespace tubeband;

namespace {

TubeFormulaParams quad_params() {
  TubeFormulaParams p;
  p.k = 3;
  p.gamma_length = oracle::quad_gamma_length();
  p.euler_char = 1;
  return p;
}

TubeFormulaParams growth_params() {
  TubeFormulaParams p;
  p.k = 3;
  p.gamma_length = 6.989;
  p.euler_char = 1;
  return p;
}

// E[tail(b tau)] with nu tau^2 ~ chi2_nu, integrated in the variable u = nu tau^2
// by tanh-sinh on (0, inf).
double studentized_oracle(TubeFormulaParams params, double b) {
  const int nu = *params.nu;
  params.nu.reset();
  boost::math::chi_squared_distribution<double> chi(nu);
  boost::math::quadrature::tanh_sinh<double> integrator;
  const auto integrand = [&](double u) {
    return boost::math::pdf(chi, u) *
           tube_tail_probability(params, b * std::sqrt(u / nu));
  };
  return integrator.integrate(integrand, 0.0, std::numeric_limits<double>::infinity());
}

}  // namespace

TEST_CASE("chi2_upper_tail examples") {
  CHECK(chi2_upper_tail(2, 2.0 * std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(chi2_upper_tail(1, 1.0) - std::erfc(1.0 / std::sqrt(2.0))) < 1e-15);
  CHECK(chi2_upper_tail(1, 1.0) == doctest::Approx(0.317311).epsilon(1e-6));
  CHECK(chi2_upper_tail(0, 5.0) == 0.0);
  CHECK(chi2_upper_tail(0, 0.0) == 1.0);
  CHECK(chi2_upper_tail(4, 0.0) == 1.0);
  CHECK_THROWS_AS(chi2_upper_tail(2, -0.1), DomainError);
}

TEST_CASE("lead coefficient") {
  CHECK(quad_params().lead_coeff() == doctest::Approx(0.5).epsilon(1e-15));
  TubeFormulaParams two;
  two.k = 2;
  CHECK(two.lead_coeff() == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-15));
}

TEST_CASE("tube tail examples") {
  // The closed form gives 0.2738271 at b = 2; the quoted 0.273833 is within 1e-5.
  CHECK(std::abs(tube_tail_probability(quad_params(), 2.0) - 0.273833) < 1e-5);
  for (int chi : {0, 1, 2, 3}) {
    TubeFormulaParams p = growth_params();
    p.euler_char = chi;
    CHECK(tube_tail_probability(p, 0.0) == doctest::Approx(chi).epsilon(1e-15));
  }
  CHECK(std::abs(tube_tail_probability(growth_params(), 3.258) - 0.05) < 5e-4);
}

TEST_CASE("tube tail matches the k = 3 closed form") {
  for (double b : {0.5, 1.0, 2.0, 3.0, 4.0, 5.0})
    CHECK(std::abs(tube_tail_probability(quad_params(), b) -
                   oracle::quad_tail_closed_form(b)) < 1e-12);
}

TEST_CASE("tube tail is strictly decreasing where every density term is") {
  // The chi2_k density term increases below b^2 = k - 2, so for k >= 4 the
  // check starts there; for k <= 3 it covers all b >= 1.
  for (int k = 2; k <= 6; ++k)
    for (double gamma : {0.5, 2.0, 7.0, 30.0})
      for (int chi : {0, 1, 2}) {
        TubeFormulaParams p;
        p.k = k;
        p.gamma_length = gamma;
        p.euler_char = chi;
        const double start = std::max(1.0, std::sqrt(std::max(0, k - 2)));
        double prev = tube_tail_probability(p, start);
        for (int i = 1; i <= 300; ++i) {
          const double b = start + 0.03 * i;
          const double cur = tube_tail_probability(p, b);
          CHECK(cur < prev);
          prev = cur;
        }
      }
}

TEST_CASE("tail can rise just above b = 1 for many groups") {
  TubeFormulaParams p;
  p.k = 6;
  p.gamma_length = 30.0;
  p.euler_char = 1;
  CHECK(tube_tail_probability(p, 1.5) > tube_tail_probability(p, 1.0));
  // The solver still returns the crossing in the decreasing regime.
  const double b = critical_value(p, 0.05);
  CHECK(b > 2.0);
  CHECK(std::abs(tail_probability(p, b) - 0.05) < 1e-9);
}

TEST_CASE("studentized tail agrees with both quadratures") {
  for (int nu : {5, 20, 100})
    for (double b : {1.0, 2.0, 3.0, 4.0}) {
      TubeFormulaParams p = quad_params();
      p.nu = nu;
      const double closed = studentized_tube_tail(p, b, StudentizedMethod::f_tail);
      const double gauss = studentized_tube_tail(p, b, StudentizedMethod::quadrature);
      CHECK(std::abs(closed - gauss) < 1e-8);
      CHECK(std::abs(closed - studentized_oracle(p, b)) < 1e-8);
    }
}

TEST_CASE("studentized tail limits") {
  TubeFormulaParams p = growth_params();
  p.nu = 1000000;
  TubeFormulaParams known = growth_params();
  for (double b : {0.5, 1.0, 2.0, 3.0, 4.0})
    CHECK(std::abs(studentized_tube_tail(p, b) - tube_tail_probability(known, b)) < 1e-4);
  p.nu = 7;
  CHECK(studentized_tube_tail(p, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  // Heavier tails than the known-variance case.
  CHECK(studentized_tube_tail(p, 3.0) > tube_tail_probability(known, 3.0));
  CHECK_THROWS_AS(studentized_tube_tail(known, 1.0), ContractError);
}

TEST_CASE("critical value examples") {
  CHECK(std::abs(critical_value(growth_params(), 0.05) - 3.258) < 1e-3);
  CHECK(std::abs(critical_value(quad_params(), 0.0281632) - 3.0) < 1e-3);
  for (double alpha : {0.01, 0.05, 0.1}) {
    for (const auto& p : {quad_params(), growth_params()}) {
      const double b = critical_value(p, alpha);
      CHECK(std::abs(tube_tail_probability(p, b) - alpha) < 1e-9);
    }
  }
}

TEST_CASE("critical value in the studentized case") {
  TubeFormulaParams p = growth_params();
  p.nu = 30;
  const double b = critical_value(p, 0.05);
  CHECK(std::abs(studentized_tube_tail(p, b) - 0.05) < 1e-9);
  CHECK(b > critical_value(growth_params(), 0.05));
}

TEST_CASE("critical value errors") {
  CHECK_THROWS_AS(critical_value(quad_params(), 0.0), DomainError);
  CHECK_THROWS_AS(critical_value(quad_params(), 0.6), DomainError);
  // A vanishing tail has no crossing in [1, 50].
  TubeFormulaParams empty = quad_params();
  empty.gamma_length = 0.0;
  empty.euler_char = 0;
  CHECK_THROWS_AS(critical_value(empty, 0.05), SolverError);
  TubeFormulaParams bad = quad_params();
  bad.k = 1;
  CHECK_THROWS_AS(critical_value(bad, 0.05), DomainError);
}

TEST_CASE("tube volume fraction") {
  const TubeFormulaParams p = quad_params();
  CHECK(tube_volume_fraction(p, 3, 1e-6) < 1e-9);
  double prev = 0.0;
  for (int i = 1; i <= 50; ++i) {
    const double v = tube_volume_fraction(p, 3, 0.01 * i);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(tube_volume_fraction(p, 3, 0.0), DomainError);
  CHECK_THROWS_AS(tube_volume_fraction(p, 3, 2.0), DomainError);
}

TEST_CASE("tube volume fraction for two groups") {
  TubeFormulaParams p;
  p.k = 2;
  p.gamma_length = 1.3;
  p.euler_char = 1;
  const int dim = 4;  // n = p (k - 1) = 4
  for (double theta : {0.1, 0.3, 0.6}) {
    const double x = std::cos(theta) * std::cos(theta);
    const double expected = p.gamma_length / std::numbers::pi *
                                boost::math::ibetac(1.0, (dim - 2) / 2.0, x) +
                            boost::math::ibetac(0.5, (dim - 1) / 2.0, x);
    CHECK(tube_volume_fraction(p, dim, theta) == doctest::Approx(expected).epsilon(1e-13));
  }
}
