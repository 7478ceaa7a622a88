#include "tubeband/tube.hpp"

#include <Eigen/Dense>
#include <array>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "tubeband/error.hpp"

namespace tubeband {

namespace {

constexpr int kQuadratureNodes = 64;

struct GaussLegendre {
  std::array<double, kQuadratureNodes> nodes{};
  std::array<double, kQuadratureNodes> weights{};
};

// Golub-Welsch on the Legendre Jacobi matrix; rule on [-1, 1].
const GaussLegendre& gauss_legendre() {
  static const GaussLegendre rule = [] {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(kQuadratureNodes, kQuadratureNodes);
    for (int i = 1; i < kQuadratureNodes; ++i) {
      const double b = i / std::sqrt(4.0 * i * i - 1.0);
      jacobi(i, i - 1) = b;
      jacobi(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    GaussLegendre r;
    for (int i = 0; i < kQuadratureNodes; ++i) {
      r.nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);
      const double v0 = eig.eigenvectors()(0, i);
      r.weights[static_cast<std::size_t>(i)] = 2.0 * v0 * v0;
    }
    return r;
  }();
  return rule;
}

// Upper tail of F(m, nu) at b^2/m, i.e. E[Gbar_m(b^2 tau^2)].
double f_upper_tail(int m, int nu, double b) {
  if (m == 0) return b == 0.0 ? 1.0 : 0.0;
  if (b == 0.0) return 1.0;
  boost::math::fisher_f_distribution<double> dist(m, nu);
  return boost::math::cdf(boost::math::complement(dist, b * b / m));
}

// Upper beta tail with the b = 0 limit (point mass at 1).
double beta_upper_tail(double a, double b, double x) {
  if (b == 0.0) return x < 1.0 ? 1.0 : 0.0;
  return boost::math::ibetac(a, b, x);
}

template <class Tail>
double combine(const TubeFormulaParams& params, Tail&& tail) {
  const int k = params.k;
  return params.lead_coeff() * params.gamma_length * (tail(k) - tail(k - 2)) +
         params.euler_char * tail(k - 1);
}

}  // namespace

double TubeFormulaParams::lead_coeff() const {
  return std::exp(std::lgamma(k / 2.0) - std::lgamma((k - 1) / 2.0)) /
         std::sqrt(std::numbers::pi);
}

void TubeFormulaParams::validate() const {
  if (k < 2) throw DomainError("tube formula needs k >= 2 groups");
  if (!(gamma_length >= 0.0) || !std::isfinite(gamma_length))
    throw DomainError("|Gamma| must be finite and nonnegative");
  if (euler_char < 0) throw DomainError("Euler characteristic must be >= 0");
  if (nu && *nu <= 0) throw DomainError("nu must be positive");
}

double chi2_upper_tail(int m, double t) {
  if (m < 0) throw DomainError("chi-square df must be >= 0");
  if (!(t >= 0.0)) throw DomainError("chi-square tail needs t >= 0");
  if (m == 0) return t == 0.0 ? 1.0 : 0.0;
  if (t == 0.0) return 1.0;
  if (std::isinf(t)) return 0.0;
  return boost::math::gamma_q(m / 2.0, t / 2.0);
}

double tube_tail_probability(const TubeFormulaParams& params, double b) {
  params.validate();
  if (!(b >= 0.0)) throw DomainError("tail probability needs b >= 0");
  const double t = b * b;
  return combine(params, [t](int m) { return chi2_upper_tail(m, t); });
}

double studentized_tube_tail(const TubeFormulaParams& params, double b,
                             StudentizedMethod method) {
  params.validate();
  if (!params.nu)
    throw ContractError("studentized tail needs nu (degrees of freedom)");
  if (!(b >= 0.0)) throw DomainError("tail probability needs b >= 0");
  const int nu = *params.nu;

  if (method == StudentizedMethod::f_tail)
    return combine(params, [nu, b](int m) { return f_upper_tail(m, nu, b); });

  // tau = sqrt(X / nu), X ~ chi2_nu; integrate over the bulk of tau.
  boost::math::chi_squared_distribution<double> chi(nu);
  const double lo = std::sqrt(boost::math::quantile(chi, 1e-16) / nu);
  const double hi =
      std::sqrt(boost::math::quantile(boost::math::complement(chi, 1e-16)) / nu);
  TubeFormulaParams known = params;
  known.nu.reset();
  const auto& rule = gauss_legendre();
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (int i = 0; i < kQuadratureNodes; ++i) {
    const double tau = mid + half * rule.nodes[static_cast<std::size_t>(i)];
    const double density =
        2.0 * tau * nu * boost::math::pdf(chi, nu * tau * tau);
    sum += rule.weights[static_cast<std::size_t>(i)] * density *
           tube_tail_probability(known, b * tau);
  }
  return half * sum;
}

double tail_probability(const TubeFormulaParams& params, double b) {
  return params.nu ? studentized_tube_tail(params, b)
                   : tube_tail_probability(params, b);
}

double critical_value(const TubeFormulaParams& params, double alpha) {
  if (!(alpha > 0.0 && alpha <= 0.5))
    throw DomainError("alpha must lie in (0, 0.5], got " +
                      std::to_string(alpha));
  params.validate();
  constexpr double kLo = 1.0, kHi = 50.0, kStep = 0.05;
  auto f = [&](double b) { return tail_probability(params, b) - alpha; };

  if (f(kLo) < 0.0 || f(kHi) >= 0.0)
    throw SolverError("no sign change of tail(b) - alpha on [1, 50]");

  // Walk down from the top so the bracket holds the largest crossing, which
  // is the root in the decreasing regime.
  double hi = kHi, lo = kHi;
  while (lo > kLo) {
    lo = std::max(kLo, hi - kStep);
    if (f(lo) >= 0.0) break;
    hi = lo;
  }

  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm >= 0.0)
      lo = mid;
    else
      hi = mid;
    if (std::abs(fm) < 1e-12 || hi - lo < 1e-15) break;
  }
  if (std::abs(f(mid)) >= 1e-10)
    throw SolverError("bisection did not reach |tail(b) - alpha| < 1e-10");
  return mid;
}

double tube_volume_fraction(const TubeFormulaParams& params, int p,
                            double theta) {
  params.validate();
  if (!(theta > 0.0 && theta <= std::numbers::pi / 2))
    throw DomainError("tube radius must lie in (0, pi/2]");
  const int k = params.k;
  const int n = p * (k - 1);
  if (n < k) throw DomainError("tube volume needs p (k - 1) >= k");
  const double x = std::cos(theta) * std::cos(theta);
  const double w = params.lead_coeff() * params.gamma_length;

  double vol = w * beta_upper_tail(k / 2.0, (n - k) / 2.0, x);
  if (k > 2) vol -= w * beta_upper_tail((k - 2) / 2.0, (n - k + 2) / 2.0, x);
  vol += params.euler_char * beta_upper_tail((k - 1) / 2.0, (n - k + 1) / 2.0, x);
  return vol;
}

}  // namespace tubeband
