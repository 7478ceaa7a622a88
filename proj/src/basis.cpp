#include "tubeband/basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "tubeband/error.hpp"

namespace tubeband {

namespace {

// Exact binomial coefficients for n <= kMaxBsplineDegree + 1.
std::int64_t binomial(int n, int r) {
  std::int64_t c = 1;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

void check_degree(int d) {
  if (d < 0 || d > kMaxBsplineDegree)
    throw DomainError("bspline degree must lie in [0, " +
                      std::to_string(kMaxBsplineDegree) + "], got " +
                      std::to_string(d));
}

// Argument of the i-th (1-based) component of f_{d,m,a,b}.
double bspline_argument(const BasisSpec& spec, double x, int i) {
  const int d = spec.degree();
  const int m = spec.dim();
  return (x - spec.lo()) / (spec.hi() - spec.lo()) * (m - d) - (i - d - 1);
}

double clamp_to_domain(const BasisSpec& spec, double x) {
  if (!std::isfinite(x)) throw DomainError("basis evaluated at non-finite x");
  if (spec.family() != BasisFamily::bspline) return x;
  const double tol = 1e-12 * (spec.hi() - spec.lo());
  if (x < spec.lo() - tol || x > spec.hi() + tol)
    throw DomainError("x = " + std::to_string(x) + " outside bspline domain [" +
                      std::to_string(spec.lo()) + ", " +
                      std::to_string(spec.hi()) + "]");
  return std::clamp(x, spec.lo(), spec.hi());
}

}  // namespace

BasisSpec BasisSpec::polynomial(int p) {
  if (p < 1) throw DomainError("polynomial basis needs p >= 1");
  BasisSpec s;
  s.family_ = BasisFamily::polynomial;
  s.p_ = p;
  return s;
}

BasisSpec BasisSpec::trigonometric(int harmonics) {
  if (harmonics < 1) throw DomainError("trigonometric basis needs m >= 1");
  BasisSpec s;
  s.family_ = BasisFamily::trigonometric;
  s.harmonics_ = harmonics;
  s.p_ = 2 * harmonics + 1;
  return s;
}

BasisSpec BasisSpec::bspline(int degree, int m, double a, double b) {
  check_degree(degree);
  if (m < degree + 1)
    throw DomainError("bspline basis needs m >= degree + 1 (m = " +
                      std::to_string(m) + ", d = " + std::to_string(degree) +
                      ")");
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw DomainError("bspline domain needs finite a < b");
  BasisSpec s;
  s.family_ = BasisFamily::bspline;
  s.p_ = m;
  s.degree_ = degree;
  s.lo_ = a;
  s.hi_ = b;
  return s;
}

std::vector<double> BasisSpec::breakpoints() const {
  std::vector<double> knots;
  if (family_ != BasisFamily::bspline) return knots;
  const int segments = p_ - degree_;
  for (int j = 1; j < segments; ++j)
    knots.push_back(lo_ + (hi_ - lo_) * j / segments);
  return knots;
}

double BasisSpec::support_width() const {
  if (family_ != BasisFamily::bspline) return hi_ - lo_;
  return (degree_ + 1) * (hi_ - lo_) / (p_ - degree_);
}

namespace {

// Shared evaluator. For exponent-0 truncated powers, `left_limit` selects
// u_+^0 = [u >= 0] (limit from the left in x) instead of [u > 0].
double bspline_eval(int d, double x, int order, bool left_limit) {
  check_degree(d);
  if (order < 0) throw DomainError("negative derivative order");
  if (order > d)
    throw UnsupportedError("derivative of order " + std::to_string(order) +
                           " of a degree-" + std::to_string(d) +
                           " B-spline is not a function");
  if (x < 0.0 || x > d + 1.0) return 0.0;
  if (x == 0.0 && left_limit) return 0.0;
  if (x == d + 1.0 && !left_limit) return 0.0;
  const int power = d - order;
  double sum = 0.0;
  for (int r = 0; r <= d + 1; ++r) {
    const double u = r - x;
    double term;
    if (power == 0)
      term = left_limit ? (u >= 0.0 ? 1.0 : 0.0) : (u > 0.0 ? 1.0 : 0.0);
    else
      term = u > 0.0 ? std::pow(u, power) : 0.0;
    if (term == 0.0) continue;
    const double sign_r = ((d + 1 - r) % 2 == 0) ? 1.0 : -1.0;
    sum += sign_r * static_cast<double>(binomial(d + 1, r)) * term;
  }
  const double sign_k = (order % 2 == 0) ? 1.0 : -1.0;
  const double value = sign_k * sum / factorial(power);
  // B_d >= 0; the alternating sum can cancel to about -1e-13.
  return order == 0 ? std::max(0.0, value) : value;
}

}  // namespace

double bspline_scalar(int d, double x) {
  // (r - x)_+^0 at x = r is 1, so B_0 is the indicator of (0, 1].
  return bspline_eval(d, x, 0, true);
}

double bspline_scalar_deriv(int d, double x, int order) {
  return bspline_eval(d, x, order, order == 0);
}

Eigen::VectorXd eval_basis(const BasisSpec& spec, double x) {
  return eval_basis_deriv(spec, x, 0);
}

Eigen::VectorXd eval_basis_deriv(const BasisSpec& spec, double x, int order) {
  if (order < 0 || order > 2)
    throw DomainError("basis derivative order must be 0, 1 or 2");
  x = clamp_to_domain(spec, x);
  const int p = spec.dim();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p);

  switch (spec.family()) {
    case BasisFamily::polynomial:
      for (int j = order; j < p; ++j) {
        double c = 1.0;
        for (int q = 0; q < order; ++q) c *= (j - q);
        v(j) = c * std::pow(x, j - order);
      }
      break;

    case BasisFamily::trigonometric: {
      v(0) = (order == 0) ? 1.0 : 0.0;
      const double s2 = std::sqrt(2.0);
      for (int j = 1; j <= spec.harmonics(); ++j) {
        const double c = std::cos(j * x), s = std::sin(j * x);
        const double jj = static_cast<double>(j);
        if (order == 0) {
          v(2 * j - 1) = s2 * c;
          v(2 * j) = s2 * s;
        } else if (order == 1) {
          v(2 * j - 1) = -s2 * jj * s;
          v(2 * j) = s2 * jj * c;
        } else {
          v(2 * j - 1) = -s2 * jj * jj * c;
          v(2 * j) = -s2 * jj * jj * s;
        }
      }
      break;
    }

    case BasisFamily::bspline: {
      if (order > spec.degree())
        throw UnsupportedError("order-" + std::to_string(order) +
                               " derivative needs bspline degree >= " +
                               std::to_string(order));
      const double scale =
          std::pow((spec.dim() - spec.degree()) / (spec.hi() - spec.lo()),
                   order);
      // Right-hand limits at interior knots; at x = b only the left-hand
      // limit lies inside the domain.
      const bool left = order == 0 || x == spec.hi();
      for (int i = 1; i <= p; ++i) {
        const double u = bspline_argument(spec, x, i);
        v(i - 1) = scale * bspline_eval(spec.degree(), u, order, left);
      }
      break;
    }
  }
  return v;
}

}  // namespace tubeband
