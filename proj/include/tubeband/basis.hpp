#pragma once

#include <Eigen/Dense>
#include <vector>

namespace tubeband {

enum class BasisFamily { polynomial, trigonometric, bspline };

/// Regression basis vector f(x) of dimension p.
///
///  - polynomial:    (1, x, ..., x^{p-1})
///  - trigonometric: (1, sqrt2 cos x, sqrt2 sin x, ..., sqrt2 cos mx, sqrt2 sin mx), p = 2m+1
///  - bspline:       m equally spaced degree-d B-splines covering [a, b]
class BasisSpec {
 public:
  static BasisSpec polynomial(int p);
  static BasisSpec trigonometric(int harmonics);
  static BasisSpec bspline(int degree, int m, double a, double b);

  BasisFamily family() const noexcept { return family_; }
  int dim() const noexcept { return p_; }
  int degree() const noexcept { return degree_; }
  int harmonics() const noexcept { return harmonics_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  /// Knot locations strictly inside (a, b) for bspline; empty otherwise.
  /// Derivatives of order > degree-1 jump there.
  std::vector<double> breakpoints() const;

  /// Width of the support of each bspline component in x units.
  double support_width() const;

  bool operator==(const BasisSpec&) const = default;

 private:
  BasisSpec() = default;

  BasisFamily family_ = BasisFamily::polynomial;
  int p_ = 1;
  int degree_ = 0;
  int harmonics_ = 0;
  double lo_ = 0.0;
  double hi_ = 1.0;
};

inline constexpr int kMaxBsplineDegree = 20;

/// Cardinal B-spline B_d on (0, d+1) via the truncated power expansion.
double bspline_scalar(int d, double x);

/// order-th derivative of B_d. At knots the limit from the right is used.
double bspline_scalar_deriv(int d, double x, int order);

Eigen::VectorXd eval_basis(const BasisSpec& spec, double x);

/// Exact first (order = 1) or second (order = 2) derivative of f(x).
/// order = 0 is accepted and equals eval_basis.
Eigen::VectorXd eval_basis_deriv(const BasisSpec& spec, double x, int order);

}  // namespace tubeband
