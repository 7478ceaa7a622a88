#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "tubeband/basis.hpp"

namespace tubeband {

/// Closed interval [lo, hi] of the explanatory variable.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const noexcept { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

struct DesignInfo {
  std::vector<double> points;
  std::vector<double> variance;
  Eigen::MatrixXd sigma;       // inverse information matrix
  Eigen::MatrixXd sigma_sqrt;  // upper triangular A, A^T A = sigma
};

/// (sum_j f(x_j) f(x_j)^T / sigma(x_j)^2)^{-1}. Throws SingularDesignError
/// when the weighted design matrix is rank deficient.
Eigen::MatrixXd information_matrix(const BasisSpec& spec,
                                   std::span<const double> points,
                                   std::span<const double> variance);

/// Upper-triangular A with A^T A = sigma (transposed Cholesky factor).
Eigen::MatrixXd sqrt_factor(const Eigen::MatrixXd& sigma);

DesignInfo make_design(const BasisSpec& spec, std::vector<double> points,
                       std::vector<double> variance);

/// Design given directly by its covariance matrix (no design points).
DesignInfo design_from_sigma(const Eigen::MatrixXd& sigma);

/// Values and derivatives of a curve at one point.
struct CurveJet {
  Eigen::VectorXd value;
  Eigen::VectorXd d1;
  Eigen::VectorXd d2;
};

/// Unnormalized map x -> g(x) in R^p together with its derivatives.
/// Called with order in {0, 1, 2}.
using CurveMap = std::function<Eigen::VectorXd(double x, int order)>;

/// psi(x) = g(x) / |g(x)| on a finite union of disjoint closed intervals.
/// Immutable after construction.
class SphericalCurve {
 public:
  SphericalCurve(CurveMap map, int dim, std::vector<Interval> domain,
                 bool closed_curve, std::vector<double> breakpoints = {});

  int dim() const noexcept { return dim_; }
  const std::vector<Interval>& domain() const noexcept { return domain_; }
  bool closed_curve() const noexcept { return closed_; }

  /// Points where psi is only piecewise smooth (knots); integration and
  /// kappa sweeps split there.
  const std::vector<double>& breakpoints() const noexcept {
    return breakpoints_;
  }

  Eigen::VectorXd psi(double x) const;
  Eigen::VectorXd psi_x(double x) const;
  Eigen::VectorXd psi_xx(double x) const;

  /// psi with its first max_order (1 or 2) derivatives, by the quotient
  /// rule on g. d2 is left empty when max_order < 2.
  CurveJet jet(double x, int max_order = 2) const;

  /// |g(x)|, the normalizer.
  double raw_norm(double x) const;

  /// True when the endpoints of a single-interval domain satisfy
  /// |psi(a) - s psi(b)| < 1e-8 for s = +1 or -1.
  bool closable() const;

 private:
  CurveMap map_;
  int dim_;
  std::vector<Interval> domain_;
  bool closed_;
  std::vector<double> breakpoints_;
};

/// psi(x) = A f(x) / |A f(x)| with A = info.sigma_sqrt.
SphericalCurve spherical_curve(const BasisSpec& spec, const DesignInfo& info,
                               std::vector<Interval> domain,
                               bool closed_curve = false);

/// Same with an explicit square-root factor (any A with A^T A = sigma).
SphericalCurve spherical_curve(const BasisSpec& spec,
                               const Eigen::MatrixXd& factor,
                               std::vector<Interval> domain,
                               bool closed_curve = false);

/// Uniform grid over the domain, split across intervals by length. Every
/// interval contributes both of its endpoints.
std::vector<double> domain_grid(const std::vector<Interval>& domain, int n);

/// Rejects curves that are not one-to-one or contain an antipodal pair on a
/// grid_n-point grid (pairs closer than one grid step are not compared).
void check_injectivity(const SphericalCurve& curve, int grid_n = 2001);

}  // namespace tubeband
