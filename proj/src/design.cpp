#include "tubeband/design.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "tubeband/error.hpp"

namespace tubeband {

namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr double kClosableTol = 1e-8;
constexpr double kInjectivityTol = 1e-10;

void validate_domain(const std::vector<Interval>& domain) {
  if (domain.empty()) throw DomainError("domain needs at least one interval");
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const auto& iv = domain[i];
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi)
      throw DomainError("domain interval " + std::to_string(i) +
                        " must be finite with lo <= hi");
    if (i > 0 && !(domain[i - 1].hi < iv.lo))
      throw DomainError("domain intervals must be sorted and disjoint");
  }
}

}  // namespace

Eigen::MatrixXd information_matrix(const BasisSpec& spec,
                                   std::span<const double> points,
                                   std::span<const double> variance) {
  const int p = spec.dim();
  const auto n = static_cast<Eigen::Index>(points.size());
  if (variance.size() != points.size())
    throw DomainError("variance vector length " +
                      std::to_string(variance.size()) + " != point count " +
                      std::to_string(points.size()));
  Eigen::MatrixXd weighted(n, p);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double v = variance[static_cast<std::size_t>(j)];
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("variance must be positive at every design point");
    weighted.row(j) =
        eval_basis(spec, points[static_cast<std::size_t>(j)]).transpose() /
        std::sqrt(v);
  }
  if (n < p) throw SingularDesignError(static_cast<int>(n), p);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(weighted);
  qr.setThreshold(1e-12);
  if (qr.rank() < p) throw SingularDesignError(static_cast<int>(qr.rank()), p);

  // Sigma = (W^T W)^{-1} = P R^{-1} R^{-T} P^T.
  const Eigen::MatrixXd r =
      qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  Eigen::MatrixXd rinv = Eigen::MatrixXd::Identity(p, p);
  r.triangularView<Eigen::Upper>().solveInPlace(rinv);
  Eigen::MatrixXd sigma_perm = rinv * rinv.transpose();
  const auto& perm = qr.colsPermutation();
  Eigen::MatrixXd sigma = perm * sigma_perm * perm.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

Eigen::MatrixXd sqrt_factor(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
    throw FactorizationError("sqrt_factor needs a non-empty square matrix");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff()))
    throw FactorizationError("sqrt_factor needs a symmetric matrix");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw FactorizationError("matrix is not positive definite");
  return llt.matrixU();
}

DesignInfo make_design(const BasisSpec& spec, std::vector<double> points,
                       std::vector<double> variance) {
  for (std::size_t j = 1; j < points.size(); ++j)
    if (!(points[j - 1] < points[j]))
      throw DomainError("design points must be strictly increasing");
  DesignInfo info;
  info.sigma = information_matrix(spec, points, variance);
  info.sigma_sqrt = sqrt_factor(info.sigma);
  info.points = std::move(points);
  info.variance = std::move(variance);
  return info;
}

DesignInfo design_from_sigma(const Eigen::MatrixXd& sigma) {
  DesignInfo info;
  info.sigma = 0.5 * (sigma + sigma.transpose());
  info.sigma_sqrt = sqrt_factor(info.sigma);
  return info;
}

SphericalCurve::SphericalCurve(CurveMap map, int dim,
                               std::vector<Interval> domain, bool closed_curve,
                               std::vector<double> breakpoints)
    : map_(std::move(map)),
      dim_(dim),
      domain_(std::move(domain)),
      closed_(closed_curve),
      breakpoints_(std::move(breakpoints)) {
  validate_domain(domain_);
  std::sort(breakpoints_.begin(), breakpoints_.end());
  if (closed_) {
    if (domain_.size() != 1)
      throw DomainError("a closed curve needs a single domain interval");
    if (!closable())
      throw DomainError(
          "curve declared closed but psi(a) != +-psi(b) at the endpoints");
  }
}

double SphericalCurve::raw_norm(double x) const { return map_(x, 0).norm(); }

Eigen::VectorXd SphericalCurve::psi(double x) const {
  Eigen::VectorXd g = map_(x, 0);
  const double r = g.norm();
  if (r < kDegenerateNorm)
    throw DegenerateCurveError("|A f(x)| vanishes at x = " + std::to_string(x));
  return g / r;
}

CurveJet SphericalCurve::jet(double x, int max_order) const {
  const Eigen::VectorXd g = map_(x, 0);
  const Eigen::VectorXd g1 = map_(x, 1);
  const Eigen::VectorXd g2 =
      max_order >= 2 ? map_(x, 2) : Eigen::VectorXd::Zero(g.size());
  const double n0 = g.squaredNorm();
  if (std::sqrt(n0) < kDegenerateNorm)
    throw DegenerateCurveError("|A f(x)| vanishes at x = " + std::to_string(x));
  const double n1 = 2.0 * g.dot(g1);
  const double n2 = 2.0 * (g1.squaredNorm() + g.dot(g2));
  const double r = std::sqrt(n0);
  const double r3 = r * n0;
  const double r5 = r3 * n0;
  CurveJet out;
  out.value = g / r;
  out.d1 = g1 / r - 0.5 * n1 / r3 * g;
  if (max_order < 2) return out;
  out.d2 = g2 / r - n1 / r3 * g1 + (0.75 * n1 * n1 / r5 - 0.5 * n2 / r3) * g;
  return out;
}

Eigen::VectorXd SphericalCurve::psi_x(double x) const { return jet(x, 1).d1; }

Eigen::VectorXd SphericalCurve::psi_xx(double x) const { return jet(x).d2; }

bool SphericalCurve::closable() const {
  if (domain_.size() != 1) return false;
  const Eigen::VectorXd a = psi(domain_.front().lo);
  const Eigen::VectorXd b = psi(domain_.front().hi);
  return (a - b).norm() < kClosableTol || (a + b).norm() < kClosableTol;
}

SphericalCurve spherical_curve(const BasisSpec& spec, const DesignInfo& info,
                               std::vector<Interval> domain,
                               bool closed_curve) {
  return spherical_curve(spec, info.sigma_sqrt, std::move(domain),
                         closed_curve);
}

SphericalCurve spherical_curve(const BasisSpec& spec,
                               const Eigen::MatrixXd& factor,
                               std::vector<Interval> domain,
                               bool closed_curve) {
  if (factor.cols() != spec.dim())
    throw DomainError("factor has " + std::to_string(factor.cols()) +
                      " columns, basis has dimension " +
                      std::to_string(spec.dim()));
  validate_domain(domain);
  std::vector<double> breaks;
  for (double k : spec.breakpoints())
    for (const auto& iv : domain)
      if (k > iv.lo && k < iv.hi) breaks.push_back(k);

  CurveMap map = [spec, factor](double x, int order) -> Eigen::VectorXd {
    return factor * eval_basis_deriv(spec, x, order);
  };
  for (double x : domain_grid(domain, 2001))
    if (map(x, 0).norm() < kDegenerateNorm)
      throw DegenerateCurveError("|A f(x)| vanishes at x = " +
                                 std::to_string(x));
  return SphericalCurve(std::move(map), static_cast<int>(factor.rows()),
                        std::move(domain), closed_curve, std::move(breaks));
}

std::vector<double> domain_grid(const std::vector<Interval>& domain, int n) {
  if (n < 2) throw DomainError("grid needs at least 2 points");
  validate_domain(domain);
  double total = 0.0;
  for (const auto& iv : domain) total += iv.length();
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n) + 2 * domain.size());
  for (const auto& iv : domain) {
    if (iv.length() == 0.0) {
      grid.push_back(iv.lo);
      continue;
    }
    int ni = domain.size() == 1
                 ? n
                 : std::max(2, static_cast<int>(std::lround(n * iv.length() /
                                                            total)));
    for (int t = 0; t < ni; ++t)
      grid.push_back(t == ni - 1 ? iv.hi
                                 : iv.lo + iv.length() * t / (ni - 1));
  }
  return grid;
}

void check_injectivity(const SphericalCurve& curve, int grid_n) {
  const std::vector<double> grid = domain_grid(curve.domain(), grid_n);
  const auto n = grid.size();
  Eigen::MatrixXd pts(curve.dim(), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    pts.col(static_cast<Eigen::Index>(i)) = curve.psi(grid[i]);

  double span = 0.0;
  for (const auto& iv : curve.domain()) span += iv.length();
  const double step = span / std::max<std::size_t>(1, n - 1);
  const Eigen::MatrixXd gram = pts.transpose() * pts;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(grid[j] - grid[i]) <= step * (1.0 + 1e-9)) continue;
      if (curve.closed_curve() && i == 0 && j == n - 1) continue;
      const double s = gram(static_cast<Eigen::Index>(i),
                            static_cast<Eigen::Index>(j));
      // |u -+ v|^2 = 2 -+ 2s for unit vectors; only near-coincident pairs
      // need the exact distance.
      if (std::abs(s) < 1.0 - 1e-6) continue;
      const auto u = pts.col(static_cast<Eigen::Index>(i));
      const auto v = pts.col(static_cast<Eigen::Index>(j));
      const double dist = s > 0 ? (u - v).norm() : (u + v).norm();
      if (dist < kInjectivityTol)
        throw AssumptionError(
            std::string(s > 0 ? "psi is not one-to-one"
                              : "psi has an antipodal pair") +
            " near x = " + std::to_string(grid[i]) + " and x = " +
            std::to_string(grid[j]));
    }
  }
}

}  // namespace tubeband
