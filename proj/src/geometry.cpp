#include "tubeband/geometry.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "tubeband/error.hpp"

namespace tubeband {

namespace {

constexpr double kStationary = 1e-10;
constexpr double kKappaClamp = 1e-9;
constexpr double kTinyDenominator = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Interval pieces between breakpoints, so every piece is smooth.
std::vector<Interval> smooth_pieces(const SphericalCurve& curve) {
  std::vector<Interval> pieces;
  for (const auto& iv : curve.domain()) {
    double lo = iv.lo;
    for (double b : curve.breakpoints()) {
      if (b > lo && b < iv.hi) {
        pieces.push_back({lo, b});
        lo = b;
      }
    }
    pieces.push_back({lo, iv.hi});
  }
  return pieces;
}

double polyline_length(const SphericalCurve& curve, int n_segments) {
  double total = 0.0;
  for (const auto& iv : curve.domain()) total += iv.length();
  double length = 0.0;
  for (const auto& iv : curve.domain()) {
    if (iv.length() == 0.0) continue;
    const int segs =
        curve.domain().size() == 1
            ? n_segments
            : std::max(1, static_cast<int>(std::lround(
                              n_segments * iv.length() / total)));
    Eigen::VectorXd prev = curve.psi(iv.lo);
    for (int t = 1; t <= segs; ++t) {
      const double x = t == segs ? iv.hi : iv.lo + iv.length() * t / segs;
      Eigen::VectorXd cur = curve.psi(x);
      length += (cur - prev).norm();
      prev = std::move(cur);
    }
  }
  return length;
}

double tan2_from_kappa(double k) {
  return k <= 2.0 ? 1.0 - k / 4.0 : 1.0 / k;
}

}  // namespace

ArcLength arc_length(const SphericalCurve& curve, int n_segments) {
  if (n_segments < 2) throw DomainError("arc_length needs n_segments >= 2");
  ArcLength out;
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto speed = [&curve](double x) { return curve.psi_x(x).norm(); };
  // 1e-12: tighter targets sit at the rounding floor of the truncated-power
  // sums and only drive the subdivision to its depth limit.
  for (const auto& piece : smooth_pieces(curve)) {
    if (piece.length() == 0.0) continue;
    out.quadrature += Quad::integrate(speed, piece.lo, piece.hi, 15, 1e-12);
  }
  out.polyline = polyline_length(curve, n_segments);
  out.discrepancy = std::abs(out.quadrature - out.polyline);
  out.warning = out.discrepancy > 1e-3;
  return out;
}

int euler_characteristic(const SphericalCurve& curve) {
  return curve.closed_curve() ? 0 : static_cast<int>(curve.domain().size());
}

double kappa_unclamped(const SphericalCurve& curve, double x) {
  const CurveJet j = curve.jet(x);
  const double g = j.d1.squaredNorm();
  if (std::sqrt(g) <= kStationary)
    throw StationaryPointError("|psi_x| vanishes at x = " + std::to_string(x));
  const double gamma = j.d2.dot(j.d1);
  const double eta = j.d2.squaredNorm();
  return eta / (g * g) - gamma * gamma / (g * g * g) - 1.0;
}

double kappa(const SphericalCurve& curve, double x) {
  const double k = kappa_unclamped(curve, x);
  return (k < 0.0 && k >= -kKappaClamp) ? 0.0 : k;
}

double local_critical_radius(const SphericalCurve& curve, int grid_n) {
  const std::vector<double> grid = domain_grid(curve.domain(), grid_n);
  if (grid.empty()) throw DomainError("empty domain");
  double best = kInf;
  for (double x : grid) best = std::min(best, tan2_from_kappa(kappa(curve, x)));
  return std::atan(std::sqrt(std::max(0.0, best)));
}

CriticalRadius global_critical_radius(const SphericalCurve& curve, int grid_n,
                                      int alpha_grid_n) {
  if (alpha_grid_n < 2) throw DomainError("alpha grid needs >= 2 points");
  CriticalRadius out;
  out.local_tan2 = std::pow(std::tan(local_critical_radius(curve, grid_n)), 2);

  const std::vector<double> grid = domain_grid(curve.domain(), grid_n);
  const auto n = static_cast<Eigen::Index>(grid.size());
  const int p = curve.dim();
  Eigen::MatrixXd psi(p, n), tangent(p, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const CurveJet j = curve.jet(grid[static_cast<std::size_t>(i)], 1);
    const double speed = j.d1.norm();
    if (speed <= kStationary)
      throw StationaryPointError(
          "|psi_x| vanishes at x = " +
          std::to_string(grid[static_cast<std::size_t>(i)]));
    psi.col(i) = j.value;
    tangent.col(i) = j.d1 / speed;
  }

  // Orientation: +1 at left endpoints (psi_x points into the curve), -1 at
  // right endpoints, 0 for interior points.
  std::vector<int> orientation(static_cast<std::size_t>(n), 0);
  if (!curve.closed_curve()) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (const auto& iv : curve.domain()) {
        if (grid[i] == iv.lo) orientation[i] = +1;
        else if (grid[i] == iv.hi) orientation[i] = -1;
      }
  }

  double span = 0.0;
  for (const auto& iv : curve.domain()) span += iv.length();
  const double window = 2.0 * span / grid_n;

  std::vector<double> alpha(static_cast<std::size_t>(alpha_grid_n));
  for (int a = 0; a < alpha_grid_n; ++a)
    alpha[static_cast<std::size_t>(a)] =
        a == alpha_grid_n - 1 ? 1.0 : -1.0 + 2.0 * a / (alpha_grid_n - 1);

  // The ratio is evaluated through the orthogonal split
  //   psi_j = s psi_i + t T_i + w,  |w|^2 = 1 - s^2 - t^2,
  // so 1 - s^2 - a^2 t^2 = (1 - a^2) t^2 + |w|^2 and 1 - a s = (1 - a) + a (1 - s)
  // are sums of nonnegative terms. The direct form cancels for close pairs and
  // would make the result depend on the choice of square-root factor.
  double interior = kInf, boundary = kInf;
  Eigen::VectorXd s_row(n), t_row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s_row.noalias() = psi.transpose() * psi.col(i);
    t_row.noalias() = psi.transpose() * tangent.col(i);
    const int eps = orientation[static_cast<std::size_t>(i)];
    double& best = eps == 0 ? interior : boundary;
    const double xi = grid[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(grid[static_cast<std::size_t>(j)] - xi) <= window) continue;
      ++out.pairs;
      const double s = s_row(j);
      const double one_minus_s = 0.5 * (psi.col(j) - psi.col(i)).squaredNorm();
      const double one_plus_s = 0.5 * (psi.col(j) + psi.col(i)).squaredNorm();
      if (one_minus_s * one_plus_s <= kTinyDenominator) {
        ++out.skipped_pairs;
        continue;
      }
      // Over alpha in [-1, 1] the numerator is >= (1 - |s|)^2 and the
      // denominator <= 1 - s^2, so the pair cannot beat this bound.
      const double as = std::abs(s);
      if ((1.0 - as) / (1.0 + as) >= std::min(best, out.local_tan2)) continue;
      const double t = t_row(j);
      const double w2 =
          (psi.col(j) - s * psi.col(i) - t * tangent.col(i)).squaredNorm();
      for (double a : alpha) {
        const double lead = (1.0 - a) + a * one_minus_s;
        const double num = lead * lead;
        // Interior points use a^2 t^2; endpoints only the inward part of a t.
        const bool active = eps == 0 || eps * a * t > 0.0;
        const double den = (active ? (1.0 - a) * (1.0 + a) : 1.0) * t * t + w2;
        if (den <= kTinyDenominator) continue;
        if (num < best * den) best = num / den;
      }
    }
  }
  out.interior_tan2 = interior;
  out.boundary_tan2 = boundary;
  out.tan2 = std::min({interior, boundary, out.local_tan2});
  out.theta = std::atan(std::sqrt(out.tan2));
  out.skip_warning = out.pairs > 0 && 2 * out.skipped_pairs > out.pairs;
  return out;
}

CurveGeometry analyze_curve(const SphericalCurve& curve,
                            const GeometryOptions& options) {
  CurveGeometry g;
  const ArcLength len = arc_length(curve, options.arc_segments);
  g.gamma_length = len.quadrature;
  g.gamma_length_polyline = len.polyline;
  g.length_warning = len.warning;
  g.euler_char = euler_characteristic(curve);
  g.kappa_min = kInf;
  g.kappa_max = -kInf;
  for (double x : domain_grid(curve.domain(), options.grid_n)) {
    const double k = kappa(curve, x);
    g.kappa_min = std::min(g.kappa_min, k);
    g.kappa_max = std::max(g.kappa_max, k);
  }
  g.theta_loc = local_critical_radius(curve, options.grid_n);
  g.critical =
      global_critical_radius(curve, options.grid_n, options.alpha_grid_n);
  g.theta_c = std::min(g.critical.theta, g.theta_loc);
  return g;
}

}  // namespace tubeband
