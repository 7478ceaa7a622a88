#pragma once

#include <cstddef>

#include "tubeband/design.hpp"

namespace tubeband {

struct ArcLength {
  double quadrature = 0.0;  // adaptive quadrature of |psi_x|; the primary value
  double polyline = 0.0;    // sum of chord lengths on a uniform grid
  double discrepancy = 0.0;
  bool warning = false;     // discrepancy > 1e-3
};

ArcLength arc_length(const SphericalCurve& curve, int n_segments = 100000);

/// 0 for a closed curve, otherwise the number of domain intervals.
int euler_characteristic(const SphericalCurve& curve);

/// Curvature functional eta/g^2 - gamma^2/g^3 - 1 before clamping.
double kappa_unclamped(const SphericalCurve& curve, double x);

/// kappa_unclamped with values in [-1e-9, 0) clamped to 0.
double kappa(const SphericalCurve& curve, double x);

/// Local critical radius (radians) from kappa on a grid_n-point grid.
double local_critical_radius(const SphericalCurve& curve, int grid_n = 2001);

struct CriticalRadius {
  double theta = 0.0;          // arctan(sqrt(tan2))
  double tan2 = 0.0;           // min over the three branches below
  double interior_tan2 = 0.0;  // +inf when no admissible pair
  double boundary_tan2 = 0.0;  // +inf for closed curves
  double local_tan2 = 0.0;
  std::size_t pairs = 0;
  std::size_t skipped_pairs = 0;  // pairs with 1 - s^2 <= 1e-12
  bool skip_warning = false;      // more than half of the pairs skipped
};

/// Global critical radius by grid search over point pairs and alpha.
CriticalRadius global_critical_radius(const SphericalCurve& curve,
                                      int grid_n = 2001,
                                      int alpha_grid_n = 401);

struct GeometryOptions {
  int grid_n = 2001;
  int alpha_grid_n = 401;
  int arc_segments = 100000;
};

struct CurveGeometry {
  double gamma_length = 0.0;
  double gamma_length_polyline = 0.0;
  bool length_warning = false;
  int euler_char = 0;
  double kappa_min = 0.0;
  double kappa_max = 0.0;
  double theta_loc = 0.0;
  double theta_c = 0.0;
  CriticalRadius critical;
};

CurveGeometry analyze_curve(const SphericalCurve& curve,
                            const GeometryOptions& options = {});

}  // namespace tubeband
