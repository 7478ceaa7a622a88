#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tubeband/basis.hpp"
#include "tubeband/design.hpp"
#include "tubeband/tube.hpp"

namespace tubeband {

/// A Monte Carlo proportion with its binomial standard error.
struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
};

/// Sorted maxima of Y(x) = sum_i (xi_i^T psi(x))^2 over a grid.
class MaxProcessSample {
 public:
  MaxProcessSample(std::vector<double> maxima, std::vector<double> grid,
                   std::vector<double> grid_mean, std::uint64_t seed);

  const std::vector<double>& maxima() const noexcept { return maxima_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  /// Mean of Y(x) over replications at each grid point.
  const std::vector<double>& grid_mean() const noexcept { return grid_mean_; }

  /// Fraction of replications with max Y >= level.
  McEstimate tail(double level) const;

 private:
  std::vector<double> maxima_;
  std::vector<double> grid_;
  std::vector<double> grid_mean_;
  std::uint64_t seed_;
};

/// Maxima of the chi-square process with k - 1 degrees of freedom on a
/// grid_n-point grid of the curve's domain.
MaxProcessSample simulate_max_process(const SphericalCurve& curve, int k,
                                      std::size_t reps, int grid_n,
                                      std::uint64_t seed, int partitions = 16);

enum class TrueModel { model1, model2, model3, in_basis };

/// How the n design points fill [0, 1].
enum class DesignSpacing {
  inclusive,  // x_j = (j - 1) / (n - 1), endpoints included
  literal     // x_j = (j - 1) / n, last point n-1/n
};

std::vector<double> design_points(int n, DesignSpacing spacing);

/// g_i(x) for group i = 1..3 (in_basis accepts any i).
double true_curve(TrueModel model, double amplitude, int group, double x);

struct SimulationConfig {
  TrueModel true_model = TrueModel::model1;
  double amplitude = 1.0;  // K
  int degree = 2;          // assumed basis: bspline of this degree on [0, 1]
  int m = 5;
  int k = 3;
  int n = 11;
  DesignSpacing spacing = DesignSpacing::inclusive;
  std::size_t replications = 100000;
  std::uint64_t seed = 20240101;
  int partitions = 16;
  int grid_n = 2001;
  double alpha = 0.05;

  BasisSpec assumed_basis() const;
  std::vector<double> points() const;
  /// Throws DomainError on invalid fields.
  void validate() const;
};

/// Tube critical value for the curve of a basis under unit-variance noise
/// at the given design points, over the basis's whole domain.
struct BandCalibration {
  TubeFormulaParams params;
  double b = 0.0;
  DesignInfo design;
};

BandCalibration calibrate_band(const BasisSpec& spec,
                               std::span<const double> points, int k,
                               double alpha);

/// Fraction of replications in which the band covers every g_i - mean g.
McEstimate coverage_simulation(const SimulationConfig& config);

/// Largest standardized bias of the centered projections over [0, 1].
double bias_delta(const SimulationConfig& config);

/// max{alpha - tail(b + delta), tail(|b - delta|) - alpha}, floored at 0.
/// The tail depends on its argument only through its square.
double coverage_bias_bound(const SimulationConfig& config, double delta);

/// b * average of sqrt(f^T Sigma f) over the basis domain.
double average_band_width(const BasisSpec& spec, std::span<const double> points,
                          double alpha, int k = 3);

}  // namespace tubeband
