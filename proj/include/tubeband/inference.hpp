#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tubeband/basis.hpp"
#include "tubeband/design.hpp"

namespace tubeband {

/// One group's data at the shared design points: per-point means and
/// (optionally) their standard errors.
struct GroupSample {
  std::string group_id;
  int replications = 1;                 // r_i
  std::vector<double> y;                // y_ij, one per design point
  std::optional<std::vector<double>> se;  // se(y_ij)
};

struct GroupFit {
  BasisSpec spec;
  Eigen::MatrixXd betas;       // k x p, row i is beta-hat_i
  Eigen::MatrixXd sigma;       // shared p x p
  std::vector<int> replications;
  std::vector<double> residual;  // per-group r_i sum_j (y_ij - yhat_ij)^2 / sigma_j^2

  int groups() const noexcept { return static_cast<int>(betas.rows()); }
  double residual_total() const;
};

struct ContrastBand {
  std::vector<double> contrast;
  std::vector<double> x;
  std::vector<double> center;
  std::vector<double> halfwidth;

  double lower(std::size_t i) const { return center[i] - halfwidth[i]; }
  double upper(std::size_t i) const { return center[i] + halfwidth[i]; }
};

/// Weighted least squares: beta-hat = Sigma sum_j f(x_j) y_ij / sigma_j^2.
Eigen::VectorXd fit_group(const BasisSpec& spec, const DesignInfo& info,
                          const GroupSample& sample);

/// Fits every group against one shared design.
GroupFit fit_groups(const BasisSpec& spec, const DesignInfo& info,
                    std::span<const GroupSample> samples);

/// sigma-hat(x_j)^2 = sum_i r_i^2 se_ij^2 / sum_i (r_i - 1).
std::vector<double> pooled_variance(std::span<const GroupSample> samples);

struct ModelScore {
  int degree = 0;
  int m = 0;
  double loss = 0.0;  // L_{d,m}
  double aic = 0.0;
  double bic = 0.0;
};

struct ModelSelection {
  std::vector<ModelScore> scores;     // in candidate order
  std::vector<std::size_t> aic_rank;  // indices into scores, best first
  std::vector<std::size_t> bic_rank;

  /// The common minimizer, or empty when the criteria disagree.
  std::optional<ModelScore> agreed() const;
};

/// Scores bspline candidates (d, m) on [a, b]. Candidates with m larger than
/// the number of design points are skipped.
ModelSelection model_selection(std::span<const std::pair<int, int>> candidates,
                               Interval span, std::span<const double> points,
                               std::span<const GroupSample> samples,
                               std::span<const double> variance);

/// k x (k-1) matrix with rho^T H = 0, H^T H = I, H H^T = I - rho rho^T / rho^T rho,
/// rho = (sqrt r_1, ..., sqrt r_k).
Eigen::MatrixXd h_matrix(std::span<const double> r);

/// Hyperbolic band for sum_i c_i g_i(x) with critical value b.
ContrastBand contrast_band(const GroupFit& fit, std::span<const double> c,
                           double b, std::span<const double> grid);

/// Pointwise homogeneity statistic chi^2(x) over the grid.
std::vector<double> chi2_scan(const GroupFit& fit, std::span<const double> grid);

}  // namespace tubeband
