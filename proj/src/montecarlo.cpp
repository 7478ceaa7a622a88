#include "tubeband/montecarlo.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "tubeband/error.hpp"
#include "tubeband/geometry.hpp"
#include "tubeband/inference.hpp"
#include "tubeband/rng.hpp"

namespace tubeband {

namespace {

void check_partitions(std::size_t reps, int partitions) {
  if (reps < 1) throw DomainError("replications must be >= 1");
  if (partitions < 1) throw DomainError("partitions must be >= 1");
}

Eigen::MatrixXd standard_normals(std::mt19937_64& engine,
                                 NormalDistribution& normal, Eigen::Index rows,
                                 Eigen::Index cols) {
  Eigen::MatrixXd z(rows, cols);
  // Row-major fill so the draw order is independent of the storage order.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) z(i, j) = normal(engine);
  return z;
}

McEstimate proportion(std::size_t hits, std::size_t reps, std::uint64_t seed) {
  McEstimate out;
  out.reps = reps;
  out.seed = seed;
  out.estimate = static_cast<double>(hits) / static_cast<double>(reps);
  out.stderr_ =
      std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(reps));
  return out;
}

// Orthonormal contrasts for k equally replicated groups (k - 1 x k).
Eigen::MatrixXd centering_contrasts(int k) {
  const std::vector<double> ones(static_cast<std::size_t>(k), 1.0);
  return h_matrix(ones).transpose();
}

std::vector<double> unit_grid(int n) {
  return domain_grid({Interval{0.0, 1.0}}, n);
}

const BasisSpec& model1_basis() {
  static const BasisSpec spec = BasisSpec::bspline(2, 5, 0.0, 1.0);
  return spec;
}

// Standardized bias (k x G): column g holds d_i(x_g) / sqrt(f^T Sigma f).
struct BiasGrid {
  Eigen::MatrixXd normalized_basis;  // m x G, f / sqrt(f^T Sigma f)
  Eigen::MatrixXd bias;              // k x G
};

BiasGrid bias_grid(const SimulationConfig& config, const DesignInfo& design,
                   const BasisSpec& spec, const std::vector<double>& grid) {
  const int k = config.k;
  const auto n = static_cast<Eigen::Index>(design.points.size());
  const auto m = static_cast<Eigen::Index>(spec.dim());
  const auto g_count = static_cast<Eigen::Index>(grid.size());

  Eigen::MatrixXd x(n, m);
  Eigen::MatrixXd truth_at_design(k, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double xj = design.points[static_cast<std::size_t>(j)];
    x.row(j) = eval_basis(spec, xj).transpose();
    for (int i = 0; i < k; ++i)
      truth_at_design(i, j) =
          true_curve(config.true_model, config.amplitude, i + 1, xj);
  }
  // beta*_i = Sigma X^T g_i (unit variance).
  const Eigen::MatrixXd beta_star =
      truth_at_design * x * design.sigma.transpose();  // k x m

  BiasGrid out{Eigen::MatrixXd(m, g_count), Eigen::MatrixXd(k, g_count)};
  for (Eigen::Index g = 0; g < g_count; ++g) {
    const double xg = grid[static_cast<std::size_t>(g)];
    const Eigen::VectorXd f = eval_basis(spec, xg);
    const double scale = std::sqrt(f.dot(design.sigma * f));
    out.normalized_basis.col(g) = f / scale;
    for (int i = 0; i < k; ++i)
      out.bias(i, g) =
          (beta_star.row(i).dot(f) -
           true_curve(config.true_model, config.amplitude, i + 1, xg)) /
          scale;
  }
  return out;
}

}  // namespace

MaxProcessSample::MaxProcessSample(std::vector<double> maxima,
                                   std::vector<double> grid,
                                   std::vector<double> grid_mean,
                                   std::uint64_t seed)
    : maxima_(std::move(maxima)),
      grid_(std::move(grid)),
      grid_mean_(std::move(grid_mean)),
      seed_(seed) {}

McEstimate MaxProcessSample::tail(double level) const {
  const auto first = std::lower_bound(maxima_.begin(), maxima_.end(), level);
  const auto hits = static_cast<std::size_t>(maxima_.end() - first);
  return proportion(hits, maxima_.size(), seed_);
}

MaxProcessSample simulate_max_process(const SphericalCurve& curve, int k,
                                      std::size_t reps, int grid_n,
                                      std::uint64_t seed, int partitions) {
  if (k < 2) throw DomainError("chi-square process needs k >= 2");
  if (grid_n < 2) throw DomainError("grid_n must be >= 2");
  check_partitions(reps, partitions);

  const std::vector<double> grid = domain_grid(curve.domain(), grid_n);
  const auto p = static_cast<Eigen::Index>(curve.dim());
  const auto g_count = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd psi(p, g_count);
  for (Eigen::Index g = 0; g < g_count; ++g)
    psi.col(g) = curve.psi(grid[static_cast<std::size_t>(g)]);

  const auto chunks = static_cast<std::size_t>(partitions);
  std::vector<std::vector<double>> chunk_maxima(chunks);
  std::vector<Eigen::VectorXd> chunk_sums(chunks,
                                          Eigen::VectorXd::Zero(g_count));
  parallel_chunks(chunks, [&](std::size_t c) {
    auto engine = substream(seed, c);
    NormalDistribution normal;
    const std::size_t count = chunk_size(reps, chunks, c);
    auto& maxima = chunk_maxima[c];
    maxima.reserve(count);
    for (std::size_t rep = 0; rep < count; ++rep) {
      const Eigen::MatrixXd xi = standard_normals(engine, normal, k - 1, p);
      const Eigen::VectorXd y = (xi * psi).colwise().squaredNorm().transpose();
      chunk_sums[c] += y;
      maxima.push_back(y.maxCoeff());
    }
  });

  std::vector<double> maxima;
  maxima.reserve(reps);
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(g_count);
  for (std::size_t c = 0; c < chunks; ++c) {
    maxima.insert(maxima.end(), chunk_maxima[c].begin(), chunk_maxima[c].end());
    sums += chunk_sums[c];
  }
  std::sort(maxima.begin(), maxima.end());
  std::vector<double> mean(grid.size());
  for (Eigen::Index g = 0; g < g_count; ++g)
    mean[static_cast<std::size_t>(g)] = sums(g) / static_cast<double>(reps);
  return {std::move(maxima), grid, std::move(mean), seed};
}

std::vector<double> design_points(int n, DesignSpacing spacing) {
  if (n < 2) throw DomainError("need at least 2 design points");
  std::vector<double> x(static_cast<std::size_t>(n));
  const double denom = spacing == DesignSpacing::inclusive ? n - 1 : n;
  for (int j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] = j / denom;
  return x;
}

double true_curve(TrueModel model, double amplitude, int group, double x) {
  if (group < 1) throw DomainError("group index starts at 1");
  if (model == TrueModel::in_basis) return amplitude * (group - 1);
  if (group > 3) throw DomainError("models 1-3 define three groups");
  if (group == 1) return 0.0;

  switch (model) {
    case TrueModel::model1: {
      static const Eigen::VectorXd beta2 =
          (Eigen::VectorXd(5) << 0.0, 0.0, 0.5, 1.0, 1.0).finished();
      static const Eigen::VectorXd beta3 =
          (Eigen::VectorXd(5) << 0.0, 0.0, 4.0 / 3.0, 0.0, 0.0).finished();
      const Eigen::VectorXd f = eval_basis(model1_basis(), x);
      return amplitude * (group == 2 ? beta2 : beta3).dot(f);
    }
    case TrueModel::model2:
      return amplitude * std::sin(x * std::numbers::pi / (group == 2 ? 2.0 : 1.0));
    case TrueModel::model3:
      if (group == 2)
        return amplitude * (std::exp(-x / 2) - std::exp(-x)) /
               (std::exp(-0.5) - std::exp(-1.0));
      return amplitude * (std::cosh(x - 0.5) - 1.0) / (std::cosh(0.5) - 1.0);
    case TrueModel::in_basis:
      break;
  }
  return 0.0;
}

BasisSpec SimulationConfig::assumed_basis() const {
  return BasisSpec::bspline(degree, m, 0.0, 1.0);
}

std::vector<double> SimulationConfig::points() const {
  return design_points(n, spacing);
}

void SimulationConfig::validate() const {
  if (replications < 1) throw DomainError("replications must be >= 1");
  if (grid_n < 2) throw DomainError("grid_n must be >= 2");
  if (partitions < 1) throw DomainError("partitions must be >= 1");
  if (k < 2) throw DomainError("need k >= 2 groups");
  if (true_model != TrueModel::in_basis && k != 3)
    throw DomainError("models 1-3 define exactly three groups");
  if (m > n)
    throw DomainError("basis size m = " + std::to_string(m) +
                      " exceeds n = " + std::to_string(n) + " design points");
  if (!(alpha > 0.0 && alpha <= 0.5))
    throw DomainError("alpha must lie in (0, 0.5]");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw DomainError("amplitude K must be finite and >= 0");
}

BandCalibration calibrate_band(const BasisSpec& spec,
                               std::span<const double> points, int k,
                               double alpha) {
  std::vector<double> x(points.begin(), points.end());
  std::vector<double> variance(x.size(), 1.0);
  BandCalibration out{{}, 0.0, make_design(spec, std::move(x), std::move(variance))};
  const SphericalCurve curve =
      spherical_curve(spec, out.design, {Interval{spec.lo(), spec.hi()}});
  out.params.k = k;
  out.params.gamma_length = arc_length(curve).quadrature;
  out.params.euler_char = euler_characteristic(curve);
  out.b = critical_value(out.params, alpha);
  return out;
}

McEstimate coverage_simulation(const SimulationConfig& config) {
  config.validate();
  const BasisSpec spec = config.assumed_basis();
  const std::vector<double> points = config.points();
  const BandCalibration cal = calibrate_band(spec, points, config.k, config.alpha);
  const double threshold = cal.b * cal.b;

  const std::vector<double> grid = unit_grid(config.grid_n);
  const BiasGrid bg = bias_grid(config, cal.design, spec, grid);

  // beta-hat_i - beta*_i = Sigma X^T eps_i; projected onto the contrasts.
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd x(n, spec.dim());
  for (Eigen::Index j = 0; j < n; ++j)
    x.row(j) = eval_basis(spec, points[static_cast<std::size_t>(j)]).transpose();
  const Eigen::MatrixXd noise_to_curve =
      x * cal.design.sigma.transpose() * bg.normalized_basis;  // n x G
  const Eigen::MatrixXd contrasts = centering_contrasts(config.k);
  const Eigen::MatrixXd bias = contrasts * bg.bias;  // k-1 x G

  const auto chunks = static_cast<std::size_t>(config.partitions);
  std::vector<std::size_t> hits(chunks, 0);
  parallel_chunks(chunks, [&](std::size_t c) {
    auto engine = substream(config.seed, c);
    NormalDistribution normal;
    const std::size_t count = chunk_size(config.replications, chunks, c);
    for (std::size_t rep = 0; rep < count; ++rep) {
      const Eigen::MatrixXd eps = standard_normals(engine, normal, config.k, n);
      const Eigen::MatrixXd z = contrasts * eps * noise_to_curve + bias;
      if (z.colwise().squaredNorm().maxCoeff() <= threshold) ++hits[c];
    }
  });
  std::size_t total = 0;
  for (std::size_t h : hits) total += h;
  return proportion(total, config.replications, config.seed);
}

double bias_delta(const SimulationConfig& config) {
  config.validate();
  const BasisSpec spec = config.assumed_basis();
  std::vector<double> points = config.points();
  std::vector<double> variance(points.size(), 1.0);
  const DesignInfo design = make_design(spec, std::move(points), std::move(variance));
  const BiasGrid bg = bias_grid(config, design, spec, unit_grid(config.grid_n));
  const Eigen::MatrixXd centered =
      bg.bias.rowwise() - bg.bias.colwise().mean();
  return std::sqrt(centered.colwise().squaredNorm().maxCoeff());
}

double coverage_bias_bound(const SimulationConfig& config, double delta) {
  if (!(delta >= 0.0)) throw DomainError("delta must be >= 0");
  config.validate();
  const std::vector<double> points = config.points();
  const BandCalibration cal =
      calibrate_band(config.assumed_basis(), points, config.k, config.alpha);
  const double below = config.alpha - tube_tail_probability(cal.params, cal.b + delta);
  const double above =
      tube_tail_probability(cal.params, std::abs(cal.b - delta)) - config.alpha;
  return std::max({0.0, below, above});
}

double average_band_width(const BasisSpec& spec, std::span<const double> points,
                          double alpha, int k) {
  const BandCalibration cal = calibrate_band(spec, points, k, alpha);
  std::vector<double> cuts{spec.lo()};
  for (double knot : spec.breakpoints()) cuts.push_back(knot);
  cuts.push_back(spec.hi());

  auto integrand = [&](double x) {
    const Eigen::VectorXd f = eval_basis(spec, x);
    return std::sqrt(f.dot(cal.design.sigma * f));
  };
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    integral += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, cuts[i], cuts[i + 1], 15, 1e-13);
  return cal.b * integral / (spec.hi() - spec.lo());
}

}  // namespace tubeband
