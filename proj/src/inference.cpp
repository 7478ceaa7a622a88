#include "tubeband/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tubeband/error.hpp"

namespace tubeband {

namespace {

void check_sample(const GroupSample& s, std::size_t n) {
  if (s.y.size() != n)
    throw DomainError("group '" + s.group_id + "' has " +
                      std::to_string(s.y.size()) + " values for " +
                      std::to_string(n) + " design points");
  if (s.replications < 1)
    throw DomainError("group '" + s.group_id + "' needs r >= 1");
  if (s.se && s.se->size() != n)
    throw DomainError("group '" + s.group_id + "' has mismatched se column");
}

std::vector<std::size_t> rank_by(const std::vector<ModelScore>& scores,
                                 double ModelScore::*key) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a].*key < scores[b].*key;
  });
  return idx;
}

}  // namespace

double GroupFit::residual_total() const {
  return std::accumulate(residual.begin(), residual.end(), 0.0);
}

Eigen::VectorXd fit_group(const BasisSpec& spec, const DesignInfo& info,
                          const GroupSample& sample) {
  const std::size_t n = info.points.size();
  check_sample(sample, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(spec.dim());
  for (std::size_t j = 0; j < n; ++j)
    rhs += eval_basis(spec, info.points[j]) * (sample.y[j] / info.variance[j]);
  return info.sigma * rhs;
}

GroupFit fit_groups(const BasisSpec& spec, const DesignInfo& info,
                    std::span<const GroupSample> samples) {
  if (samples.empty()) throw DomainError("no groups to fit");
  if (info.sigma.rows() != spec.dim())
    throw DomainError("design does not match the basis dimension");
  GroupFit fit{spec, Eigen::MatrixXd(samples.size(), spec.dim()), info.sigma,
               {}, {}};
  const std::size_t n = info.points.size();
  std::vector<Eigen::VectorXd> f(n);
  for (std::size_t j = 0; j < n; ++j) f[j] = eval_basis(spec, info.points[j]);

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const Eigen::VectorXd beta = fit_group(spec, info, s);
    fit.betas.row(static_cast<Eigen::Index>(i)) = beta.transpose();
    fit.replications.push_back(s.replications);
    double loss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double r = s.y[j] - beta.dot(f[j]);
      loss += r * r / info.variance[j];
    }
    fit.residual.push_back(s.replications * loss);
  }
  return fit;
}

std::vector<double> pooled_variance(std::span<const GroupSample> samples) {
  if (samples.empty()) throw DomainError("pooled variance needs groups");
  const std::size_t n = samples.front().y.size();
  double df = 0.0;
  std::vector<double> out(n, 0.0);
  for (const auto& s : samples) {
    check_sample(s, n);
    if (!s.se)
      throw DomainError("group '" + s.group_id +
                        "' has no standard errors for pooling");
    df += s.replications - 1;
    const double r2 = static_cast<double>(s.replications) * s.replications;
    for (std::size_t j = 0; j < n; ++j) out[j] += r2 * (*s.se)[j] * (*s.se)[j];
  }
  if (df <= 0.0)
    throw DomainError("pooled variance needs some group with r > 1");
  for (double& v : out) v /= df;
  return out;
}

std::optional<ModelScore> ModelSelection::agreed() const {
  if (aic_rank.empty() || aic_rank.front() != bic_rank.front())
    return std::nullopt;
  return scores[aic_rank.front()];
}

ModelSelection model_selection(std::span<const std::pair<int, int>> candidates,
                               Interval span, std::span<const double> points,
                               std::span<const GroupSample> samples,
                               std::span<const double> variance) {
  ModelSelection out;
  const auto n = points.size();
  const auto k = static_cast<double>(samples.size());
  double log_sum = 0.0;
  for (const auto& s : samples)
    log_sum += std::log(static_cast<double>(s.replications) * n);

  for (const auto& [d, m] : candidates) {
    if (static_cast<std::size_t>(m) > n) continue;
    const BasisSpec spec = BasisSpec::bspline(d, m, span.lo, span.hi);
    const DesignInfo info =
        make_design(spec, {points.begin(), points.end()},
                    {variance.begin(), variance.end()});
    const GroupFit fit = fit_groups(spec, info, samples);
    ModelScore score;
    score.degree = d;
    score.m = m;
    score.loss = fit.residual_total();
    score.aic = score.loss + 2.0 * k * m;
    score.bic = score.loss + log_sum * m;
    out.scores.push_back(score);
  }
  out.aic_rank = rank_by(out.scores, &ModelScore::aic);
  out.bic_rank = rank_by(out.scores, &ModelScore::bic);
  return out;
}

Eigen::MatrixXd h_matrix(std::span<const double> r) {
  const auto k = static_cast<Eigen::Index>(r.size());
  if (k < 2) throw DomainError("H matrix needs k >= 2");
  for (double v : r)
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("replication counts must be positive");

  std::vector<double> cum(r.size());
  std::partial_sum(r.begin(), r.end(), cum.begin());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k, k - 1);
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    const auto next = static_cast<std::size_t>(j + 1);
    const double denom = std::sqrt(cum[next - 1] * cum[next]);
    for (Eigen::Index i = 0; i <= j; ++i)
      h(i, j) = std::sqrt(r[static_cast<std::size_t>(i)] * r[next]) / denom;
    h(j + 1, j) = -cum[next - 1] / denom;
  }
  return h;
}

ContrastBand contrast_band(const GroupFit& fit, std::span<const double> c,
                           double b, std::span<const double> grid) {
  if (static_cast<int>(c.size()) != fit.groups())
    throw ContractError("contrast has " + std::to_string(c.size()) +
                        " entries for " + std::to_string(fit.groups()) +
                        " groups");
  double sum = 0.0, scale = 0.0, var_factor = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    sum += c[i];
    scale = std::max(scale, std::abs(c[i]));
    var_factor += c[i] * c[i] / fit.replications[i];
  }
  if (scale == 0.0) throw ContractError("contrast must be nonzero");
  if (std::abs(sum) > 1e-10 * std::max(1.0, scale))
    throw ContractError("contrast entries must sum to zero");
  if (!(b >= 0.0)) throw ContractError("critical value must be >= 0");

  const Eigen::Map<const Eigen::VectorXd> cv(c.data(),
                                             static_cast<Eigen::Index>(c.size()));
  const Eigen::VectorXd combined = fit.betas.transpose() * cv;
  ContrastBand band;
  band.contrast.assign(c.begin(), c.end());
  for (double x : grid) {
    const Eigen::VectorXd f = eval_basis(fit.spec, x);
    band.x.push_back(x);
    band.center.push_back(combined.dot(f));
    band.halfwidth.push_back(b * std::sqrt(var_factor * f.dot(fit.sigma * f)));
  }
  return band;
}

std::vector<double> chi2_scan(const GroupFit& fit, std::span<const double> grid) {
  if (fit.groups() < 2) throw ContractError("chi2 scan needs k >= 2 groups");
  const double r_total = std::accumulate(fit.replications.begin(),
                                         fit.replications.end(), 0.0);
  std::vector<double> out;
  out.reserve(grid.size());
  for (double x : grid) {
    const Eigen::VectorXd f = eval_basis(fit.spec, x);
    const Eigen::VectorXd values = fit.betas * f;
    double weighted_mean = 0.0;
    for (int i = 0; i < fit.groups(); ++i)
      weighted_mean += fit.replications[static_cast<std::size_t>(i)] * values(i);
    weighted_mean /= r_total;
    double stat = 0.0;
    for (int i = 0; i < fit.groups(); ++i) {
      const double dev = values(i) - weighted_mean;
      stat += fit.replications[static_cast<std::size_t>(i)] * dev * dev;
    }
    out.push_back(stat / f.dot(fit.sigma * f));
  }
  return out;
}

}  // namespace tubeband
