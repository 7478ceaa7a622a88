#include "tubeband/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>

#include "tubeband/csv_io.hpp"
#include "tubeband/error.hpp"
#include "tubeband/inference.hpp"
#include "tubeband/montecarlo.hpp"
#include "tubeband/tube.hpp"

namespace tubeband {

namespace {

using nlohmann::json;

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
  bool boolean = false;
};

const std::vector<FlagSpec> kBasisFlags = {
    {"--basis", "basis.family", "polynomial | trigonometric | bspline"},
    {"--dim", "basis.p", "polynomial basis dimension p"},
    {"--harmonics", "basis.harmonics", "trigonometric harmonics (p = 2h + 1)"},
    {"--degree", "basis.degree", "bspline degree d"},
    {"--m", "basis.m", "bspline basis size m"},
    {"--basis-a", "basis.a", "bspline lower end a"},
    {"--basis-b", "basis.b", "bspline upper end b"},
};

const std::vector<FlagSpec> kDesignFlags = {
    {"--sigma", "design.sigma", "covariance matrix, rows separated by ';'"},
    {"--points", "design.points", "design points x_j"},
    {"--variance", "design.variance", "sigma(x_j)^2, one value or one per point"},
    {"--data", "design.data", "data CSV (group,x,y[,se][,r])"},
    {"--domain", "domain.intervals", "domain as lo:hi[,lo:hi...]"},
    {"--closed", "domain.closed", "treat the curve as closed", true},
};

const std::vector<FlagSpec> kGridFlags = {
    {"--grid", "grids.x", "evaluation grid size"},
    {"--alpha-grid", "grids.alpha", "alpha grid size of the critical radius search"},
    {"--arc-segments", "grids.arc_segments", "polyline segments for |Gamma|"},
};

const std::vector<FlagSpec> kTubeFlags = {
    {"--k", "inference.k", "number of groups"},
    {"--gamma-length", "inference.gamma_length", "|Gamma| (skips the geometry)"},
    {"--euler", "inference.euler", "Euler characteristic of Gamma"},
    {"--nu", "inference.nu", "degrees of freedom of the variance estimate"},
};

const std::vector<FlagSpec> kInferenceFlags = {
    {"--variance-mode", "inference.variance_mode", "known | pooled"},
    {"--nu", "inference.nu", "degrees of freedom of the variance estimate"},
    {"--b", "inference.b", "critical value override"},
};

const std::vector<FlagSpec> kSimulationFlags = {
    {"--model", "simulation.model", "model1 | model2 | model3 | in-basis"},
    {"--amplitude", "simulation.K", "amplitude K of the true curves"},
    {"--n", "simulation.n", "number of design points"},
    {"--spacing", "simulation.spacing", "inclusive | literal design spacing"},
};

const std::vector<FlagSpec> kReplicationFlags = {
    {"--reps", "simulation.reps", "Monte Carlo replications"},
    {"--seed", "simulation.seed", "64-bit seed"},
    {"--partitions", "simulation.partitions", "RNG partitions (fixes the streams)"},
};

const FlagSpec kAlphaFlag{"--alpha", "inference.alpha", "1 - confidence level"};
const FlagSpec kOutputFlag{"--output", "output.dir", "directory for CSV artifacts"};

// ---------------------------------------------------------------- helpers

std::vector<Interval> parse_intervals(const std::string& text) {
  std::vector<Interval> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string part =
        text.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start);
    if (part.find_first_not_of(" \t") != std::string::npos) {
      const auto colon = part.find(':');
      const auto lo = colon == std::string::npos
                          ? std::nullopt
                          : parse_real(part.substr(0, colon));
      const auto hi = colon == std::string::npos
                          ? std::nullopt
                          : parse_real(part.substr(colon + 1));
      if (!lo || !hi)
        throw ConfigError("domain interval must look like lo:hi, got '" + part +
                          "'");
      out.push_back({*lo, *hi});
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("domain needs at least one interval");
  return out;
}

std::vector<double> variance_for(const Settings& s, std::size_t n) {
  if (!s.has("design.variance")) return std::vector<double>(n, 1.0);
  std::vector<double> v = s.reals("design.variance");
  if (v.size() == 1) return std::vector<double>(n, v.front());
  if (v.size() != n)
    throw ConfigError("design.variance has " + std::to_string(v.size()) +
                      " values for " + std::to_string(n) + " points");
  return v;
}

TrueModel parse_model(const std::string& name) {
  if (name == "model1") return TrueModel::model1;
  if (name == "model2") return TrueModel::model2;
  if (name == "model3") return TrueModel::model3;
  if (name == "in-basis" || name == "in_basis") return TrueModel::in_basis;
  throw ConfigError("unknown simulation.model '" + name + "'");
}

std::string model_name(TrueModel model) {
  switch (model) {
    case TrueModel::model1: return "model1";
    case TrueModel::model2: return "model2";
    case TrueModel::model3: return "model3";
    case TrueModel::in_basis: return "in-basis";
  }
  return "?";
}

DesignSpacing parse_spacing(const std::string& name) {
  if (name == "inclusive") return DesignSpacing::inclusive;
  if (name == "literal") return DesignSpacing::literal;
  throw ConfigError("unknown simulation.spacing '" + name + "'");
}

std::vector<int> integer_list(const Settings& s, const std::string& key,
                              std::vector<int> fallback) {
  if (!s.has(key)) return fallback;
  std::vector<int> out;
  for (double v : s.reals(key)) {
    if (v != std::floor(v)) throw ConfigError(key + " must list integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

json to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

// Curve, design and (optional) data assembled from one configuration.
struct Problem {
  BasisSpec spec;
  DesignInfo design;
  std::vector<Interval> domain;
  std::optional<DataSet> data;
};

Problem build_problem(const RunConfig& run, bool need_data) {
  const Settings& s = run.settings;
  Problem pb{run.basis(), {}, {}, std::nullopt};
  pb.domain = run.domain(pb.spec);
  if (s.has("design.data"))
    pb.data = read_data_csv_file(s.text("design.data", ""));
  else if (need_data)
    throw ConfigError("this command needs design.data (--data)");

  if (s.has("design.sigma")) {
    const Eigen::MatrixXd sigma = s.matrix("design.sigma");
    if (sigma.rows() != pb.spec.dim() || sigma.cols() != pb.spec.dim())
      throw ConfigError("design.sigma must be " + std::to_string(pb.spec.dim()) +
                        " x " + std::to_string(pb.spec.dim()));
    pb.design = design_from_sigma(sigma);
    return pb;
  }
  std::vector<double> points;
  std::vector<double> variance;
  if (pb.data) {
    points = pb.data->points;
    if (run.variance_mode == VarianceMode::pooled)
      variance = pooled_variance(pb.data->samples);
    else
      variance = variance_for(s, points.size());
  } else if (s.has("design.points")) {
    points = s.reals("design.points");
    variance = variance_for(s, points.size());
  } else {
    throw ConfigError("need design.sigma, design.points or design.data");
  }
  pb.design = make_design(pb.spec, std::move(points), std::move(variance));
  return pb;
}

SphericalCurve problem_curve(const Problem& pb, const RunConfig& run) {
  return spherical_curve(pb.spec, pb.design, pb.domain, run.closed);
}

std::optional<int> degrees_of_freedom(const RunConfig& run, const Problem& pb) {
  if (run.nu) return run.nu;
  if (run.variance_mode != VarianceMode::pooled || !pb.data) return std::nullopt;
  int df = 0;
  for (const auto& g : pb.data->samples) df += g.replications - 1;
  return df * static_cast<int>(pb.data->points.size());
}

// Writes a CSV artifact when an output directory is configured.
class Artifacts {
 public:
  explicit Artifacts(const std::optional<std::string>& dir) : dir_(dir) {
    if (dir_) std::filesystem::create_directories(*dir_);
  }

  void write(const std::string& name,
             const std::function<void(std::ostream&)>& body) {
    if (!dir_) return;
    const auto path = std::filesystem::path(*dir_) / name;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    body(out);
    written_.push_back(path.string());
  }

  json list() const { return json(written_); }

 private:
  std::optional<std::string> dir_;
  std::vector<std::string> written_;
};

json summary(const RunConfig& run) {
  json j;
  j["command"] = run.command;
  j["config_hash"] = run.hash;
  j["seed"] = run.seed;
  return j;
}

// Tube parameters from --gamma-length/--euler when given, else from the
// configured curve's geometry.
TubeFormulaParams tube_params(const RunConfig& run, json& j) {
  const Settings& s = run.settings;
  TubeFormulaParams params;
  params.k = run.k;
  params.nu = run.nu;
  if (s.has("inference.gamma_length")) {
    params.gamma_length = s.real("inference.gamma_length");
    params.euler_char = s.integer("inference.euler", 1);
    return params;
  }
  const Problem pb = build_problem(run, false);
  const SphericalCurve curve = problem_curve(pb, run);
  const ArcLength len = arc_length(curve, run.grids.arc_segments);
  params.gamma_length = len.quadrature;
  params.euler_char = s.integer("inference.euler", euler_characteristic(curve));
  if (!params.nu) params.nu = degrees_of_freedom(run, pb);
  j["gamma_length"] = params.gamma_length;
  j["length_warning"] = len.warning;
  return params;
}

void put_params(json& j, const TubeFormulaParams& params) {
  j["k"] = params.k;
  j["gamma_length"] = params.gamma_length;
  j["euler_char"] = params.euler_char;
  j["nu"] = params.nu ? json(*params.nu) : json(nullptr);
}

// ---------------------------------------------------------------- commands

json run_tailprob(const RunConfig& run) {
  json j = summary(run);
  const TubeFormulaParams params = tube_params(run, j);
  const double b = run.settings.real("inference.b");
  put_params(j, params);
  j["b"] = b;
  j["tail"] = tail_probability(params, b);
  return j;
}

json run_critical(const RunConfig& run) {
  json j = summary(run);
  const TubeFormulaParams params = tube_params(run, j);
  const double b = critical_value(params, run.alpha);
  put_params(j, params);
  j["alpha"] = run.alpha;
  j["b"] = b;
  j["tail_at_b"] = tail_probability(params, b);
  return j;
}

json run_geometry(const RunConfig& run) {
  const Problem pb = build_problem(run, false);
  const SphericalCurve curve = problem_curve(pb, run);
  check_injectivity(curve, run.grids.grid_n);
  const CurveGeometry g = analyze_curve(curve, run.grids);

  json j = summary(run);
  j["dim"] = pb.spec.dim();
  j["gamma_length"] = g.gamma_length;
  j["gamma_length_polyline"] = g.gamma_length_polyline;
  j["length_warning"] = g.length_warning;
  j["euler_char"] = g.euler_char;
  j["kappa_min"] = g.kappa_min;
  j["kappa_max"] = g.kappa_max;
  j["theta_loc"] = g.theta_loc;
  j["theta_loc_over_pi"] = g.theta_loc / std::numbers::pi;
  j["theta_c"] = g.theta_c;
  j["theta_c_over_pi"] = g.theta_c / std::numbers::pi;
  j["critical"] = {{"tan2", g.critical.tan2},
                   {"interior_tan2", g.critical.interior_tan2},
                   {"boundary_tan2", g.critical.boundary_tan2},
                   {"local_tan2", g.critical.local_tan2},
                   {"pairs", g.critical.pairs},
                   {"skipped_pairs", g.critical.skipped_pairs},
                   {"skip_warning", g.critical.skip_warning}};

  Artifacts artifacts(run.output_dir);
  const std::vector<double> grid = domain_grid(pb.domain, run.grids.grid_n);
  artifacts.write("kappa.csv", [&](std::ostream& out) {
    std::vector<std::vector<double>> rows;
    for (double x : grid) rows.push_back({x, kappa(curve, x)});
    write_csv(out, {"x", "kappa"}, rows);
  });
  artifacts.write("psi.csv", [&](std::ostream& out) {
    std::vector<std::string> header{"x"};
    for (int i = 1; i <= curve.dim(); ++i) header.push_back("psi" + std::to_string(i));
    std::vector<std::vector<double>> rows;
    for (double x : grid) {
      const Eigen::VectorXd v = curve.psi(x);
      std::vector<double> row{x};
      row.insert(row.end(), v.data(), v.data() + v.size());
      rows.push_back(std::move(row));
    }
    write_csv(out, header, rows);
  });
  j["artifacts"] = artifacts.list();
  return j;
}

json run_fit(const RunConfig& run) {
  const Problem pb = build_problem(run, true);
  const GroupFit fit = fit_groups(pb.spec, pb.design, pb.data->samples);

  json j = summary(run);
  j["variance_mode"] = run.variance_mode == VarianceMode::pooled ? "pooled" : "known";
  j["points"] = pb.design.points;
  j["variance"] = pb.design.variance;
  json groups = json::array();
  for (int i = 0; i < fit.groups(); ++i) {
    const auto& g = pb.data->samples[static_cast<std::size_t>(i)];
    groups.push_back({{"group", g.group_id},
                      {"r", g.replications},
                      {"beta", to_json(fit.betas.row(i).transpose())},
                      {"residual", fit.residual[static_cast<std::size_t>(i)]}});
  }
  j["groups"] = groups;
  j["residual_total"] = fit.residual_total();

  Artifacts artifacts(run.output_dir);
  artifacts.write("fit.csv", [&](std::ostream& out) {
    out << "group,r,residual";
    for (int c = 1; c <= pb.spec.dim(); ++c) out << ",beta" << c;
    out << '\n';
    for (int i = 0; i < fit.groups(); ++i) {
      const auto idx = static_cast<std::size_t>(i);
      out << pb.data->samples[idx].group_id << ',' << fit.replications[idx] << ','
          << format_real(fit.residual[idx]);
      for (int c = 0; c < pb.spec.dim(); ++c) out << ',' << format_real(fit.betas(i, c));
      out << '\n';
    }
  });

  if (run.settings.has("inference.candidates")) {
    if (pb.spec.family() != BasisFamily::bspline)
      throw ConfigError("model selection compares bspline candidates");
    const std::vector<double> flat = run.settings.reals("inference.candidates");
    if (flat.size() % 2 != 0)
      throw ConfigError("inference.candidates lists degree,m pairs");
    std::vector<std::pair<int, int>> candidates;
    for (std::size_t i = 0; i < flat.size(); i += 2)
      candidates.emplace_back(static_cast<int>(flat[i]), static_cast<int>(flat[i + 1]));
    const ModelSelection sel =
        model_selection(candidates, {pb.spec.lo(), pb.spec.hi()}, pb.design.points,
                        pb.data->samples, pb.design.variance);
    json scores = json::array();
    for (const auto& sc : sel.scores)
      scores.push_back({{"degree", sc.degree}, {"m", sc.m}, {"loss", sc.loss},
                        {"aic", sc.aic}, {"bic", sc.bic}});
    json ms{{"scores", scores}};
    if (!sel.scores.empty()) {
      const auto& a = sel.scores[sel.aic_rank.front()];
      const auto& b = sel.scores[sel.bic_rank.front()];
      ms["aic_best"] = {{"degree", a.degree}, {"m", a.m}};
      ms["bic_best"] = {{"degree", b.degree}, {"m", b.m}};
      ms["agreed"] = sel.agreed().has_value();
    }
    j["model_selection"] = ms;
    artifacts.write("model_selection.csv", [&](std::ostream& out) {
      std::vector<std::vector<double>> rows;
      for (const auto& sc : sel.scores)
        rows.push_back({double(sc.degree), double(sc.m), sc.loss, sc.aic, sc.bic});
      write_csv(out, {"degree", "m", "loss", "aic", "bic"}, rows);
    });
  }
  j["artifacts"] = artifacts.list();
  return j;
}

struct FittedProblem {
  Problem pb;
  GroupFit fit;
  TubeFormulaParams params;
  double b = 0.0;
  std::vector<double> grid;
};

FittedProblem fit_and_calibrate(const RunConfig& run, json& j) {
  Problem pb = build_problem(run, true);
  GroupFit fit = fit_groups(pb.spec, pb.design, pb.data->samples);
  TubeFormulaParams params;
  params.k = fit.groups();
  params.nu = degrees_of_freedom(run, pb);
  const SphericalCurve curve = problem_curve(pb, run);
  params.gamma_length = arc_length(curve, run.grids.arc_segments).quadrature;
  params.euler_char = euler_characteristic(curve);
  const double b = run.settings.has("inference.b")
                       ? run.settings.real("inference.b")
                       : critical_value(params, run.alpha);
  put_params(j, params);
  j["alpha"] = run.alpha;
  j["b"] = b;
  std::vector<double> grid = domain_grid(pb.domain, run.settings.integer("grids.x", 201));
  return {std::move(pb), std::move(fit), params, b, std::move(grid)};
}

json run_band(const RunConfig& run) {
  json j = summary(run);
  const FittedProblem fp = fit_and_calibrate(run, j);
  if (!run.settings.has("inference.contrast"))
    throw ConfigError("band needs inference.contrast (--contrast)");
  const std::vector<double> c = run.settings.reals("inference.contrast");
  const ContrastBand band = contrast_band(fp.fit, c, fp.b, fp.grid);
  j["contrast"] = c;
  j["max_halfwidth"] = *std::max_element(band.halfwidth.begin(), band.halfwidth.end());

  Artifacts artifacts(run.output_dir);
  artifacts.write("band.csv", [&](std::ostream& out) {
    write_band_csv(out, band_table(band));
  });
  j["artifacts"] = artifacts.list();
  return j;
}

json run_scan(const RunConfig& run) {
  json j = summary(run);
  const FittedProblem fp = fit_and_calibrate(run, j);
  const std::vector<double> stat = chi2_scan(fp.fit, fp.grid);
  const double threshold = fp.b * fp.b;
  const auto top = std::max_element(stat.begin(), stat.end());
  j["threshold"] = threshold;
  j["max_chi2"] = *top;
  j["argmax_x"] = fp.grid[static_cast<std::size_t>(top - stat.begin())];
  j["reject"] = *top > threshold;

  Artifacts artifacts(run.output_dir);
  artifacts.write("scan.csv", [&](std::ostream& out) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < stat.size(); ++i)
      rows.push_back({fp.grid[i], stat[i], threshold});
    write_csv(out, {"x", "chi2", "threshold"}, rows);
  });
  j["artifacts"] = artifacts.list();
  return j;
}

std::size_t replications(const Settings& s, std::size_t fallback) {
  const auto reps = s.unsigned64("simulation.reps", fallback);
  if (reps < 1) throw ConfigError("simulation.reps must be >= 1");
  return static_cast<std::size_t>(reps);
}

json run_sim_max(const RunConfig& run) {
  const Problem pb = build_problem(run, false);
  const SphericalCurve curve = problem_curve(pb, run);
  const std::size_t reps = replications(run.settings, 100000);
  const int partitions = run.settings.integer("simulation.partitions", 16);
  const int grid_n = run.settings.integer("grids.x", 201);
  const MaxProcessSample sample =
      simulate_max_process(curve, run.k, reps, grid_n, run.seed, partitions);

  TubeFormulaParams params;
  params.k = run.k;
  params.gamma_length = arc_length(curve, run.grids.arc_segments).quadrature;
  params.euler_char = euler_characteristic(curve);
  const double b = critical_value(params, run.alpha);
  const McEstimate at_b = sample.tail(b * b);

  json j = summary(run);
  put_params(j, params);
  j["reps"] = reps;
  j["partitions"] = partitions;
  j["grid_n"] = grid_n;
  j["mean_y"] = std::accumulate(sample.grid_mean().begin(), sample.grid_mean().end(), 0.0) /
                static_cast<double>(sample.grid_mean().size());
  j["b"] = b;
  j["mc_tail_at_b"] = at_b.estimate;
  j["stderr"] = at_b.stderr_;

  Artifacts artifacts(run.output_dir);
  artifacts.write("sim_max.csv", [&](std::ostream& out) {
    std::vector<std::vector<double>> rows;
    for (int i = 5; i <= 40; ++i) {
      const double level = i / 10.0;
      const McEstimate e = sample.tail(level * level);
      rows.push_back({level, e.estimate, e.stderr_, tube_tail_probability(params, level)});
    }
    write_csv(out, {"b", "mc_tail", "stderr", "tube_tail"}, rows);
  });
  j["artifacts"] = artifacts.list();
  return j;
}

SimulationConfig simulation_config(const RunConfig& run) {
  const Settings& s = run.settings;
  SimulationConfig c;
  c.true_model = parse_model(s.text("simulation.model", "model1"));
  c.amplitude = s.real("simulation.K", 1.0);
  c.degree = s.integer("basis.degree", 2);
  c.m = s.integer("basis.m", 5);
  c.k = run.k;
  c.n = s.integer("simulation.n", 11);
  c.spacing = parse_spacing(s.text("simulation.spacing", "inclusive"));
  c.replications = replications(s, 100000);
  c.seed = run.seed;
  c.partitions = s.integer("simulation.partitions", 16);
  c.grid_n = s.integer("grids.x", 2001);
  c.alpha = run.alpha;
  c.validate();
  return c;
}

json coverage_row(const SimulationConfig& c) {
  const McEstimate e = coverage_simulation(c);
  const double delta = bias_delta(c);
  return {{"m", c.m},
          {"K", c.amplitude},
          {"prob", e.estimate},
          {"stderr", e.stderr_},
          {"delta", delta},
          {"Delta", coverage_bias_bound(c, delta)}};
}

json run_sim_coverage(const RunConfig& run) {
  SimulationConfig c = simulation_config(run);
  json j = summary(run);
  j["model"] = model_name(c.true_model);
  j["reps"] = c.replications;
  j["partitions"] = c.partitions;
  j["spacing"] = c.spacing == DesignSpacing::inclusive ? "inclusive" : "literal";
  Artifacts artifacts(run.output_dir);

  if (run.settings.flag("simulation.table1", false)) {
    json rows = json::array();
    for (int m : integer_list(run.settings, "simulation.m_list", {3, 4, 5, 6, 7, 8, 9, 10}))
      for (double amplitude : {1.0, 3.0, 9.0}) {
        c.m = m;
        c.amplitude = amplitude;
        c.validate();
        rows.push_back(coverage_row(c));
      }
    j["rows"] = rows;
    artifacts.write("table1_" + model_name(c.true_model) + ".csv", [&](std::ostream& out) {
      std::vector<std::vector<double>> table;
      for (const auto& r : rows)
        table.push_back({r["m"].get<double>(), r["K"].get<double>(), r["prob"].get<double>(),
                         r["stderr"].get<double>(), r["delta"].get<double>(),
                         r["Delta"].get<double>()});
      write_csv(out, {"m", "K", "prob", "stderr", "delta", "Delta"}, table);
    });
  } else {
    const BandCalibration cal = calibrate_band(c.assumed_basis(), c.points(), c.k, c.alpha);
    json row = coverage_row(c);
    j.update(row);
    j["estimate"] = row["prob"];
    j["b"] = cal.b;
    j["gamma_length"] = cal.params.gamma_length;
  }
  j["artifacts"] = artifacts.list();
  return j;
}

json run_widths(const RunConfig& run) {
  const Settings& s = run.settings;
  const int degree = s.integer("basis.degree", 2);
  const int n = s.integer("simulation.n", 11);
  const auto points = design_points(n, parse_spacing(s.text("simulation.spacing", "inclusive")));
  const double a = s.real("basis.a", 0.0), b = s.real("basis.b", 1.0);

  json j = summary(run);
  json rows = json::array();
  std::vector<std::vector<double>> table;
  for (int m : integer_list(s, "simulation.m_list", {3, 4, 5, 6, 7, 8, 9, 10})) {
    const BasisSpec spec = BasisSpec::bspline(degree, m, a, b);
    const double w = average_band_width(spec, points, run.alpha, run.k);
    rows.push_back({{"m", m}, {"W", w}});
    table.push_back({double(m), w});
  }
  j["alpha"] = run.alpha;
  j["rows"] = rows;
  Artifacts artifacts(run.output_dir);
  artifacts.write("table2.csv", [&](std::ostream& out) { write_csv(out, {"m", "W"}, table); });
  j["artifacts"] = artifacts.list();
  return j;
}

// ---------------------------------------------------------------- wiring

struct Subcommand {
  CLI::App* app = nullptr;
  std::function<json(const RunConfig&)> run;
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
  std::vector<std::pair<CLI::Option*, std::string>> options;
};

void add_flags(Subcommand& sub, const std::vector<FlagSpec>& flags) {
  for (const FlagSpec& f : flags) {
    if (sub.app->get_option_no_throw(f.flag)) continue;
    CLI::Option* opt = f.boolean
                           ? sub.app->add_flag(f.flag, sub.switches[f.key], f.help)
                           : sub.app->add_option(f.flag, sub.values[f.key], f.help);
    sub.options.emplace_back(opt, f.key);
  }
}

Settings effective_settings(const Subcommand& sub) {
  Settings s = sub.config_path.empty() ? Settings{} : Settings::from_ini(sub.config_path);
  for (const auto& [opt, key] : sub.options) {
    if (opt->count() == 0) continue;
    if (sub.switches.count(key))
      s.set(key, sub.switches.at(key) ? "true" : "false");
    else
      s.set(key, sub.values.at(key));
  }
  return s;
}

}  // namespace

RunConfig RunConfig::resolve(const std::string& command, Settings settings) {
  RunConfig run;
  run.command = command;
  run.alpha = settings.real("inference.alpha", 0.05);
  if (!(run.alpha > 0.0 && run.alpha <= 0.5))
    throw ConfigError("inference.alpha must lie in (0, 0.5]");
  run.k = settings.integer("inference.k", 3);
  if (run.k < 2) throw ConfigError("inference.k must be >= 2");
  const std::string mode = settings.text("inference.variance_mode", "known");
  if (mode == "known")
    run.variance_mode = VarianceMode::known;
  else if (mode == "pooled")
    run.variance_mode = VarianceMode::pooled;
  else
    throw ConfigError("inference.variance_mode must be known or pooled");
  if (settings.has("inference.nu")) {
    run.nu = settings.integer("inference.nu");
    if (*run.nu < 1) throw ConfigError("inference.nu must be >= 1");
  }
  run.closed = settings.flag("domain.closed", false);
  run.grids.grid_n = settings.integer("grids.x", run.grids.grid_n);
  run.grids.alpha_grid_n = settings.integer("grids.alpha", run.grids.alpha_grid_n);
  run.grids.arc_segments = settings.integer("grids.arc_segments", run.grids.arc_segments);
  if (run.grids.grid_n < 2 || run.grids.alpha_grid_n < 2 || run.grids.arc_segments < 2)
    throw ConfigError("grid sizes must be >= 2");
  if (settings.has("output.dir")) run.output_dir = settings.text("output.dir", "");
  run.seed = settings.unsigned64("simulation.seed", kDefaultSeed);
  run.hash = config_hash(command, settings);
  run.settings = std::move(settings);
  return run;
}

BasisSpec RunConfig::basis() const {
  const std::string family = settings.text("basis.family", "bspline");
  if (family == "polynomial") return BasisSpec::polynomial(settings.integer("basis.p"));
  if (family == "trigonometric")
    return BasisSpec::trigonometric(settings.integer("basis.harmonics"));
  if (family == "bspline")
    return BasisSpec::bspline(settings.integer("basis.degree", 2),
                              settings.integer("basis.m", 5),
                              settings.real("basis.a", 0.0), settings.real("basis.b", 1.0));
  throw ConfigError("unknown basis.family '" + family + "'");
}

std::vector<Interval> RunConfig::domain(const BasisSpec& spec) const {
  if (settings.has("domain.intervals"))
    return parse_intervals(settings.text("domain.intervals", ""));
  if (spec.family() == BasisFamily::bspline) return {{spec.lo(), spec.hi()}};
  throw ConfigError("domain.intervals is required for this basis");
}

int cmd_dispatch(int argc, const char* const* argv, std::ostream& out,
                 std::ostream& err) {
  CLI::App app{"Simultaneous confidence bands for multi-group regression curves"};
  app.name("tubeband");
  app.require_subcommand(1);

  const std::vector<FlagSpec> geometry_flags = [] {
    std::vector<FlagSpec> f = kBasisFlags;
    f.insert(f.end(), kDesignFlags.begin(), kDesignFlags.end());
    f.insert(f.end(), kGridFlags.begin(), kGridFlags.end());
    return f;
  }();

  std::vector<Subcommand> subs;
  subs.reserve(9);
  auto add = [&](const char* name, const char* help,
                 std::function<json(const RunConfig&)> fn,
                 std::vector<std::vector<FlagSpec>> groups) {
    Subcommand& sub = subs.emplace_back();
    sub.app = app.add_subcommand(name, help);
    sub.run = std::move(fn);
    sub.app->add_option("--config", sub.config_path, "INI configuration file");
    for (const auto& g : groups) add_flags(sub, g);
    add_flags(sub, {kOutputFlag});
  };

  add("tailprob", "tube tail probability at b", run_tailprob,
      {kTubeFlags, {{"--b", "inference.b", "threshold b"}}, geometry_flags});
  add("critical", "critical value b for level alpha", run_critical,
      {kTubeFlags, {kAlphaFlag}, geometry_flags});
  add("geometry", "|Gamma|, chi, kappa, critical radii", run_geometry,
      {geometry_flags});
  add("fit", "group fits and AIC/BIC table", run_fit,
      {geometry_flags, kInferenceFlags,
       {{"--candidates", "inference.candidates", "bspline candidates d,m,d,m,..."}}});
  add("band", "simultaneous band for a contrast", run_band,
      {geometry_flags, kInferenceFlags, {kAlphaFlag},
       {{"--contrast", "inference.contrast", "contrast coefficients c_i"}}});
  add("scan", "pointwise homogeneity statistic", run_scan,
      {geometry_flags, kInferenceFlags, {kAlphaFlag}});
  add("sim-max", "Monte Carlo maxima of the chi-square process", run_sim_max,
      {geometry_flags, {kAlphaFlag, {"--k", "inference.k", "number of groups"}},
       kReplicationFlags});
  add("sim-coverage", "Monte Carlo coverage under a true model", run_sim_coverage,
      {kSimulationFlags, kReplicationFlags,
       {kAlphaFlag,
        {"--k", "inference.k", "number of groups"},
        {"--degree", "basis.degree", "assumed bspline degree"},
        {"--m", "basis.m", "assumed bspline size"},
        {"--grid", "grids.x", "evaluation grid size"},
        {"--table1", "simulation.table1", "sweep m and K", true},
        {"--m-list", "simulation.m_list", "m values of the sweep"}}});
  add("widths", "average band widths over m", run_widths,
      {{kAlphaFlag,
        {"--k", "inference.k", "number of groups"},
        {"--degree", "basis.degree", "bspline degree"},
        {"--n", "simulation.n", "number of design points"},
        {"--spacing", "simulation.spacing", "inclusive | literal"},
        {"--m-list", "simulation.m_list", "m values"}}});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "tubeband: error: " << e.what() << '\n';
    return 2;
  }

  try {
    for (const Subcommand& sub : subs) {
      if (!sub.app->parsed()) continue;
      const RunConfig run = RunConfig::resolve(sub.app->get_name(), effective_settings(sub));
      out << sub.run(run).dump(2) << '\n';
      return 0;
    }
    err << "tubeband: error: no subcommand\n";
    return 2;
  } catch (const ContractError& e) {
    err << "tubeband: error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "tubeband: numerical failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "tubeband: failure: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace tubeband
