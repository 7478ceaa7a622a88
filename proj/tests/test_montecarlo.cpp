#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "oracles.hpp"
#include "tubeband/error.hpp"
#include "tubeband/montecarlo.hpp"
#include "tubeband/rng.hpp"

using namespace tubeband;

namespace {

TubeFormulaParams quad_params() {
  TubeFormulaParams p;
  p.k = 3;
  p.gamma_length = oracle::quad_gamma_length();
  p.euler_char = 1;
  return p;
}

// Restores TUBEBAND_THREADS on scope exit.
class ThreadsOverride {
 public:
  explicit ThreadsOverride(const char* value) {
    if (const char* old = std::getenv("TUBEBAND_THREADS")) saved_ = old;
    ::setenv("TUBEBAND_THREADS", value, 1);
  }
  ~ThreadsOverride() {
    if (saved_.empty()) ::unsetenv("TUBEBAND_THREADS");
    else ::setenv("TUBEBAND_THREADS", saved_.c_str(), 1);
  }

 private:
  std::string saved_;
};

}  // namespace

TEST_CASE("splitmix64 reference outputs") {
  // First outputs for state 0 from the reference implementation.
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(state) == 0x6e789e6aa1b965f4ULL);
  CHECK(splitmix64(state) == 0x06c45d188009454fULL);
}

TEST_CASE("chunk sizes partition the total") {
  for (std::size_t total : {0u, 1u, 7u, 100u, 1001u})
    for (std::size_t chunks : {1u, 3u, 16u}) {
      std::size_t sum = 0;
      for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t s = chunk_size(total, chunks, c);
        CHECK(s + 1 >= (total + chunks - 1) / chunks);
        sum += s;
      }
      CHECK(sum == total);
    }
}

TEST_CASE("chi-square process has mean k - 1 at every grid point") {
  const std::size_t reps = 20000;
  for (int k : {2, 3, 4}) {
    const MaxProcessSample s = simulate_max_process(oracle::quad_curve(), k, reps, 41, 99);
    const double tol = 4.0 * std::sqrt(2.0 * (k - 1) / reps);
    for (double mean : s.grid_mean()) CHECK(std::abs(mean - (k - 1)) < tol);
    CHECK(s.maxima().size() == reps);
    CHECK(std::is_sorted(s.maxima().begin(), s.maxima().end()));
  }
}

TEST_CASE("max process is reproducible across thread counts") {
  const auto run = [] {
    return simulate_max_process(oracle::quad_curve(), 3, 5000, 51, 1234, 8).maxima();
  };
  std::vector<double> one, many;
  {
    ThreadsOverride t("1");
    one = run();
  }
  {
    ThreadsOverride t("5");
    many = run();
  }
  CHECK(one == many);
  CHECK(run() == one);
  const auto other =
      simulate_max_process(oracle::quad_curve(), 3, 5000, 51, 1235, 8).maxima();
  CHECK(other != one);
}

TEST_CASE("tail estimates and their standard errors") {
  const MaxProcessSample s = simulate_max_process(oracle::quad_curve(), 3, 40000, 201, 7);
  const McEstimate zero = s.tail(0.0);
  CHECK(zero.estimate == 1.0);
  CHECK(zero.stderr_ == 0.0);
  const double b = critical_value(quad_params(), 0.05);
  const McEstimate at = s.tail(b * b);
  CHECK(at.reps == 40000);
  CHECK(at.seed == 7);
  CHECK(at.stderr_ == doctest::Approx(std::sqrt(at.estimate * (1 - at.estimate) / 40000.0)));
  CHECK(at.estimate >= 0.04);
  CHECK(at.estimate <= 0.05 + 3.0 * at.stderr_);
}

TEST_CASE("the tube value bounds the simulated tail from above") {
  const MaxProcessSample s = simulate_max_process(oracle::quad_curve(), 3, 40000, 201, 11);
  for (int i = 0; i <= 30; ++i) {
    const double b = 1.0 + 0.1 * i;
    const double tube = tube_tail_probability(quad_params(), b);
    const McEstimate mc = s.tail(b * b);
    CHECK(mc.estimate <= std::min(1.0, tube) + 3.0 * mc.stderr_ + 1e-12);
  }
}

TEST_CASE("max process rejects bad arguments") {
  CHECK_THROWS_AS(simulate_max_process(oracle::quad_curve(), 1, 10, 11, 1), DomainError);
  CHECK_THROWS_AS(simulate_max_process(oracle::quad_curve(), 3, 0, 11, 1), DomainError);
  CHECK_THROWS_AS(simulate_max_process(oracle::quad_curve(), 3, 10, 1, 1), DomainError);
  CHECK_THROWS_AS(simulate_max_process(oracle::quad_curve(), 3, 10, 11, 1, 0), DomainError);
}

TEST_CASE("design points and true curves") {
  const auto inclusive = design_points(11, DesignSpacing::inclusive);
  CHECK(inclusive.front() == 0.0);
  CHECK(inclusive.back() == 1.0);
  CHECK(inclusive[5] == doctest::Approx(0.5));
  const auto literal = design_points(10, DesignSpacing::literal);
  CHECK(literal.back() == doctest::Approx(0.9));

  for (double x : {0.0, 0.3, 1.0}) {
    CHECK(true_curve(TrueModel::model1, 1.0, 1, x) == 0.0);
    CHECK(true_curve(TrueModel::in_basis, 2.0, 3, x) == doctest::Approx(4.0));
    // Amplitude scales every model linearly.
    for (auto model : {TrueModel::model1, TrueModel::model2, TrueModel::model3})
      for (int g = 1; g <= 3; ++g)
        CHECK(true_curve(model, 3.0, g, x) ==
              doctest::Approx(3.0 * true_curve(model, 1.0, g, x)).epsilon(1e-12));
  }
}

TEST_CASE("bias delta examples") {
  SimulationConfig config;
  config.m = 3;
  CHECK(std::abs(bias_delta(config) - 0.4692) < 5e-4);
  config.m = 5;
  CHECK(bias_delta(config) < 1e-10);
  config.true_model = TrueModel::in_basis;
  config.m = 3;
  config.amplitude = 4.0;
  CHECK(bias_delta(config) < 1e-10);
}

TEST_CASE("bias delta scales with the amplitude") {
  SimulationConfig config;
  config.true_model = TrueModel::model2;
  config.m = 3;
  const double one = bias_delta(config);
  config.amplitude = 9.0;
  CHECK(bias_delta(config) == doctest::Approx(9.0 * one).epsilon(1e-10));
}

TEST_CASE("coverage bias bound") {
  SimulationConfig config;
  config.m = 3;
  // Zero up to the critical-value residual |tail(b) - alpha| < 1e-10.
  CHECK(coverage_bias_bound(config, 0.0) < 1e-10);
  const double small = coverage_bias_bound(config, 0.1);
  const double large = coverage_bias_bound(config, 0.4692);
  CHECK(small > 0.0);
  CHECK(large > small);
  CHECK(std::abs(large - 0.1155) < 1e-3);
}

TEST_CASE("coverage matches the nominal level without bias") {
  SimulationConfig config;
  config.true_model = TrueModel::in_basis;
  config.replications = 20000;
  config.grid_n = 201;
  const McEstimate cov = coverage_simulation(config);
  // The band is conservative up to grid error.
  CHECK(cov.estimate >= 0.95 - 3.0 * cov.stderr_);
  CHECK(cov.estimate <= 0.97);
}

TEST_CASE("coverage drops as the misspecification grows") {
  SimulationConfig config;
  config.true_model = TrueModel::model1;
  config.m = 3;
  config.replications = 4000;
  config.grid_n = 201;
  double prev = 1.0;
  for (double amplitude : {0.0, 1.0, 3.0, 9.0}) {
    config.amplitude = amplitude;
    const double cov = coverage_simulation(config).estimate;
    CHECK(cov <= prev + 0.01);
    prev = cov;
  }
  CHECK(prev < 0.001);
}

TEST_CASE("coverage is reproducible for a fixed seed and partitioning") {
  SimulationConfig config;
  config.replications = 3000;
  config.grid_n = 101;
  const double a = coverage_simulation(config).estimate;
  {
    ThreadsOverride t("3");
    CHECK(coverage_simulation(config).estimate == a);
  }
}

TEST_CASE("simulation config validation") {
  SimulationConfig config;
  config.m = 12;
  CHECK_THROWS_AS(config.validate(), DomainError);
  config = SimulationConfig{};
  config.alpha = 0.7;
  CHECK_THROWS_AS(config.validate(), DomainError);
  config = SimulationConfig{};
  config.k = 4;
  CHECK_THROWS_AS(config.validate(), DomainError);
  config.true_model = TrueModel::in_basis;
  CHECK_NOTHROW(config.validate());
  config = SimulationConfig{};
  config.amplitude = -1.0;
  CHECK_THROWS_AS(config.validate(), DomainError);
  config = SimulationConfig{};
  config.replications = 0;
  CHECK_THROWS_AS(coverage_simulation(config), DomainError);
}

TEST_CASE("average band widths grow with the basis size") {
  double prev = 0.0;
  for (int m = 3; m <= 6; ++m) {
    const BasisSpec spec = BasisSpec::bspline(2, m, 0.0, 1.0);
    const double w = average_band_width(spec, design_points(11, DesignSpacing::inclusive), 0.05);
    CHECK(w > prev);
    prev = w;
  }
  const BasisSpec three = BasisSpec::bspline(2, 3, 0.0, 1.0);
  CHECK(std::abs(average_band_width(three, design_points(11, DesignSpacing::inclusive), 0.05) -
                 1.463) < 2e-3);
}
