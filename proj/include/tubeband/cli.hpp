#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tubeband/basis.hpp"
#include "tubeband/design.hpp"
#include "tubeband/geometry.hpp"
#include "tubeband/settings.hpp"

namespace tubeband {

enum class VarianceMode { known, pooled };

inline constexpr std::uint64_t kDefaultSeed = 20240101;

/// Effective run configuration: config file, then command-line overrides.
struct RunConfig {
  std::string command;
  Settings settings;
  double alpha = 0.05;
  int k = 3;
  VarianceMode variance_mode = VarianceMode::known;
  std::optional<int> nu;
  bool closed = false;
  GeometryOptions grids;
  std::optional<std::string> output_dir;
  std::uint64_t seed = kDefaultSeed;
  std::string hash;

  /// Validates alpha in (0, 0.5], grids >= 2, k >= 2. Throws ConfigError.
  static RunConfig resolve(const std::string& command, Settings settings);

  BasisSpec basis() const;
  /// domain.intervals ("lo:hi, lo:hi"), defaulting to [a, b] for bspline.
  std::vector<Interval> domain(const BasisSpec& spec) const;
};

/// Runs one subcommand and returns the exit code: 0 on success, 2 on
/// configuration or contract errors, 1 on numerical failures. Writes the
/// JSON summary to `out` and a single-line diagnostic to `err`.
int cmd_dispatch(int argc, const char* const* argv, std::ostream& out,
                 std::ostream& err);

}  // namespace tubeband
