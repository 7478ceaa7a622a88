#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tubeband {

/// Flat "section.key" -> value store behind every subcommand. Values stay as
/// text until a typed getter parses them; parse failures throw ConfigError
/// naming the key.
class Settings {
 public:
  /// Reads an INI file ([section] headers, key = value lines, ; or #
  /// comments).
  static Settings from_ini(const std::string& path);

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  std::string text(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key, double fallback) const;
  double real(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  int integer(const std::string& key) const;
  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  /// Comma or whitespace separated reals; fractions such as 2/3 allowed.
  std::vector<double> reals(const std::string& key) const;
  /// Rows separated by ';', entries as in reals().
  Eigen::MatrixXd matrix(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const noexcept {
    return entries_;
  }

 private:
  std::string require(const std::string& key) const;
  std::map<std::string, std::string> entries_;
};

/// Parses "a", "a/b" or "-a/b" as a double; nullopt on trailing garbage.
std::optional<double> parse_real(std::string_view text);

/// Reals separated by commas or whitespace.
std::vector<double> parse_reals(std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Hex FNV-1a over the command name and the sorted key=value lines.
std::string config_hash(const std::string& command, const Settings& settings);

}  // namespace tubeband
