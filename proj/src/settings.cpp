#include "tubeband/settings.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "tubeband/error.hpp"

namespace tubeband {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::optional<double> parse_plain(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    return std::nullopt;
  return value;
}

void flatten(const boost::property_tree::ptree& tree, const std::string& prefix,
             Settings& out) {
  for (const auto& [name, child] : tree) {
    const std::string key = prefix.empty() ? name : prefix + "." + name;
    if (child.empty())
      out.set(key, child.data());
    else
      flatten(child, key, out);
  }
}

}  // namespace

std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_plain(text);
  const auto num = parse_plain(trim(text.substr(0, slash)));
  const auto den = parse_plain(trim(text.substr(slash + 1)));
  if (!num || !den || *den == 0.0) return std::nullopt;
  return *num / *den;
}

std::vector<double> parse_reals(std::string_view text) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           (text[i] == ',' || std::isspace(static_cast<unsigned char>(text[i]))))
      ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ',' &&
           !std::isspace(static_cast<unsigned char>(text[j])))
      ++j;
    if (j > i) {
      const auto value = parse_real(text.substr(i, j - i));
      if (!value)
        throw ConfigError("not a number: '" + std::string(text.substr(i, j - i)) +
                          "'");
      out.push_back(*value);
    }
    i = j;
  }
  return out;
}

Settings Settings::from_ini(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot read config: " + std::string(e.what()));
  }
  Settings out;
  flatten(tree, "", out);
  return out;
}

void Settings::set(const std::string& key, std::string value) {
  entries_[key] = std::string(trim(value));
}

bool Settings::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

std::optional<std::string> Settings::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string Settings::require(const std::string& key) const {
  const auto value = get(key);
  if (!value) throw ConfigError("missing required setting '" + key + "'");
  return *value;
}

std::string Settings::text(const std::string& key,
                           const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double Settings::real(const std::string& key) const {
  const std::string raw = require(key);
  const auto value = parse_real(raw);
  if (!value) throw ConfigError("setting '" + key + "' is not a number: " + raw);
  return *value;
}

double Settings::real(const std::string& key, double fallback) const {
  return has(key) ? real(key) : fallback;
}

int Settings::integer(const std::string& key) const {
  const std::string raw = require(key);
  const std::string_view s = trim(raw);
  int value = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw ConfigError("setting '" + key + "' is not an integer: " + raw);
  return value;
}

int Settings::integer(const std::string& key, int fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::uint64_t Settings::unsigned64(const std::string& key,
                                   std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string raw = require(key);
  const std::string_view s = trim(raw);
  std::uint64_t value = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw ConfigError("setting '" + key + "' is not an unsigned integer: " + raw);
  return value;
}

bool Settings::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string raw = require(key);
  if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
  if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
  throw ConfigError("setting '" + key + "' is not a boolean: " + raw);
}

std::vector<double> Settings::reals(const std::string& key) const {
  try {
    return parse_reals(require(key));
  } catch (const ConfigError& e) {
    throw ConfigError("setting '" + key + "': " + e.what());
  }
}

Eigen::MatrixXd Settings::matrix(const std::string& key) const {
  const std::string raw = require(key);
  std::vector<std::vector<double>> rows;
  std::stringstream stream(raw);
  std::string row;
  while (std::getline(stream, row, ';')) {
    if (trim(row).empty()) continue;
    try {
      rows.push_back(parse_reals(row));
    } catch (const ConfigError& e) {
      throw ConfigError("setting '" + key + "': " + e.what());
    }
  }
  if (rows.empty()) throw ConfigError("setting '" + key + "' is empty");
  Eigen::MatrixXd out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw ConfigError("setting '" + key + "' has ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string config_hash(const std::string& command, const Settings& settings) {
  std::string canonical = command + "\n";
  for (const auto& [key, value] : settings.entries())
    canonical += key + "=" + value + "\n";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical)));
  return buf;
}

}  // namespace tubeband
