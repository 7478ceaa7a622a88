#include "tubeband/csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "tubeband/error.hpp"
#include "tubeband/settings.hpp"

namespace tubeband {

namespace {

std::string trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream stream(line);
  std::string cell;
  while (std::getline(stream, cell, ',')) cells.push_back(trimmed(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

// Data lines: skips blanks and '#' comments. Returns false at end of input.
bool next_row(std::istream& in, std::vector<std::string>& cells, int& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trimmed(line);
    if (t.empty() || t.front() == '#') continue;
    cells = split_row(t);
    return true;
  }
  return false;
}

double cell_real(const std::string& cell, int line_no) {
  const auto value = parse_real(cell);
  if (!value || !std::isfinite(*value))
    throw DomainError("line " + std::to_string(line_no) + ": not a number: '" +
                      cell + "'");
  return *value;
}

struct Observation {
  double y = 0.0;
  std::optional<double> se;
  std::optional<double> r;
};

}  // namespace

DataSet read_data_csv(std::istream& in) {
  std::vector<std::string> header;
  int line_no = 0;
  if (!next_row(in, header, line_no)) throw DomainError("data CSV is empty");

  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  for (const char* required : {"group", "x", "y"})
    if (!column.count(required))
      throw DomainError(std::string("data CSV lacks column '") + required + "'");
  const bool has_se = column.count("se") > 0;
  const bool has_r = column.count("r") > 0;

  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::vector<Observation>>> rows;
  std::vector<std::string> cells;
  while (next_row(in, cells, line_no)) {
    if (cells.size() != header.size())
      throw DomainError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields");
    const std::string& group = cells[column["group"]];
    if (group.empty())
      throw DomainError("line " + std::to_string(line_no) + ": empty group");
    if (!rows.count(group)) order.push_back(group);
    Observation obs;
    obs.y = cell_real(cells[column["y"]], line_no);
    if (has_se && !cells[column["se"]].empty())
      obs.se = cell_real(cells[column["se"]], line_no);
    if (has_r && !cells[column["r"]].empty())
      obs.r = cell_real(cells[column["r"]], line_no);
    rows[group][cell_real(cells[column["x"]], line_no)].push_back(obs);
  }
  if (order.empty()) throw DomainError("data CSV has no rows");

  bool raw = false;
  for (const auto& [group, by_x] : rows)
    for (const auto& [x, obs] : by_x)
      if (obs.size() > 1) raw = true;
  if (raw && (has_se || has_r))
    throw DomainError(
        "repeated (group, x) rows are raw replicates and cannot carry se or r");

  DataSet data;
  for (const auto& [x, obs] : rows[order.front()]) data.points.push_back(x);

  for (const std::string& group : order) {
    const auto& by_x = rows[group];
    std::vector<double> xs;
    for (const auto& [x, obs] : by_x) xs.push_back(x);
    if (xs != data.points)
      throw DomainError("group '" + group +
                        "' does not share the design points of group '" +
                        order.front() + "' (unbalanced designs are unsupported)");

    GroupSample sample;
    sample.group_id = group;
    std::optional<int> r;
    std::vector<double> se;
    bool any_se = false, all_se = true;
    for (const auto& [x, obs] : by_x) {
      int count = 1;
      double mean = 0.0, s = 0.0;
      if (raw) {
        count = static_cast<int>(obs.size());
        for (const auto& o : obs) mean += o.y;
        mean /= count;
        double ss = 0.0;
        for (const auto& o : obs) ss += (o.y - mean) * (o.y - mean);
        if (count > 1) {
          s = std::sqrt(ss) / count;
          any_se = true;
        } else {
          all_se = false;
        }
      } else {
        const Observation& o = obs.front();
        mean = o.y;
        if (o.r) {
          if (*o.r < 1.0 || std::floor(*o.r) != *o.r)
            throw DomainError("group '" + group + "': r must be a positive integer");
          count = static_cast<int>(*o.r);
        }
        if (o.se) {
          s = *o.se;
          any_se = true;
        } else {
          all_se = false;
        }
      }
      if (r && *r != count)
        throw DomainError("group '" + group +
                          "' has varying replication counts across x");
      r = count;
      sample.y.push_back(mean);
      se.push_back(s);
    }
    if (any_se && !all_se)
      throw DomainError("group '" + group + "' has standard errors at only some x");
    sample.replications = *r;
    if (any_se) sample.se = std::move(se);
    data.samples.push_back(std::move(sample));
  }
  return data;
}

DataSet read_data_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  return read_data_csv(in);
}

BandTable band_table(const ContrastBand& band) {
  BandTable t;
  t.x = band.x;
  t.center = band.center;
  for (std::size_t i = 0; i < band.x.size(); ++i) {
    t.lower.push_back(band.lower(i));
    t.upper.push_back(band.upper(i));
  }
  return t;
}

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_real(row[i]);
    out << '\n';
  }
}

void write_band_csv(std::ostream& out, const BandTable& band) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < band.x.size(); ++i)
    rows.push_back({band.x[i], band.center[i], band.lower[i], band.upper[i]});
  write_csv(out, {"x", "center", "lower", "upper"}, rows);
}

BandTable read_band_csv(std::istream& in) {
  std::vector<std::string> cells;
  int line_no = 0;
  if (!next_row(in, cells, line_no) ||
      cells != std::vector<std::string>{"x", "center", "lower", "upper"})
    throw DomainError("band CSV must start with x,center,lower,upper");
  BandTable band;
  while (next_row(in, cells, line_no)) {
    if (cells.size() != 4)
      throw DomainError("line " + std::to_string(line_no) + ": expected 4 fields");
    band.x.push_back(cell_real(cells[0], line_no));
    band.center.push_back(cell_real(cells[1], line_no));
    band.lower.push_back(cell_real(cells[2], line_no));
    band.upper.push_back(cell_real(cells[3], line_no));
  }
  return band;
}

}  // namespace tubeband
