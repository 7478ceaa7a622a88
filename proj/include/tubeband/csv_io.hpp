#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tubeband/inference.hpp"

namespace tubeband {

/// Balanced multi-group data on shared design points, sorted by x.
struct DataSet {
  std::vector<double> points;
  std::vector<GroupSample> samples;  // in order of first appearance
};

/// Reads `group,x,y[,se][,r]`. When some (group, x) pair repeats, rows are
/// raw replicates (no se or r column allowed) and are reduced to means with
/// se = sqrt(sum of squared deviations) / r, so that r^2 se^2 recovers the
/// within-group sum of squares. Every group must cover the same x values
/// with a single r.
DataSet read_data_csv(std::istream& in);
DataSet read_data_csv_file(const std::string& path);

/// A band as written to disk.
struct BandTable {
  std::vector<double> x;
  std::vector<double> center;
  std::vector<double> lower;
  std::vector<double> upper;
};

BandTable band_table(const ContrastBand& band);

/// Header `x,center,lower,upper`, values with 17 significant digits.
void write_band_csv(std::ostream& out, const BandTable& band);
BandTable read_band_csv(std::istream& in);

/// "%.17g".
std::string format_real(double value);

/// Writes a header row then rows of reals.
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace tubeband
