#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cposterior {

/// Shortest-independent fixed rendering: 17 significant digits, "inf"/"-inf"/"nan".
std::string format_double(double value);

/// Parses a real, accepting "inf"/"+inf"/"-inf" (any case).
double parse_double(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws when absent
};

CsvTable read_csv(const std::filesystem::path& path);
std::string to_csv_text(const CsvTable& table);

/// Writes to a sibling temporary and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// One real per row under the given header column (default "x").
std::vector<double> read_series_csv(const std::filesystem::path& path, std::string_view column = "x");
void write_series_csv(const std::filesystem::path& path, const std::vector<double>& x, std::string_view column = "x");

struct RawRegressionData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;
};

/// Header row with one column per covariate plus a `y` column.
RawRegressionData read_regression_csv(const std::filesystem::path& path);

}  // namespace cposterior
