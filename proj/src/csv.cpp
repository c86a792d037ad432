#include "cposterior/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cposterior/errors.hpp"

namespace cposterior {

namespace {

std::string trim(const std::string& field) {
  const auto first = field.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = field.find_last_not_of(" \t");
  return field.substr(first, last - first + 1);
}

// Splits RFC 4180 text into records. Quoted fields may hold commas, doubled
// quotes and line breaks; unquoted fields are trimmed of surrounding blanks.
std::vector<std::vector<std::string>> parse_records(const std::string& text, const std::string& origin) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  auto end_field = [&] {
    record.push_back(was_quoted ? field : trim(field));
    field.clear();
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"' && trim(field).empty()) {
      field.clear();
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\n') {
      end_record();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (quoted) throw std::runtime_error(origin + ": unterminated quoted field");
  if (!field.empty() || !record.empty() || was_quoted) end_record();
  return records;
}

std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (lower == "inf" || lower == "+inf" || lower == "infinity") return std::numeric_limits<double>::infinity();
  if (lower == "-inf" || lower == "-infinity") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++begin;
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  return value;
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::invalid_argument("CSV has no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto records = parse_records(buffer.str(), path.string());
  if (records.empty()) throw std::runtime_error(path.string() + ": missing header row");
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(r) + " has " +
                               std::to_string(records[r].size()) + " fields, header has " +
                               std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

std::string to_csv_text(const CsvTable& table) {
  std::string out;
  auto append_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += quote_if_needed(row[i]);
    }
    out += '\n';
  };
  append_row(table.header);
  for (const auto& row : table.rows) append_row(row);
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<double> read_series_csv(const std::filesystem::path& path, std::string_view column) {
  const CsvTable table = read_csv(path);
  const std::size_t col = table.column(column);
  std::vector<double> x;
  x.reserve(table.rows.size());
  for (const auto& row : table.rows) x.push_back(parse_double(row[col]));
  return x;
}

void write_series_csv(const std::filesystem::path& path, const std::vector<double>& x, std::string_view column) {
  CsvTable table{{std::string(column)}, {}};
  for (double v : x) table.rows.push_back({format_double(v)});
  write_file_atomic(path, to_csv_text(table));
}

RawRegressionData read_regression_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t ycol = table.column("y");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto p = static_cast<Eigen::Index>(table.header.size()) - 1;
  if (n < 1 || p < 1) throw ShapeError(path.string() + ": need at least one row and one covariate");
  RawRegressionData out{Eigen::MatrixXd(n, p), Eigen::VectorXd(n), {}};
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != ycol) out.names.push_back(table.header[c]);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double value = parse_double(row[c]);
      if (c == ycol) {
        out.y[i] = value;
      } else {
        out.X(i, j++) = value;
      }
    }
  }
  return out;
}

}  // namespace cposterior
