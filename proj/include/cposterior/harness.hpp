#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cposterior/csv.hpp"

namespace cposterior {

inline constexpr const char* kLibraryVersion = "0.1.0";

enum class ExperimentKind { kBernoulli, kAr, kVarsel, kMixture, kValidate };

std::string to_string(ExperimentKind kind);
ExperimentKind kind_from_string(const std::string& name);

/// Declarative experiment description.
///
/// JSON schema (all keys optional unless noted):
///   kind         "bernoulli" | "ar" | "varsel" | "mixture" | "validate"
///   seed         unsigned integer (required)
///   alpha        list of positive numbers or "inf"
///   n            list of positive integers
///   replicates   positive integer (default 1)
///   sweeps       positive integer (samplers)
///   burnin       integer < sweeps (samplers)
///   out          output directory
///   save_traces  bool
///   params       object of kind-specific model and prior settings
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kBernoulli;
  std::optional<std::uint64_t> seed;
  std::vector<double> alphas;
  std::vector<std::uint64_t> ns;
  std::uint64_t replicates = 1;
  std::uint64_t sweeps = 0;
  std::uint64_t burnin = 0;
  std::string out_dir;
  bool save_traces = false;
  nlohmann::json params = nlohmann::json::object();

  /// Populates defaults for any unset grid or parameter of the given kind.
  static ExperimentSpec defaults(ExperimentKind kind);
};

/// Reads a spec object, or the "spec" member of a manifest.
ExperimentSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ExperimentSpec& spec);

class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Every violated field, empty when the experiment description is valid.
std::vector<std::string> spec_problems(const ExperimentSpec& spec);
void validate_spec(const ExperimentSpec& spec);

using FieldValue = std::variant<std::int64_t, double, std::string>;

struct Record {
  std::vector<std::pair<std::string, FieldValue>> fields;

  void add(std::string name, FieldValue value) { fields.emplace_back(std::move(name), std::move(value)); }
};

struct CellCoordinates {
  std::size_t index = 0;
  double alpha = 0.0;
  std::uint64_t n = 0;
  std::uint64_t replicate = 0;
  std::optional<std::uint64_t> k;  // validate experiments only
  std::uint64_t data_stream = 0;
  std::uint64_t chain_stream = 0;
};

struct CellResult {
  CellCoordinates where;
  bool ok = false;
  std::string error;
  Record record;
  std::map<std::string, CsvTable> tables;  // raw per-cell tables keyed by file stem
};

struct ResultBundle {
  ExperimentSpec spec;
  std::vector<CellResult> cells;

  bool all_ok() const;
};

/// Enumerates alpha x n (x k) x replicate cells in a fixed order.
std::vector<CellCoordinates> enumerate_cells(const ExperimentSpec& spec);

struct RunOptions {
  unsigned jobs = 0;  // 0 means hardware concurrency
  std::optional<std::size_t> only_cell;
};

/// Runs every cell on a bounded worker pool. When spec.out_dir is set, each
/// cell's record and raw tables are written atomically under cells/ as soon as
/// the cell completes.
ResultBundle run(const ExperimentSpec& spec, const RunOptions& options = {});

enum class OutputFormat { kCsv, kJson };

/// Writes summary.{csv,json}, aggregate.csv and manifest.json into out_dir.
void emit(const ResultBundle& bundle, OutputFormat format, const std::filesystem::path& out_dir);

/// The header-plus-rows summary table used by emit.
CsvTable summary_table(const ResultBundle& bundle);

/// Means of every numeric record field over replicates, grouped by alpha, n and k.
CsvTable aggregate_table(const ResultBundle& bundle);

nlohmann::json manifest_json(const ResultBundle& bundle);

}  // namespace cposterior
