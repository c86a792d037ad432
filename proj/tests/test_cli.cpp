#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cposterior/csv.hpp"
#include "cposterior/harness.hpp"
#include "cposterior/mixture.hpp"

using namespace cposterior;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cposterior_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + CPOSTERIOR_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentSpec small_mixture_spec(const fs::path& out) {
  ExperimentSpec spec = ExperimentSpec::defaults(ExperimentKind::kMixture);
  spec.seed = 17;
  spec.alphas = {100.0, std::numeric_limits<double>::infinity()};
  spec.ns = {60};
  spec.replicates = 2;
  spec.sweeps = 300;
  spec.burnin = 100;
  spec.params["m"] = 4;
  spec.out_dir = out.string();
  return spec;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  for (double v : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-310, 1e300}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(std::isinf(parse_double("Infinity")));
  CHECK(parse_double("-INF") < 0.0);
  CHECK(parse_double("+inf") > 0.0);
  CHECK_THROWS(parse_double("1.5x"));
  CHECK_THROWS(parse_double(""));
}

TEST_CASE("csv tables round-trip through files") {
  const fs::path dir = scratch_dir("csv");
  CsvTable t{{"name", "value"}, {{"a", "1.5"}, {"b, \"quoted\"", "inf"}, {"two\nlines", ""}}};
  write_file_atomic(dir / "t.csv", to_csv_text(t));
  CHECK_FALSE(fs::exists(dir / "t.csv.tmp"));
  const CsvTable back = read_csv(dir / "t.csv");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("value") == 1);
  CHECK_THROWS(back.column("missing"));

  write_series_csv(dir / "x.csv", {1.0, -2.5, 0.125});
  CHECK(read_series_csv(dir / "x.csv") == std::vector<double>{1.0, -2.5, 0.125});

  std::ofstream(dir / "reg.csv") << "age,y,dose\n1,2,3\n4,5,6\n";
  const RawRegressionData reg = read_regression_csv(dir / "reg.csv");
  CHECK(reg.names == std::vector<std::string>{"age", "dose"});
  CHECK(reg.X(1, 1) == 6.0);
  CHECK(reg.y[0] == 2.0);
}

TEST_CASE("spec validation lists every problem") {
  ExperimentSpec spec = ExperimentSpec::defaults(ExperimentKind::kVarsel);
  spec.alphas.clear();
  spec.burnin = spec.sweeps;
  const std::vector<std::string> problems = spec_problems(spec);
  auto mentions = [&](const std::string& key) {
    return std::any_of(problems.begin(), problems.end(), [&](const std::string& p) { return p.find(key) != std::string::npos; });
  };
  CHECK(problems.size() >= 3);
  CHECK(mentions("seed"));
  CHECK(mentions("alpha"));
  CHECK(mentions("burnin"));
  CHECK_THROWS_AS(validate_spec(spec), ValidationError);

  spec.seed = 1;
  spec.alphas = {-1.0};
  spec.burnin = 0;
  CHECK(spec_problems(spec).size() == 1);
  spec.alphas = {50.0};
  CHECK(spec_problems(spec).empty());
  CHECK_THROWS_AS(run(ExperimentSpec::defaults(ExperimentKind::kBernoulli)), ValidationError);
}

TEST_CASE("specs round-trip through json") {
  const nlohmann::json j = nlohmann::json::parse(R"({"kind": "ar", "seed": 5, "alpha": [500, "inf"], "n": [200],
                                                     "replicates": 2, "params": {"kmax": 6}})");
  const ExperimentSpec spec = spec_from_json(j);
  CHECK(spec.kind == ExperimentKind::kAr);
  CHECK(*spec.seed == 5);
  CHECK(std::isinf(spec.alphas[1]));
  CHECK(spec.params["kmax"] == 6);
  CHECK(spec.params["sigma"] == 1.0);
  const ExperimentSpec again = spec_from_json(spec_to_json(spec));
  CHECK(spec_to_json(again) == spec_to_json(spec));
  const ExperimentSpec from_manifest = spec_from_json(nlohmann::json{{"spec", spec_to_json(spec)}});
  CHECK(spec_to_json(from_manifest) == spec_to_json(spec));
  CHECK(enumerate_cells(spec).size() == 4);
}

TEST_CASE("single-cell run writes a one-row summary and a manifest") {
  const fs::path dir = scratch_dir("single");
  ExperimentSpec spec = ExperimentSpec::defaults(ExperimentKind::kBernoulli);
  spec.seed = 3;
  spec.alphas = {1250.0};
  spec.ns = {1000};
  spec.replicates = 1;
  spec.out_dir = dir.string();
  const ResultBundle bundle = run(spec, {1, std::nullopt});
  REQUIRE(bundle.all_ok());
  emit(bundle, OutputFormat::kCsv, dir);
  const CsvTable summary = read_csv(dir / "summary.csv");
  REQUIRE(summary.rows.size() == 1);
  CHECK(summary.rows[0][summary.column("status")] == "ok");
  CHECK(summary.rows[0][summary.column("seed")] == "3");
  const double pr_exact = parse_double(summary.rows[0][summary.column("pr_h0_exact")]);
  CHECK(pr_exact >= 0.0);
  CHECK(pr_exact <= 1.0);
  const nlohmann::json manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["library"] == "cposterior");
  CHECK(manifest["version"] == kLibraryVersion);
  CHECK(manifest["cells"].size() == 1);
  CHECK(manifest["cells"][0]["chain_stream"] == bundle.cells[0].where.chain_stream);
  CHECK(fs::exists(dir / "cells" / "cell_00000" / "record.csv"));
  CHECK(fs::exists(dir / "aggregate.csv"));

  emit(bundle, OutputFormat::kJson, dir);
  const nlohmann::json rows = nlohmann::json::parse(slurp(dir / "summary.json"));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["pr_h0_exact"].get<double>() == pr_exact);
}

TEST_CASE("failing cells are reported without stopping the run") {
  const fs::path dir = scratch_dir("failing");
  write_series_csv(dir / "short.csv", {0.1, 0.2, 0.3, 0.4, 0.5});
  ExperimentSpec spec = small_mixture_spec(dir);
  spec.ns = {3, 60};
  spec.params["data"] = (dir / "short.csv").string();
  const ResultBundle bundle = run(spec, {1, std::nullopt});
  CHECK_FALSE(bundle.all_ok());
  for (const CellResult& c : bundle.cells) {
    CHECK(c.ok == (c.where.n == 3));
    if (!c.ok) CHECK(c.error.find("exceeds") != std::string::npos);
  }
  emit(bundle, OutputFormat::kCsv, dir);
  const CsvTable summary = read_csv(dir / "summary.csv");
  CHECK(summary.rows.size() == bundle.cells.size());
  CHECK(summary.rows[0][summary.column("status")] == "ok");
  CHECK(summary.rows[2][summary.column("status")] == "failed");
  CHECK(summary.rows[2][summary.column("error")] == bundle.cells[2].error);
}

TEST_CASE("runs are byte-identical across reruns and worker counts") {
  const fs::path one = scratch_dir("jobs1");
  const fs::path two = scratch_dir("jobs2");
  const fs::path again = scratch_dir("jobs1_again");
  ExperimentSpec spec = small_mixture_spec(one);
  spec.save_traces = true;
  emit(run(spec, {1, std::nullopt}), OutputFormat::kCsv, one);
  spec.out_dir = two.string();
  emit(run(spec, {2, std::nullopt}), OutputFormat::kCsv, two);
  spec.out_dir = again.string();
  emit(run(spec, {1, std::nullopt}), OutputFormat::kCsv, again);

  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(one)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), one);
    ++compared;
    if (rel == "manifest.json") {
      // The manifest records the output directory, which differs between the three runs.
      auto without_out = [](const fs::path& p) {
        nlohmann::json j = nlohmann::json::parse(slurp(p));
        j["spec"].erase("out");
        return j.dump();
      };
      CHECK(without_out(entry.path()) == without_out(two / rel));
      CHECK(without_out(entry.path()) == without_out(again / rel));
      continue;
    }
    const std::string text = slurp(entry.path());
    CHECK_MESSAGE(text == slurp(two / rel), rel.string());
    CHECK_MESSAGE(text == slurp(again / rel), rel.string());
  }
  // summary, aggregate and manifest plus a record and a trace for each of four cells.
  CHECK(compared == 3 + 4 * 2);
}

TEST_CASE("a single cell reproduces its counterpart from the full run") {
  const fs::path full = scratch_dir("full");
  const fs::path only = scratch_dir("only");
  ExperimentSpec spec = small_mixture_spec(full);
  const ResultBundle all = run(spec, {1, std::nullopt});
  spec.out_dir = only.string();
  const ResultBundle one = run(spec, {1, std::size_t{3}});
  REQUIRE(one.cells.size() == 1);
  CHECK(one.cells[0].where.index == 3);
  CHECK(slurp(full / "cells" / "cell_00003" / "record.csv") == slurp(only / "cells" / "cell_00003" / "record.csv"));
  CHECK_THROWS_AS(run(spec, {1, std::size_t{99}}), ValidationError);
}

TEST_CASE("overlay tables match the overlay of the reconstructed chain state") {
  const fs::path dir = scratch_dir("overlay");
  ExperimentSpec spec = small_mixture_spec(dir);
  spec.alphas = {100.0};
  spec.replicates = 1;
  spec.params["overlay_states"] = {0, 150};
  spec.params["overlay_grid"] = {-8.0, 4.0, 25};
  const ResultBundle bundle = run(spec, {1, std::nullopt});
  REQUIRE(bundle.all_ok());
  const CellCoordinates& where = bundle.cells[0].where;

  RandomSource data_rng(*spec.seed, where.data_stream);
  const std::vector<double> x = generate_skew_mixture(where.n, data_rng);
  const MixturePriors priors = MixturePriors::defaults(4);
  const auto trace = run_mixture_chain(x, priors, CoarseningConfig(100.0), spec.sweeps, spec.burnin,
                                       RandomSource(*spec.seed, where.chain_stream));
  std::vector<double> grid;
  for (int g = 0; g < 25; ++g) grid.push_back(-8.0 + 12.0 * g / 24.0);
  for (std::size_t idx : {std::size_t{0}, std::size_t{150}}) {
    const DensityOverlay expected = density_overlay(trace.states[idx], priors.c, grid);
    const CsvTable table = read_csv(dir / "cells" / "cell_00000" / ("overlay_state_" + std::to_string(idx) + ".csv"));
    REQUIRE(table.rows.size() == grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      CHECK(parse_double(table.rows[g][table.column("total")]) == expected.total[g]);
      for (std::size_t i = 0; i < 4; ++i) {
        CHECK(parse_double(table.rows[g][table.column("comp_" + std::to_string(i + 1))]) == expected.components[i][g]);
      }
    }
  }
}

TEST_CASE("command line exit codes and outputs") {
  const fs::path dir = scratch_dir("binary");
  CHECK(run_cli("bernoulli --seed 2 --alpha 1250,inf --n 100,400 --replicates 2 --out " + (dir / "a").string()) == 0);
  CHECK(read_csv(dir / "a" / "summary.csv").rows.size() == 8);
  CHECK(run_cli("bernoulli --seed 2 --alpha 1250,inf --n 100,400 --replicates 2 --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "summary.csv") == slurp(dir / "b" / "summary.csv"));

  // Rerunning from a manifest reproduces the run.
  CHECK(run_cli("bernoulli --config " + (dir / "a" / "manifest.json").string() + " --out " + (dir / "c").string()) == 0);
  CHECK(slurp(dir / "a" / "summary.csv") == slurp(dir / "c" / "summary.csv"));

  CHECK(run_cli("bernoulli --alpha 1250 --n 100 --out " + (dir / "d").string()) == 2);
  CHECK(run_cli("bernoulli --seed 1 --alpha 0 --n 100 --out " + (dir / "d").string()) == 2);
  CHECK(run_cli("bernoulli --seed 1 --n 100") == 2);
  CHECK(run_cli("nonsense") == 2);
  write_series_csv(dir / "short.csv", {0.1, 0.2, 0.3});
  CHECK(run_cli("mixture --seed 1 --alpha 100 --n 2,50 --m 3 --sweeps 20 --burnin 5 --data " +
                (dir / "short.csv").string() + " --out " + (dir / "e").string()) == 1);
  CHECK(read_csv(dir / "e" / "summary.csv").rows.size() == 2);
  CHECK(run_cli("mixture --seed 1 --alpha 100 --n 50 --m 3 --sweeps 20 --burnin 5 --overlay-states 500 --out " +
                (dir / "g").string()) == 2);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("validate --seed 4 --alpha 10 --n 50 --k 2 --draws 2000 --format json --out " + (dir / "f").string()) ==
        0);
  CHECK(nlohmann::json::parse(slurp(dir / "f" / "summary.json")).size() == 1);
}
