#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cposterior/csv.hpp"
#include "cposterior/harness.hpp"

namespace {

using cposterior::ExperimentKind;
using cposterior::ExperimentSpec;
using nlohmann::json;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned jobs = 0;
  bool save_traces = false;
  std::vector<std::string> alphas;
  std::vector<std::uint64_t> ns;
  std::optional<std::uint64_t> replicates;
  std::optional<std::uint64_t> sweeps;
  std::optional<std::uint64_t> burnin;
  std::optional<std::size_t> cell;
  std::string format = "csv";
  std::vector<std::string> params;  // key=json-value
};

struct KindOptions {
  std::map<std::string, std::optional<double>> reals;
  std::map<std::string, std::optional<std::uint64_t>> counts;
  std::map<std::string, std::optional<std::string>> texts;
  std::map<std::string, std::vector<double>> real_lists;
  std::map<std::string, std::vector<std::uint64_t>> count_lists;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON experiment spec (or a manifest.json from an earlier run)");
  app->add_option("--seed", f.seed, "Root seed (required here or in the config)");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--jobs", f.jobs, "Worker threads (default: number of processors)");
  app->add_flag("--save-traces", f.save_traces, "Write raw sampler traces per cell");
  app->add_option("--alpha", f.alphas, "Coarsening levels; 'inf' gives the standard posterior")->delimiter(',');
  app->add_option("--n", f.ns, "Sample sizes")->delimiter(',');
  app->add_option("--replicates", f.replicates, "Replicates per (alpha, n)");
  app->add_option("--cell", f.cell, "Run only the cell with this index");
  app->add_option("--format", f.format, "Summary format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--param", f.params, "Override params.KEY with a JSON value, as KEY=VALUE");
}

void add_sampler(CLI::App* app, CommonFlags& f) {
  app->add_option("--sweeps", f.sweeps, "Total sweeps per chain");
  app->add_option("--burnin", f.burnin, "Discarded initial sweeps");
}

int execute(ExperimentKind kind, const CommonFlags& f, const KindOptions& k) {
  ExperimentSpec spec = ExperimentSpec::defaults(kind);
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw std::runtime_error("cannot open config " + f.config);
    json j = json::parse(in);
    json& body = j.contains("spec") && j["spec"].is_object() ? j["spec"] : j;
    if (!body.contains("kind")) body["kind"] = cposterior::to_string(kind);
    spec = cposterior::spec_from_json(j);
    if (spec.kind != kind) {
      throw cposterior::ValidationError({"kind: config describes '" + cposterior::to_string(spec.kind) +
                                         "' but the subcommand is '" + cposterior::to_string(kind) + "'"});
    }
  }

  std::vector<std::string> problems;
  if (f.seed) spec.seed = f.seed;
  if (!f.out.empty()) spec.out_dir = f.out;
  if (f.save_traces) spec.save_traces = true;
  if (!f.alphas.empty()) {
    spec.alphas.clear();
    for (const auto& a : f.alphas) {
      try {
        spec.alphas.push_back(cposterior::parse_double(a));
      } catch (const std::exception&) {
        problems.push_back("alpha: '" + a + "' is not a number or 'inf'");
      }
    }
  }
  if (!f.ns.empty()) spec.ns = f.ns;
  if (f.replicates) spec.replicates = *f.replicates;
  if (f.sweeps) spec.sweeps = *f.sweeps;
  if (f.burnin) spec.burnin = *f.burnin;
  for (const auto& [key, v] : k.reals) {
    if (v) spec.params[key] = *v;
  }
  for (const auto& [key, v] : k.counts) {
    if (v) spec.params[key] = *v;
  }
  for (const auto& [key, v] : k.texts) {
    if (v) spec.params[key] = *v;
  }
  for (const auto& [key, v] : k.real_lists) {
    if (!v.empty()) spec.params[key] = v;
  }
  for (const auto& [key, v] : k.count_lists) {
    if (!v.empty()) spec.params[key] = v;
  }
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      problems.push_back("param: '" + kv + "' is not KEY=VALUE");
      continue;
    }
    const std::string value = kv.substr(eq + 1);
    json parsed = json::parse(value, nullptr, false);
    spec.params[kv.substr(0, eq)] = parsed.is_discarded() ? json(value) : parsed;
  }
  if (spec.out_dir.empty()) problems.push_back("out: required (use --out or the config's \"out\")");

  auto spec_issues = cposterior::spec_problems(spec);
  problems.insert(problems.end(), spec_issues.begin(), spec_issues.end());
  if (!problems.empty()) throw cposterior::ValidationError(std::move(problems));

  cposterior::RunOptions options;
  options.jobs = f.jobs;
  options.only_cell = f.cell;
  const cposterior::ResultBundle bundle = cposterior::run(spec, options);
  cposterior::emit(bundle, f.format == "json" ? cposterior::OutputFormat::kJson : cposterior::OutputFormat::kCsv,
                   spec.out_dir);

  std::size_t failed = 0;
  for (const auto& cell : bundle.cells) {
    if (!cell.ok) {
      ++failed;
      std::cerr << "cell " << cell.where.index << " failed: " << cell.error << "\n";
    }
  }
  std::cout << bundle.cells.size() - failed << " of " << bundle.cells.size() << " cells completed; results in "
            << spec.out_dir << "\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarsened-posterior experiments"};
  app.require_subcommand(1);

  struct Sub {
    ExperimentKind kind;
    CLI::App* app;
    CommonFlags flags;
    KindOptions opts;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  auto make = [&](ExperimentKind kind, const std::string& help) -> Sub& {
    auto sub = std::make_unique<Sub>();
    sub->kind = kind;
    sub->app = app.add_subcommand(cposterior::to_string(kind), help);
    add_common(sub->app, sub->flags);
    subs.push_back(std::move(sub));
    return *subs.back();
  };

  Sub& bern = make(ExperimentKind::kBernoulli, "Toy Bernoulli test of H0: theta = 1/2");
  bern.app->add_option("--theta", bern.opts.reals["theta"], "Data-generating success probability");

  Sub& ar = make(ExperimentKind::kAr, "Autoregressive order selection");
  ar.app->add_option("--kmax", ar.opts.counts["kmax"], "Largest order considered");
  ar.app->add_option("--sigma", ar.opts.reals["sigma"], "Known noise standard deviation");
  ar.app->add_option("--sigma0", ar.opts.reals["sigma0"], "Coefficient prior standard deviation");
  ar.app->add_option("--theta", ar.opts.real_lists["theta"], "Generator coefficients")->delimiter(',');
  ar.app->add_option("--noise-sd", ar.opts.reals["noise_sd"], "Generator noise standard deviation");
  ar.app->add_option("--sin-amp", ar.opts.reals["sin_amp"], "Generator sinusoid amplitude");
  ar.app->add_option("--data", ar.opts.texts["data"], "CSV with header x; replaces the generator");

  Sub& vs = make(ExperimentKind::kVarsel, "Spike-and-slab variable selection");
  add_sampler(vs.app, vs.flags);
  vs.app->add_option("--data", vs.opts.texts["data"], "CSV with covariate columns and y; replaces the generator");
  vs.app->add_option("--r", vs.opts.reals["r"], "Beta-binomial prior parameter r");
  vs.app->add_option("--s", vs.opts.reals["s"], "Beta-binomial prior parameter s (default 2p)");
  vs.app->add_option("--L0", vs.opts.reals["L0"], "Slab precision");
  vs.app->add_option("--a", vs.opts.reals["a"], "Noise precision prior shape");
  vs.app->add_option("--b", vs.opts.reals["b"], "Noise precision prior rate");

  Sub& mix = make(ExperimentKind::kMixture, "Gaussian mixture with an unknown number of components");
  add_sampler(mix.app, mix.flags);
  mix.app->add_option("--m", mix.opts.counts["m"], "Maximum number of components");
  mix.app->add_option("--priors", mix.opts.texts["priors"], "default | data");
  mix.app->add_option("--data", mix.opts.texts["data"], "CSV with header x; replaces the generator");
  mix.app->add_option("--overlay-states", mix.opts.count_lists["overlay_states"],
                      "Retained state indices to export as density overlays")
      ->delimiter(',');
  mix.app->add_option("--step-mu", mix.opts.reals["step_mu"], "Random-walk scale for mu");
  mix.app->add_option("--step-log-lambda", mix.opts.reals["step_log_lambda"], "Random-walk scale for log lambda");
  mix.app->add_option("--step-log-v", mix.opts.reals["step_log_v"], "Random-walk scale for log v");

  Sub& val = make(ExperimentKind::kValidate, "Monte-Carlo check of the small-sample correction");
  val.app->add_option("--k", val.opts.count_lists["k"], "Simplex dimensions")->delimiter(',');
  val.app->add_option("--draws", val.opts.counts["draws"], "Monte-Carlo draws per cell");
  val.app->add_option("--tilt", val.opts.reals["tilt"], "Shift of mass from the second to the first category");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const auto& sub : subs) {
    if (!sub->app->parsed()) continue;
    try {
      return execute(sub->kind, sub->flags, sub->opts);
    } catch (const cposterior::ValidationError& e) {
      std::cerr << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  return 2;
}
