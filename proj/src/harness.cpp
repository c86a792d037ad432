#include "cposterior/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <functional>
#include <thread>
#include <tuple>

#include "cposterior/arorder.hpp"
#include "cposterior/coarsening.hpp"
#include "cposterior/distributions.hpp"
#include "cposterior/errors.hpp"
#include "cposterior/mixture.hpp"
#include "cposterior/random.hpp"
#include "cposterior/toy.hpp"
#include "cposterior/varsel.hpp"

namespace cposterior {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json alpha_to_json(double alpha) {
  if (std::isinf(alpha)) return "inf";
  return alpha;
}

std::string alpha_label(double alpha) { return std::isinf(alpha) ? "inf" : format_double(alpha); }

std::string cell_name(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return "cell_" + digits;
}

std::string field_to_text(const FieldValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&value)) return format_double(*d);
  return std::get<std::string>(value);
}

std::string json_escape(const std::string& s) { return json(s).dump(); }

std::string field_to_json_text(const FieldValue& value) {
  if (const auto* d = std::get_if<double>(&value)) {
    return std::isfinite(*d) ? format_double(*d) : json_escape(format_double(*d));
  }
  if (const auto* s = std::get_if<std::string>(&value)) return json_escape(*s);
  return field_to_text(value);
}

std::vector<double> linspace_from(const json& spec) {
  const double lo = spec.at(0).get<double>();
  const double hi = spec.at(1).get<double>();
  const auto points = spec.at(2).get<std::size_t>();
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return out;
}

// Parameter accessors -------------------------------------------------------

double param_double(const json& params, const char* key) { return params.at(key).get<double>(); }

std::vector<double> param_doubles(const json& params, const char* key) {
  return params.at(key).get<std::vector<double>>();
}

std::string data_path(const json& params) {
  if (!params.contains("data") || params["data"].is_null()) return {};
  return params["data"].get<std::string>();
}

// Validation helpers ---------------------------------------------------------

struct Checker {
  std::vector<std::string> problems;
  const json& params;

  void fail(const std::string& field, const std::string& why) { problems.push_back(field + ": " + why); }

  bool number(const char* key, double& out) {
    if (!params.contains(key)) {
      fail(std::string("params.") + key, "missing");
      return false;
    }
    if (!params[key].is_number()) {
      fail(std::string("params.") + key, "must be a number");
      return false;
    }
    out = params[key].get<double>();
    return true;
  }

  void positive(const char* key) {
    double v = 0.0;
    if (number(key, v) && !(v > 0.0 && std::isfinite(v))) fail(std::string("params.") + key, "must be positive and finite");
  }

  void nonnegative(const char* key) {
    double v = 0.0;
    if (number(key, v) && !(v >= 0.0 && std::isfinite(v))) fail(std::string("params.") + key, "must be >= 0");
  }

  void count(const char* key, double min_value) {
    double v = 0.0;
    if (number(key, v) && !(v >= min_value && v == std::floor(v))) {
      fail(std::string("params.") + key, "must be an integer >= " + format_double(min_value));
    }
  }

  void grid(const char* key) {
    if (!params.contains(key)) return;
    const json& g = params[key];
    if (!g.is_array() || g.size() != 3 || !g[0].is_number() || !g[1].is_number() || !g[2].is_number_integer() ||
        g[2].get<std::int64_t>() < 1 || !(g[0].get<double>() <= g[1].get<double>())) {
      fail(std::string("params.") + key, "must be [lo, hi, points] with lo <= hi and points >= 1");
    }
  }

  void number_list(const char* key) {
    if (!params.contains(key)) return;
    const json& v = params[key];
    bool ok = v.is_array();
    if (ok) {
      for (const auto& e : v) ok = ok && e.is_number() && std::isfinite(e.get<double>());
    }
    if (!ok) fail(std::string("params.") + key, "must be a list of finite numbers");
  }
};

bool is_sampler(ExperimentKind kind) { return kind == ExperimentKind::kVarsel || kind == ExperimentKind::kMixture; }

// Per-cell drivers -----------------------------------------------------------

struct CellContext {
  const ExperimentSpec& spec;
  const CellCoordinates& where;
  RandomSource data_rng;
  RandomSource chain_rng;
  CoarseningConfig cfg;
};

void run_bernoulli_cell(CellContext& ctx, CellResult& out) {
  const double theta = param_double(ctx.spec.params, "theta");
  std::uint64_t successes = 0;
  for (std::uint64_t i = 0; i < ctx.where.n; ++i) successes += draw_bernoulli(ctx.data_rng, theta) ? 1 : 0;
  const double xbar = static_cast<double>(successes) / static_cast<double>(ctx.where.n);
  out.record.add("successes", static_cast<std::int64_t>(successes));
  out.record.add("xbar", xbar);
  out.record.add("pr_h0_standard", toy_standard_posterior(ctx.where.n, xbar));
  out.record.add("pr_h0_exact", toy_exact_cposterior(ctx.where.n, xbar, ctx.cfg));
  out.record.add("pr_h0_approx", toy_approx_cposterior(ctx.where.n, xbar, ctx.cfg));
}

std::vector<double> load_or_generate_series(CellContext& ctx, const std::function<std::vector<double>(std::size_t)>& gen,
                                            const char* what) {
  const std::string path = data_path(ctx.spec.params);
  if (path.empty()) return gen(ctx.where.n);
  std::vector<double> x = read_series_csv(path);
  if (ctx.where.n == 0) return x;
  if (ctx.where.n > x.size()) {
    throw UsageError(std::string(what) + ": n exceeds the " + std::to_string(x.size()) + " rows in " + path);
  }
  x.resize(ctx.where.n);
  return x;
}

void run_ar_cell(CellContext& ctx, CellResult& out) {
  const json& p = ctx.spec.params;
  const auto kmax = p.at("kmax").get<std::size_t>();
  const std::vector<double> x = load_or_generate_series(
      ctx,
      [&](std::size_t n) {
        const std::vector<double> theta = param_doubles(p, "theta");
        return generate_misspec_ar(n, theta, param_double(p, "noise_sd"), param_double(p, "sin_amp"), ctx.data_rng);
      },
      "ar");
  const OrderPosterior post =
      cposterior_over_orders(x, kmax, param_double(p, "sigma"), param_double(p, "sigma0"), ctx.cfg);
  const std::size_t mode = post.posterior.argmax();
  out.record.add("rows", static_cast<std::int64_t>(x.size()));
  out.record.add("k_mode", static_cast<std::int64_t>(mode));
  out.record.add("mass_at_mode", post.posterior[mode]);
  for (std::size_t k = 0; k <= kmax; ++k) out.record.add("pk_" + std::to_string(k), post.posterior[k]);

  CsvTable orders{{"k", "log_marginal", "posterior"}, {}};
  for (std::size_t k = 0; k <= kmax; ++k) {
    orders.rows.push_back({std::to_string(k), format_double(post.log_marginal[k]), format_double(post.posterior[k])});
  }
  out.tables.emplace("orders", std::move(orders));
}

RegressionDataset varsel_dataset(CellContext& ctx) {
  const std::string path = data_path(ctx.spec.params);
  if (path.empty()) return generate_varsel_data(ctx.where.n, ctx.data_rng);
  RawRegressionData raw = read_regression_csv(path);
  if (ctx.where.n != 0) {
    if (ctx.where.n > static_cast<std::uint64_t>(raw.X.rows())) {
      throw UsageError("varsel: n exceeds the " + std::to_string(raw.X.rows()) + " rows in " + path);
    }
    const auto rows = static_cast<Eigen::Index>(ctx.where.n);
    raw.X.conservativeResize(rows, Eigen::NoChange);
    raw.y.conservativeResize(rows);
  }
  return standardize_dataset(raw.X, raw.y, raw.names);
}

VarselPriors varsel_priors(const json& p, Eigen::Index dim) {
  VarselPriors priors = VarselPriors::defaults_for(dim);
  if (p.contains("r")) priors.r = p["r"].get<double>();
  if (p.contains("s") && !p["s"].is_null()) priors.s = p["s"].get<double>();
  if (p.contains("L0")) priors.L0 = p["L0"].get<double>();
  if (p.contains("a")) priors.a = p["a"].get<double>();
  if (p.contains("b")) priors.b = p["b"].get<double>();
  priors.validate();
  return priors;
}

void run_varsel_cell(CellContext& ctx, CellResult& out) {
  const json& p = ctx.spec.params;
  const RegressionDataset data = varsel_dataset(ctx);
  const VarselPriors priors = varsel_priors(p, data.p());
  const ChainTrace<VarselState> trace =
      run_varsel_chain(data, priors, ctx.cfg, ctx.spec.sweeps, ctx.spec.burnin, ctx.chain_rng);
  const std::vector<double> grid = linspace_from(p.at("cdf_grid"));
  const TraceSummary summary = trace_summaries(trace, grid);

  std::vector<std::string> names = data.names;
  for (auto j = static_cast<Eigen::Index>(names.size()); j < data.p(); ++j) names.push_back("beta" + std::to_string(j + 1));

  out.record.add("rows", static_cast<std::int64_t>(data.n()));
  out.record.add("k_mode", static_cast<std::int64_t>(summary.k_mode()));
  for (std::size_t k = 0; k < summary.k_pmf.size(); ++k) out.record.add("pk_" + std::to_string(k), summary.k_pmf[k]);
  for (std::size_t j = 0; j < summary.coefficients.size(); ++j) {
    const CoefficientSummary& cs = summary.coefficients[j];
    out.record.add("incl_" + names[j], cs.inclusion);
    out.record.add("mean_" + names[j], cs.mean);
    out.record.add("q025_" + names[j], cs.q025);
    out.record.add("median_" + names[j], cs.median);
    out.record.add("q975_" + names[j], cs.q975);
  }

  CsvTable cdf{{"grid"}, {}};
  for (const auto& name : names) cdf.header.push_back(name);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<std::string> row{format_double(grid[g])};
    for (const auto& cs : summary.coefficients) row.push_back(format_double(cs.cdf[g]));
    cdf.rows.push_back(std::move(row));
  }
  out.tables.emplace("cdf", std::move(cdf));

  if (ctx.spec.save_traces) {
    CsvTable tr{{"sweep", "lambda"}, {}};
    for (const auto& name : names) tr.header.push_back(name);
    for (std::size_t t = 0; t < trace.size(); ++t) {
      const VarselState& st = trace.states[t];
      std::vector<std::string> row{std::to_string(trace.burnin + t + 1), format_double(st.lambda)};
      for (Eigen::Index j = 0; j < st.beta.size(); ++j) row.push_back(format_double(st.beta[j]));
      tr.rows.push_back(std::move(row));
    }
    out.tables.emplace("trace", std::move(tr));
  }
}

MixturePriors mixture_priors(const json& p, std::span<const double> x) {
  const auto m = p.at("m").get<std::size_t>();
  const std::string mode = p.value("priors", std::string("default"));
  MixturePriors priors = mode == "data" ? data_dependent_priors(x, m) : MixturePriors::defaults(m);
  if (p.contains("a")) priors.a = p["a"].get<double>();
  if (p.contains("b")) priors.b = p["b"].get<double>();
  if (p.contains("c")) priors.c = p["c"].get<double>();
  if (p.contains("mu_mean")) priors.mu_mean = p["mu_mean"].get<double>();
  if (p.contains("mu_sd")) priors.mu_sd = p["mu_sd"].get<double>();
  if (p.contains("log_lambda_mean")) priors.log_lambda_mean = p["log_lambda_mean"].get<double>();
  if (p.contains("log_lambda_sd")) priors.log_lambda_sd = p["log_lambda_sd"].get<double>();
  priors.validate();
  return priors;
}

void run_mixture_cell(CellContext& ctx, CellResult& out) {
  const json& p = ctx.spec.params;
  const std::vector<double> x =
      load_or_generate_series(ctx, [&](std::size_t n) { return generate_skew_mixture(n, ctx.data_rng); }, "mixture");
  const MixturePriors priors = mixture_priors(p, x);
  StepSizes steps;
  steps.mu = p.value("step_mu", steps.mu);
  steps.log_lambda = p.value("step_log_lambda", steps.log_lambda);
  steps.log_v = p.value("step_log_v", steps.log_v);

  MixtureChainStats stats;
  const ChainTrace<MixtureState> trace =
      run_mixture_chain(x, priors, ctx.cfg, ctx.spec.sweeps, ctx.spec.burnin, ctx.chain_rng, steps, &stats);
  const SimplexVector pk = posterior_on_k(trace, priors.c);

  out.record.add("rows", static_cast<std::int64_t>(x.size()));
  out.record.add("k_mode", static_cast<std::int64_t>(pk.argmax() + 1));
  for (std::size_t k = 1; k <= pk.size(); ++k) out.record.add("pk_" + std::to_string(k), pk[k - 1]);
  out.record.add("accept_mu_lambda", stats.mu_lambda_acceptance);
  out.record.add("accept_v", stats.v_acceptance);

  if (p.contains("overlay_states") && !p["overlay_states"].empty()) {
    const std::vector<double> grid = linspace_from(p.at("overlay_grid"));
    for (const auto& idx_json : p["overlay_states"]) {
      const auto idx = idx_json.get<std::size_t>();
      if (idx >= trace.size()) {
        throw UsageError("mixture: overlay state " + std::to_string(idx) + " exceeds the " +
                         std::to_string(trace.size()) + " retained states");
      }
      const DensityOverlay overlay = density_overlay(trace.states[idx], priors.c, grid);
      CsvTable table{{"x", "total"}, {}};
      for (std::size_t i = 0; i < overlay.components.size(); ++i) table.header.push_back("comp_" + std::to_string(i + 1));
      for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<std::string> row{format_double(grid[g]), format_double(overlay.total[g])};
        for (const auto& comp : overlay.components) row.push_back(format_double(comp[g]));
        table.rows.push_back(std::move(row));
      }
      out.tables.emplace("overlay_state_" + std::to_string(idx), std::move(table));
    }
  }

  if (ctx.spec.save_traces) {
    CsvTable tr{{"sweep", "k"}, {}};
    for (std::size_t i = 1; i <= priors.m; ++i) {
      tr.header.push_back("v_" + std::to_string(i));
      tr.header.push_back("mu_" + std::to_string(i));
      tr.header.push_back("lambda_" + std::to_string(i));
    }
    for (std::size_t t = 0; t < trace.size(); ++t) {
      const MixtureState& st = trace.states[t];
      std::vector<std::string> row{std::to_string(trace.burnin + t + 1), std::to_string(st.num_active(priors.c))};
      for (std::size_t i = 0; i < st.size(); ++i) {
        row.push_back(format_double(st.v[i]));
        row.push_back(format_double(st.mu[i]));
        row.push_back(format_double(st.lambda[i]));
      }
      tr.rows.push_back(std::move(row));
    }
    out.tables.emplace("trace", std::move(tr));
  }
}

SimplexVector tilted_uniform(std::size_t k, double tilt) {
  std::vector<double> w(k, 1.0);
  w[0] += tilt;
  w[1] -= tilt;
  return SimplexVector::normalized(std::move(w));
}

void run_validate_cell(CellContext& ctx, CellResult& out) {
  const json& p = ctx.spec.params;
  const std::size_t k = *ctx.where.k;
  const SimplexVector s = SimplexVector::uniform(k);
  const SimplexVector target = tilted_uniform(k, p.value("tilt", 0.0));
  const auto draws = p.at("draws").get<std::uint64_t>();
  const McEstimate mc = small_sample_lhs_mc(target, s, ctx.where.n, ctx.cfg, draws, ctx.chain_rng);
  const double rhs = small_sample_rhs(target, s, ctx.where.n, ctx.cfg);
  const double tolerance = std::max(3.0 * mc.std_error, 0.15 * rhs);
  out.record.add("draws", static_cast<std::int64_t>(draws));
  out.record.add("mc_estimate", mc.estimate);
  out.record.add("std_error", mc.std_error);
  out.record.add("rhs", rhs);
  out.record.add("relative_difference", (mc.estimate - rhs) / rhs);
  out.record.add("within_tolerance", static_cast<std::int64_t>(std::abs(mc.estimate - rhs) <= tolerance ? 1 : 0));
}

void run_cell(const ExperimentSpec& spec, CellResult& out) {
  CellContext ctx{spec, out.where, RandomSource(*spec.seed, out.where.data_stream),
                  RandomSource(*spec.seed, out.where.chain_stream),
                  std::isinf(out.where.alpha) ? CoarseningConfig::standard() : CoarseningConfig(out.where.alpha)};
  switch (spec.kind) {
    case ExperimentKind::kBernoulli: run_bernoulli_cell(ctx, out); break;
    case ExperimentKind::kAr: run_ar_cell(ctx, out); break;
    case ExperimentKind::kVarsel: run_varsel_cell(ctx, out); break;
    case ExperimentKind::kMixture: run_mixture_cell(ctx, out); break;
    case ExperimentKind::kValidate: run_validate_cell(ctx, out); break;
  }
}

std::vector<std::pair<std::string, std::string>> provenance(const ExperimentSpec& spec, const CellResult& cell) {
  std::vector<std::pair<std::string, std::string>> cols{
      {"kind", to_string(spec.kind)},
      {"cell", std::to_string(cell.where.index)},
      {"alpha", alpha_label(cell.where.alpha)},
      {"n", std::to_string(cell.where.n)},
  };
  if (cell.where.k) cols.emplace_back("k", std::to_string(*cell.where.k));
  cols.emplace_back("replicate", std::to_string(cell.where.replicate));
  cols.emplace_back("seed", std::to_string(*spec.seed));
  cols.emplace_back("data_stream", std::to_string(cell.where.data_stream));
  cols.emplace_back("chain_stream", std::to_string(cell.where.chain_stream));
  cols.emplace_back("status", cell.ok ? "ok" : "failed");
  return cols;
}

CsvTable single_record_table(const ExperimentSpec& spec, const CellResult& cell) {
  CsvTable table;
  std::vector<std::string> row;
  for (auto& [name, value] : provenance(spec, cell)) {
    table.header.push_back(name);
    row.push_back(value);
  }
  for (const auto& [name, value] : cell.record.fields) {
    table.header.push_back(name);
    row.push_back(field_to_text(value));
  }
  table.rows.push_back(std::move(row));
  return table;
}

void write_cell_files(const ExperimentSpec& spec, const CellResult& cell) {
  const std::filesystem::path dir = std::filesystem::path(spec.out_dir) / "cells" / cell_name(cell.where.index);
  for (const auto& [stem, table] : cell.tables) write_file_atomic(dir / (stem + ".csv"), to_csv_text(table));
  write_file_atomic(dir / "record.csv", to_csv_text(single_record_table(spec, cell)));
}

const ExperimentSpec& require_valid(const ExperimentSpec& spec) {
  validate_spec(spec);
  return spec;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kBernoulli: return "bernoulli";
    case ExperimentKind::kAr: return "ar";
    case ExperimentKind::kVarsel: return "varsel";
    case ExperimentKind::kMixture: return "mixture";
    case ExperimentKind::kValidate: return "validate";
  }
  return "unknown";
}

ExperimentKind kind_from_string(const std::string& name) {
  for (auto kind : {ExperimentKind::kBernoulli, ExperimentKind::kAr, ExperimentKind::kVarsel, ExperimentKind::kMixture,
                    ExperimentKind::kValidate}) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError({"kind: unknown experiment kind '" + name + "'"});
}

ExperimentSpec ExperimentSpec::defaults(ExperimentKind kind) {
  ExperimentSpec spec;
  spec.kind = kind;
  switch (kind) {
    case ExperimentKind::kBernoulli:
      spec.alphas = {1250.0, kInf};
      spec.ns = {100, 200, 500, 1000, 2000, 5000, 10000};
      spec.replicates = 1000;
      spec.params = {{"theta", 0.51}};
      break;
    case ExperimentKind::kAr:
      spec.alphas = {500.0, kInf};
      spec.ns = {10000};
      spec.replicates = 5;
      spec.params = {{"kmax", 20}, {"sigma", 1.0}, {"sigma0", 1.0}, {"theta", default_misspec_theta()},
                     {"noise_sd", 1.0}, {"sin_amp", 0.5}, {"data", nullptr}};
      break;
    case ExperimentKind::kVarsel:
      spec.alphas = {50.0, kInf};
      spec.ns = {10000};
      spec.sweeps = 20000;
      spec.burnin = 2000;
      spec.params = {{"r", 1.0},   {"s", nullptr}, {"L0", 1.0},  {"a", 1.0},
                     {"b", 1.0},   {"data", nullptr}, {"cdf_grid", {-8.0, 8.0, 161}}};
      break;
    case ExperimentKind::kMixture:
      spec.alphas = {100.0, kInf};
      spec.ns = {100, 2000, 10000};
      spec.sweeps = 50000;
      spec.burnin = 5000;
      spec.params = {{"m", 10},
                     {"priors", "default"},
                     {"step_mu", 0.2},
                     {"step_log_lambda", 0.2},
                     {"step_log_v", 0.3},
                     {"data", nullptr},
                     {"overlay_states", json::array()},
                     {"overlay_grid", {-10.0, 6.0, 321}}};
      break;
    case ExperimentKind::kValidate:
      spec.alphas = {10.0, 50.0};
      spec.ns = {50, 200};
      spec.params = {{"k", {2, 3}}, {"draws", 100000}, {"tilt", 0.0}};
      break;
  }
  return spec;
}

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::invalid_argument([&] {
        std::string msg = "invalid experiment spec:";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

ExperimentSpec spec_from_json(const json& input) {
  const json& j = input.contains("spec") && input["spec"].is_object() ? input["spec"] : input;
  if (!j.is_object()) throw ValidationError({"spec: must be a JSON object"});
  if (!j.contains("kind") || !j["kind"].is_string()) throw ValidationError({"kind: missing or not a string"});
  ExperimentSpec spec = ExperimentSpec::defaults(kind_from_string(j["kind"].get<std::string>()));

  std::vector<std::string> problems;
  auto unsigned_field = [&](const char* key, std::uint64_t& out) {
    if (!j.contains(key)) return;
    if (j[key].is_number_unsigned()) {
      out = j[key].get<std::uint64_t>();
    } else {
      problems.push_back(std::string(key) + ": must be a non-negative integer");
    }
  };

  if (j.contains("seed")) {
    if (j["seed"].is_number_unsigned()) {
      spec.seed = j["seed"].get<std::uint64_t>();
    } else {
      problems.push_back("seed: must be a non-negative integer");
    }
  }
  if (j.contains("alpha")) {
    spec.alphas.clear();
    if (!j["alpha"].is_array()) {
      problems.push_back("alpha: must be a list");
    } else {
      for (const auto& a : j["alpha"]) {
        if (a.is_number()) {
          spec.alphas.push_back(a.get<double>());
        } else if (a.is_string() && a.get<std::string>() == "inf") {
          spec.alphas.push_back(kInf);
        } else {
          problems.push_back("alpha: entries must be numbers or \"inf\"");
        }
      }
    }
  }
  if (j.contains("n")) {
    spec.ns.clear();
    if (!j["n"].is_array()) {
      problems.push_back("n: must be a list");
    } else {
      for (const auto& n : j["n"]) {
        if (n.is_number_unsigned()) {
          spec.ns.push_back(n.get<std::uint64_t>());
        } else {
          problems.push_back("n: entries must be non-negative integers");
        }
      }
    }
  }
  unsigned_field("replicates", spec.replicates);
  unsigned_field("sweeps", spec.sweeps);
  unsigned_field("burnin", spec.burnin);
  if (j.contains("out")) {
    if (j["out"].is_string()) {
      spec.out_dir = j["out"].get<std::string>();
    } else {
      problems.push_back("out: must be a string");
    }
  }
  if (j.contains("save_traces")) {
    if (j["save_traces"].is_boolean()) {
      spec.save_traces = j["save_traces"].get<bool>();
    } else {
      problems.push_back("save_traces: must be a boolean");
    }
  }
  if (j.contains("params")) {
    if (j["params"].is_object()) {
      spec.params.merge_patch(j["params"]);
      for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
        if (it.value().is_null()) spec.params[it.key()] = nullptr;
      }
    } else {
      problems.push_back("params: must be an object");
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return spec;
}

json spec_to_json(const ExperimentSpec& spec) {
  json j;
  j["kind"] = to_string(spec.kind);
  j["seed"] = spec.seed ? json(*spec.seed) : json(nullptr);
  j["alpha"] = json::array();
  for (double a : spec.alphas) j["alpha"].push_back(alpha_to_json(a));
  j["n"] = spec.ns;
  j["replicates"] = spec.replicates;
  j["sweeps"] = spec.sweeps;
  j["burnin"] = spec.burnin;
  j["out"] = spec.out_dir;
  j["save_traces"] = spec.save_traces;
  j["params"] = spec.params;
  return j;
}

std::vector<std::string> spec_problems(const ExperimentSpec& spec) {
  Checker c{{}, spec.params};
  if (!spec.seed) c.fail("seed", "required");
  if (spec.alphas.empty()) c.fail("alpha", "list is empty");
  for (double a : spec.alphas) {
    if (!(a > 0.0)) c.fail("alpha", "entries must be > 0 (got " + format_double(a) + ")");
  }
  if (spec.ns.empty()) c.fail("n", "list is empty");
  const bool has_data = !data_path(spec.params).empty();
  for (auto n : spec.ns) {
    if (n == 0 && !has_data) c.fail("n", "entries must be >= 1 (0 selects all rows only with params.data)");
  }
  if (spec.replicates == 0) c.fail("replicates", "must be >= 1");
  if (is_sampler(spec.kind)) {
    if (spec.sweeps == 0) c.fail("sweeps", "must be >= 1");
    if (spec.burnin >= spec.sweeps) c.fail("burnin", "must be smaller than sweeps");
  }
  if (!spec.params.is_object()) {
    c.fail("params", "must be an object");
    return c.problems;
  }

  switch (spec.kind) {
    case ExperimentKind::kBernoulli: {
      double theta = 0.0;
      if (c.number("theta", theta) && !(theta >= 0.0 && theta <= 1.0)) c.fail("params.theta", "must lie in [0, 1]");
      break;
    }
    case ExperimentKind::kAr:
      c.count("kmax", 0);
      c.positive("sigma");
      c.positive("sigma0");
      c.nonnegative("noise_sd");
      {
        double amp = 0.0;
        if (c.number("sin_amp", amp) && !std::isfinite(amp)) c.fail("params.sin_amp", "must be finite");
      }
      if (!spec.params.contains("theta")) c.fail("params.theta", "missing");
      c.number_list("theta");
      break;
    case ExperimentKind::kVarsel:
      c.positive("r");
      if (spec.params.contains("s") && !spec.params["s"].is_null()) c.positive("s");
      c.positive("L0");
      c.positive("a");
      c.positive("b");
      if (!spec.params.contains("cdf_grid")) c.fail("params.cdf_grid", "missing");
      c.grid("cdf_grid");
      break;
    case ExperimentKind::kMixture: {
      c.count("m", 1);
      c.positive("step_mu");
      c.positive("step_log_lambda");
      c.positive("step_log_v");
      const std::string mode = spec.params.value("priors", std::string("default"));
      if (mode != "default" && mode != "data") c.fail("params.priors", "must be \"default\" or \"data\"");
      for (const char* key : {"a", "b", "c", "mu_sd", "log_lambda_sd"}) {
        if (spec.params.contains(key)) c.positive(key);
      }
      for (const char* key : {"mu_mean", "log_lambda_mean"}) {
        double v = 0.0;
        if (spec.params.contains(key) && c.number(key, v) && !std::isfinite(v)) {
          c.fail(std::string("params.") + key, "must be finite");
        }
      }
      if (spec.params.contains("overlay_states")) {
        const json& states = spec.params["overlay_states"];
        bool ok = states.is_array();
        if (ok) {
          for (const auto& s : states) ok = ok && s.is_number_integer() && s.get<std::int64_t>() >= 0;
        }
        if (!ok) c.fail("params.overlay_states", "must be a list of non-negative integers");
        if (ok && !states.empty() && spec.sweeps > spec.burnin) {
          for (const auto& s : states) {
            if (s.get<std::uint64_t>() >= spec.sweeps - spec.burnin) {
              c.fail("params.overlay_states", "index " + std::to_string(s.get<std::uint64_t>()) +
                                                  " is not below the retained state count");
            }
          }
        }
      }
      c.grid("overlay_grid");
      break;
    }
    case ExperimentKind::kValidate: {
      for (double a : spec.alphas) {
        if (std::isinf(a)) c.fail("alpha", "validate requires finite alpha values");
      }
      c.count("draws", 1);
      const json& ks = spec.params.contains("k") ? spec.params["k"] : json();
      bool ok = ks.is_array() && !ks.empty();
      if (ok) {
        for (const auto& k : ks) ok = ok && k.is_number_integer() && k.get<std::int64_t>() >= 2;
      }
      if (!ok) c.fail("params.k", "must be a non-empty list of integers >= 2");
      double tilt = 0.0;
      if (spec.params.contains("tilt") && c.number("tilt", tilt) && !(tilt >= 0.0 && tilt < 1.0)) {
        c.fail("params.tilt", "must lie in [0, 1)");
      }
      break;
    }
  }
  return c.problems;
}

void validate_spec(const ExperimentSpec& spec) {
  auto problems = spec_problems(spec);
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

bool ResultBundle::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
}

std::vector<CellCoordinates> enumerate_cells(const ExperimentSpec& spec) {
  const std::uint64_t seed = spec.seed.value_or(0);
  const RandomSource data_root(seed, 0);
  const RandomSource chain_root(seed, 1);
  std::vector<std::optional<std::uint64_t>> ks{std::nullopt};
  if (spec.kind == ExperimentKind::kValidate) {
    ks.clear();
    for (const auto& k : spec.params.at("k")) ks.emplace_back(k.get<std::uint64_t>());
  }
  std::vector<CellCoordinates> cells;
  for (double alpha : spec.alphas) {
    for (auto n : spec.ns) {
      for (const auto& k : ks) {
        for (std::uint64_t r = 0; r < spec.replicates; ++r) {
          CellCoordinates c;
          c.index = cells.size();
          c.alpha = alpha;
          c.n = n;
          c.replicate = r;
          c.k = k;
          c.data_stream = data_root.split(r).stream();
          c.chain_stream = chain_root.split(c.index).stream();
          cells.push_back(c);
        }
      }
    }
  }
  return cells;
}

ResultBundle run(const ExperimentSpec& spec, const RunOptions& options) {
  ResultBundle bundle{require_valid(spec), {}};
  std::vector<CellCoordinates> all = enumerate_cells(spec);
  if (options.only_cell) {
    if (*options.only_cell >= all.size()) {
      throw ValidationError({"cell: index " + std::to_string(*options.only_cell) + " is out of range (" +
                             std::to_string(all.size()) + " cells)"});
    }
    all = {all[*options.only_cell]};
  }
  bundle.cells.resize(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) bundle.cells[i].where = all[i];

  unsigned jobs = options.jobs != 0 ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(1, all.size())));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < bundle.cells.size(); i = next.fetch_add(1)) {
      CellResult& cell = bundle.cells[i];
      try {
        run_cell(spec, cell);
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
        cell.record = {};
        cell.tables.clear();
      }
      if (!spec.out_dir.empty()) {
        try {
          write_cell_files(spec, cell);
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.error = std::string("writing cell output: ") + e.what();
        }
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return bundle;
}

CsvTable summary_table(const ResultBundle& bundle) {
  if (bundle.cells.empty()) throw UsageError("emit: bundle has no cells");
  CsvTable table;
  // Failed cells carry no record fields, so take the header from the first successful cell.
  const CellResult* exemplar = &bundle.cells.front();
  for (const auto& cell : bundle.cells) {
    if (cell.ok) {
      exemplar = &cell;
      break;
    }
  }
  for (const auto& [name, value] : provenance(bundle.spec, *exemplar)) table.header.push_back(name);
  for (const auto& [name, value] : exemplar->record.fields) table.header.push_back(name);
  table.header.push_back("error");
  for (const auto& cell : bundle.cells) {
    std::vector<std::string> row;
    for (auto& [name, value] : provenance(bundle.spec, cell)) row.push_back(value);
    for (std::size_t f = 0; f < exemplar->record.fields.size(); ++f) {
      row.push_back(f < cell.record.fields.size() ? field_to_text(cell.record.fields[f].second) : "");
    }
    std::string error = cell.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    row.push_back(error);
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable aggregate_table(const ResultBundle& bundle) {
  if (bundle.cells.empty()) throw UsageError("emit: bundle has no cells");
  using Key = std::tuple<std::size_t, std::size_t, std::uint64_t>;  // alpha position, n position, k
  const auto& spec = bundle.spec;
  auto position = [](const auto& list, const auto& value) {
    return static_cast<std::size_t>(std::find(list.begin(), list.end(), value) - list.begin());
  };

  std::vector<std::string> numeric;
  const CellResult* exemplar = nullptr;
  for (const auto& cell : bundle.cells) {
    if (cell.ok) {
      exemplar = &cell;
      break;
    }
  }
  std::vector<std::size_t> field_pos;
  if (exemplar) {
    for (std::size_t f = 0; f < exemplar->record.fields.size(); ++f) {
      const auto& [name, value] = exemplar->record.fields[f];
      if (std::holds_alternative<std::string>(value)) continue;
      numeric.push_back(name);
      field_pos.push_back(f);
    }
  }

  std::map<Key, std::pair<std::size_t, std::vector<double>>> sums;
  std::map<Key, const CellResult*> first;
  for (const auto& cell : bundle.cells) {
    const Key key{position(spec.alphas, cell.where.alpha), position(spec.ns, cell.where.n), cell.where.k.value_or(0)};
    first.emplace(key, &cell);
    auto& [count, acc] = sums[key];
    if (acc.empty()) acc.assign(numeric.size(), 0.0);
    if (!cell.ok) continue;
    ++count;
    for (std::size_t f = 0; f < numeric.size(); ++f) {
      const FieldValue& v = cell.record.fields[field_pos[f]].second;
      acc[f] += std::holds_alternative<double>(v) ? std::get<double>(v) : static_cast<double>(std::get<std::int64_t>(v));
    }
  }

  CsvTable table{{"kind", "alpha", "n"}, {}};
  const bool has_k = spec.kind == ExperimentKind::kValidate;
  if (has_k) table.header.push_back("k");
  table.header.push_back("replicates_ok");
  for (const auto& name : numeric) table.header.push_back("mean_" + name);

  for (const auto& [key, entry] : sums) {
    const CellResult& cell = *first.at(key);
    std::vector<std::string> row{to_string(spec.kind), alpha_label(cell.where.alpha), std::to_string(cell.where.n)};
    if (has_k) row.push_back(std::to_string(*cell.where.k));
    row.push_back(std::to_string(entry.first));
    for (std::size_t f = 0; f < numeric.size(); ++f) {
      row.push_back(entry.first == 0 ? "nan" : format_double(entry.second[f] / static_cast<double>(entry.first)));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

json manifest_json(const ResultBundle& bundle) {
  json cells = json::array();
  for (const auto& cell : bundle.cells) {
    json c{{"cell", cell.where.index},
           {"alpha", alpha_to_json(cell.where.alpha)},
           {"n", cell.where.n},
           {"replicate", cell.where.replicate},
           {"seed", *bundle.spec.seed},
           {"data_stream", cell.where.data_stream},
           {"chain_stream", cell.where.chain_stream},
           {"status", cell.ok ? "ok" : "failed"}};
    if (cell.where.k) c["k"] = *cell.where.k;
    if (!cell.ok) c["error"] = cell.error;
    cells.push_back(std::move(c));
  }
  return json{{"library", "cposterior"},
              {"version", kLibraryVersion},
              {"spec", spec_to_json(bundle.spec)},
              {"cells", std::move(cells)}};
}

void emit(const ResultBundle& bundle, OutputFormat format, const std::filesystem::path& out_dir) {
  const CsvTable summary = summary_table(bundle);
  if (format == OutputFormat::kCsv) {
    write_file_atomic(out_dir / "summary.csv", to_csv_text(summary));
  } else {
    std::string text = "[\n";
    for (std::size_t r = 0; r < bundle.cells.size(); ++r) {
      const CellResult& cell = bundle.cells[r];
      text += "  {";
      bool first_field = true;
      auto put = [&](const std::string& name, const std::string& value_text) {
        if (!first_field) text += ", ";
        first_field = false;
        text += json_escape(name) + ": " + value_text;
      };
      for (auto& [name, value] : provenance(bundle.spec, cell)) {
        const bool numeric_col = name == "cell" || name == "n" || name == "k" || name == "replicate" ||
                                 name == "seed" || name == "data_stream" || name == "chain_stream" ||
                                 (name == "alpha" && value != "inf");
        put(name, numeric_col ? value : json_escape(value));
      }
      for (const auto& [name, value] : cell.record.fields) put(name, field_to_json_text(value));
      if (!cell.ok) put("error", json_escape(cell.error));
      text += r + 1 < bundle.cells.size() ? "},\n" : "}\n";
    }
    text += "]\n";
    write_file_atomic(out_dir / "summary.json", text);
  }
  write_file_atomic(out_dir / "aggregate.csv", to_csv_text(aggregate_table(bundle)));
  write_file_atomic(out_dir / "manifest.json", manifest_json(bundle).dump(2) + "\n");
}

}  // namespace cposterior
