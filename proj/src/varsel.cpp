#include "cposterior/varsel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cposterior/distributions.hpp"
#include "cposterior/errors.hpp"
#include "cposterior/skew_normal.hpp"
#include "cposterior/special.hpp"

namespace cposterior {

void RegressionDataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1) throw ShapeError("RegressionDataset: need n >= 1 and p >= 1");
  if (y.size() != X.rows()) throw ShapeError("RegressionDataset: y length differs from number of rows");
  if (!X.allFinite() || !y.allFinite()) throw DomainError("RegressionDataset: non-finite entries");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != X.cols()) {
    throw ShapeError("RegressionDataset: names must match the number of columns");
  }
}

VarselPriors VarselPriors::defaults_for(Eigen::Index p) {
  VarselPriors priors;
  priors.s = 2.0 * static_cast<double>(p);
  return priors;
}

void VarselPriors::validate() const {
  if (!(r > 0.0 && s > 0.0 && L0 > 0.0 && a > 0.0 && b > 0.0)) {
    throw DomainError("VarselPriors: r, s, L0, a, b must all be positive");
  }
}

std::size_t VarselState::num_nonzero() const {
  return static_cast<std::size_t>((beta.array() != 0.0).count());
}

GammaParams lambda_conditional(const VarselState& state, const RegressionDataset& data, const VarselPriors& priors,
                               double zeta) {
  const double rss = (data.y - data.X * state.beta).squaredNorm();
  return {priors.a + 0.5 * static_cast<double>(data.n()) * zeta, priors.b + 0.5 * zeta * rss};
}

namespace {

// log odds of beta_j != 0 against beta_j = 0, plus the slab conditional (M, L).
struct SlabTerms {
  double log_odds_nonzero;
  double mean;
  double precision;
};

SlabTerms slab_terms(double delta_dot_x, double col_sq, double lambda, double zeta, std::size_t others_nonzero,
                     std::size_t others_zero, const VarselPriors& priors) {
  const double L = priors.L0 + lambda * zeta * col_sq;
  const double M = lambda * zeta * delta_dot_x / L;
  const double log_odds = 0.5 * std::log(priors.L0 / L) + 0.5 * L * M * M +
                          std::log(priors.r + static_cast<double>(others_nonzero)) -
                          std::log(priors.s + static_cast<double>(others_zero));
  return {log_odds, M, L};
}

}  // namespace

double beta_inclusion_probability(std::size_t j, const VarselState& state, const RegressionDataset& data,
                                  const VarselPriors& priors, double zeta) {
  const auto jj = static_cast<Eigen::Index>(j);
  if (jj >= data.p()) throw ShapeError("beta_inclusion_probability: index out of range");
  Eigen::VectorXd others = state.beta;
  others[jj] = 0.0;
  const Eigen::VectorXd delta = data.y - data.X * others;
  const std::size_t nonzero = static_cast<std::size_t>((others.array() != 0.0).count());
  const std::size_t zero = static_cast<std::size_t>(data.p()) - 1 - nonzero;
  const SlabTerms t =
      slab_terms(delta.dot(data.X.col(jj)), data.X.col(jj).squaredNorm(), state.lambda, zeta, nonzero, zero, priors);
  return logistic(-t.log_odds_nonzero);
}

VarselSampler::VarselSampler(const RegressionDataset& data, VarselPriors priors, double zeta, VarselState init)
    : data_(data), priors_(priors), zeta_(zeta), state_(std::move(init)) {
  data_.validate();
  priors_.validate();
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw DomainError("VarselSampler: zeta must lie in [0, 1]");
  if (state_.beta.size() != data_.p()) throw ShapeError("VarselSampler: beta has wrong length");
  if (!(state_.lambda > 0.0)) throw DomainError("VarselSampler: lambda must be positive");
  col_sq_norm_ = data_.X.colwise().squaredNorm().transpose();
  residual_ = data_.y - data_.X * state_.beta;
}

void VarselSampler::sweep(RandomSource& rng) {
  // Refresh the cached residual to keep rounding drift from accumulating.
  residual_ = data_.y - data_.X * state_.beta;
  update_lambda(rng);
  update_coefficients(rng);
}

void VarselSampler::update_lambda(RandomSource& rng) {
  const double shape = priors_.a + 0.5 * static_cast<double>(data_.n()) * zeta_;
  const double rate = priors_.b + 0.5 * zeta_ * residual_.squaredNorm();
  state_.lambda = draw_gamma(rng, shape, rate);
}

void VarselSampler::update_coefficients(RandomSource& rng) {
  const Eigen::Index p = data_.p();
  std::size_t nonzero = state_.num_nonzero();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double old = state_.beta[j];
    const bool was_nonzero = old != 0.0;
    const std::size_t others_nonzero = nonzero - (was_nonzero ? 1 : 0);
    const std::size_t others_zero = static_cast<std::size_t>(p) - 1 - others_nonzero;
    const double delta_dot_x = data_.X.col(j).dot(residual_) + old * col_sq_norm_[j];
    const SlabTerms t =
        slab_terms(delta_dot_x, col_sq_norm_[j], state_.lambda, zeta_, others_nonzero, others_zero, priors_);
    const double p_zero = logistic(-t.log_odds_nonzero);
    double next = 0.0;
    if (!(rng.uniform() < p_zero)) next = draw_normal(rng, t.mean, 1.0 / std::sqrt(t.precision));
    if (next != old) residual_ -= (next - old) * data_.X.col(j);
    state_.beta[j] = next;
    nonzero = others_nonzero + (next != 0.0 ? 1 : 0);
  }
}

VarselState gibbs_sweep(const VarselState& state, const RegressionDataset& data, const VarselPriors& priors,
                        double zeta, RandomSource& rng) {
  VarselSampler sampler(data, priors, zeta, state);
  sampler.sweep(rng);
  return sampler.state();
}

ChainTrace<VarselState> run_varsel_chain(const RegressionDataset& data, const VarselPriors& priors,
                                         const CoarseningConfig& cfg, std::uint64_t sweeps, std::uint64_t burnin,
                                         const RandomSource& rng) {
  if (sweeps <= burnin) throw UsageError("run_varsel_chain: sweeps must exceed burnin");
  priors.validate();
  VarselState init{Eigen::VectorXd::Zero(data.p()), priors.a / priors.b};
  VarselSampler sampler(data, priors, zeta(static_cast<std::uint64_t>(data.n()), cfg), std::move(init));
  RandomSource chain_rng = rng;
  ChainTrace<VarselState> trace;
  trace.burnin = burnin;
  trace.sweeps = sweeps;
  trace.seed = rng.seed();
  trace.stream = rng.stream();
  trace.states.reserve(sweeps - burnin);
  for (std::uint64_t it = 0; it < sweeps; ++it) {
    sampler.sweep(chain_rng);
    if (it >= burnin) trace.states.push_back(sampler.state());
  }
  return trace;
}

std::size_t TraceSummary::k_mode() const {
  return static_cast<std::size_t>(std::max_element(k_pmf.begin(), k_pmf.end()) - k_pmf.begin());
}

namespace {

double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

TraceSummary trace_summaries(const ChainTrace<VarselState>& trace, std::span<const double> cdf_grid) {
  if (trace.empty()) throw UsageError("trace_summaries: empty trace");
  const auto p = static_cast<std::size_t>(trace.states.front().beta.size());
  const double count = static_cast<double>(trace.size());

  TraceSummary out;
  if (cdf_grid.empty()) {
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& st : trace.states) {
      lo = std::min(lo, st.beta.minCoeff());
      hi = std::max(hi, st.beta.maxCoeff());
    }
    constexpr int kPoints = 201;
    for (int i = 0; i < kPoints; ++i) out.cdf_grid.push_back(lo + (hi - lo) * i / (kPoints - 1));
  } else {
    out.cdf_grid.assign(cdf_grid.begin(), cdf_grid.end());
  }

  out.k_pmf.assign(p + 1, 0.0);
  for (const auto& st : trace.states) out.k_pmf[st.num_nonzero()] += 1.0 / count;

  std::vector<double> values(trace.size());
  for (std::size_t j = 0; j < p; ++j) {
    CoefficientSummary cs;
    std::size_t nonzero = 0;
    for (std::size_t t = 0; t < trace.size(); ++t) {
      values[t] = trace.states[t].beta[static_cast<Eigen::Index>(j)];
      nonzero += values[t] != 0.0 ? 1 : 0;
    }
    cs.inclusion = static_cast<double>(nonzero) / count;
    cs.mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    cs.q025 = sorted_quantile(sorted, 0.025);
    cs.median = sorted_quantile(sorted, 0.5);
    cs.q975 = sorted_quantile(sorted, 0.975);
    cs.cdf.reserve(out.cdf_grid.size());
    for (double g : out.cdf_grid) {
      const auto below = std::upper_bound(sorted.begin(), sorted.end(), g) - sorted.begin();
      cs.cdf.push_back(static_cast<double>(below) / count);
    }
    out.coefficients.push_back(std::move(cs));
  }
  return out;
}

namespace {

MultiSkewNormalParams varsel_covariate_law() {
  Eigen::MatrixXd omega(5, 5);
  omega << 1.0, -0.89, 0.93, -0.91, 0.98,
           -0.89, 1.0, -0.94, 0.97, -0.91,
           0.93, -0.94, 1.0, -0.96, 0.97,
           -0.91, 0.97, -0.96, 1.0, -0.93,
           0.98, -0.91, 0.97, -0.93, 1.0;
  Eigen::VectorXd shape(5);
  shape << 0.6, 2.7, -3.3, -4.9, -2.5;
  return MultiSkewNormalParams(std::move(omega), std::move(shape));
}

}  // namespace

RegressionDataset generate_varsel_data(std::size_t n, RandomSource& rng) {
  if (n == 0) throw DomainError("generate_varsel_data: n must be >= 1");
  static const MultiSkewNormalParams law = varsel_covariate_law();
  const Moments moments = skew_normal_moments(law);
  const auto rows = static_cast<Eigen::Index>(n);
  RegressionDataset data{Eigen::MatrixXd(rows, 6), Eigen::VectorXd(rows),
                         {"x1", "x2", "x3", "x4", "x5", "x6"}};
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::VectorXd raw = sample_skew_normal(law, rng);
    data.X(i, 0) = 1.0;
    data.X.row(i).tail(5) = ((raw - moments.mean).array() / moments.sd.array()).matrix().transpose();
    const double x2 = data.X(i, 1);
    data.y[i] = -1.0 + 4.0 * (x2 + x2 * x2 / 16.0) + rng.normal();
  }
  return data;
}

RegressionDataset standardize_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      std::vector<std::string> names) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n < 1) throw ShapeError("standardize_dataset: no rows");
  if (y.size() != n) throw ShapeError("standardize_dataset: y length differs from number of rows");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != p) {
    throw ShapeError("standardize_dataset: names must match the number of columns");
  }
  auto standardize = [n](const Eigen::VectorXd& col, const std::string& label) {
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n));
    if (!(sd > 0.0)) throw DomainError("standardize_dataset: column '" + label + "' has zero variance");
    return Eigen::VectorXd((col.array() - mean) / sd);
  };

  RegressionDataset out{Eigen::MatrixXd(n, p + 1), Eigen::VectorXd(n), {}};
  out.X.col(0).setOnes();
  out.names.push_back("const");
  for (Eigen::Index j = 0; j < p; ++j) {
    const std::string label = names.empty() ? "column " + std::to_string(j + 1) : names[j];
    out.X.col(j + 1) = standardize(X.col(j), label);
    out.names.push_back(label);
  }
  out.y = standardize(y, "y");
  return out;
}

double alpha_from_delta(double sigma, double delta) {
  if (!(sigma > 0.0) || !(delta > 0.0)) throw DomainError("alpha_from_delta: inputs must be positive");
  return 2.0 * sigma * sigma / (delta * delta);
}

}  // namespace cposterior
