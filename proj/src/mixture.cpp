#include "cposterior/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cposterior/distributions.hpp"
#include "cposterior/errors.hpp"
#include "cposterior/special.hpp"

namespace cposterior {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

double g_of(double v, double c) { return std::max(v - c, 0.0); }

double component_prior(const MixturePriors& priors, double v, double mu, double lambda) {
  const double log_lambda = std::log(lambda);
  return gamma_logpdf(v, priors.a, priors.b) + normal_logpdf(mu, priors.mu_mean, priors.mu_sd) +
         normal_logpdf(log_lambda, priors.log_lambda_mean, priors.log_lambda_sd) - log_lambda;
}

}  // namespace

MixturePriors MixturePriors::defaults(std::size_t m) {
  MixturePriors priors;
  priors.m = m;
  priors.a = 1.0 / static_cast<double>(m);
  priors.b = 1.0;
  priors.c = m > 1 ? threshold_from_inclusion(priors.a, priors.b, 1.0 / static_cast<double>(m))
                   : threshold_from_inclusion(priors.a, priors.b, 0.5);
  return priors;
}

void MixturePriors::validate() const {
  if (m < 1) throw DomainError("MixturePriors: m must be >= 1");
  if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw DomainError("MixturePriors: a, b, c must be positive");
  if (!(mu_sd > 0.0 && log_lambda_sd > 0.0)) throw DomainError("MixturePriors: prior sds must be positive");
}

std::size_t MixtureState::num_active(double c) const {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [c](double vi) { return vi > c; }));
}

std::vector<double> weights_from_v(std::span<const double> v, double c) {
  if (!(c > 0.0)) throw DomainError("weights_from_v: c must be positive");
  std::vector<double> w(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = g_of(v[i], c);
    total += w[i];
  }
  if (!(total > 0.0)) throw DomainError("weights_from_v: no v_i exceeds the threshold c");
  for (double& wi : w) wi /= total;
  return w;
}

double threshold_from_inclusion(double a, double b, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("threshold_from_inclusion: p must lie in (0, 1)");
  return gamma_quantile(a, b, 1.0 - p);
}

SimplexVector induced_prior_on_k(std::size_t m, double p) {
  if (m < 1) throw DomainError("induced_prior_on_k: m must be >= 1");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("induced_prior_on_k: p must lie in (0, 1)");
  std::vector<double> logw(m);
  for (std::size_t k = 1; k <= m; ++k) logw[k - 1] = binomial_logpmf(k, m, p);
  const double norm = log_sum_exp(logw);
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) w[i] = std::exp(logw[i] - norm);
  return SimplexVector::normalized(std::move(w));
}

double log_power_posterior_density(const MixtureState& state, std::span<const double> data,
                                   const MixturePriors& priors, double zeta) {
  const std::size_t m = state.size();
  if (state.mu.size() != m || state.lambda.size() != m) throw ShapeError("MixtureState: ragged vectors");
  if (data.empty()) throw DomainError("log_power_posterior_density: empty data");
  double total_g = 0.0;
  for (double vi : state.v) total_g += g_of(vi, priors.c);
  if (!(total_g > 0.0)) return kNegInf;

  double out = 0.0;
  for (std::size_t i = 0; i < m; ++i) out += component_prior(priors, state.v[i], state.mu[i], state.lambda[i]);
  if (zeta == 0.0) return out;

  std::vector<double> terms;
  double loglik = 0.0;
  for (double x : data) {
    terms.clear();
    for (std::size_t i = 0; i < m; ++i) {
      const double g = g_of(state.v[i], priors.c);
      if (g <= 0.0) continue;
      terms.push_back(std::log(g / total_g) + normal_logpdf(x, state.mu[i], 1.0 / std::sqrt(state.lambda[i])));
    }
    loglik += log_sum_exp(terms);
  }
  return out + zeta * loglik;
}

MixtureSampler::MixtureSampler(std::span<const double> data, MixturePriors priors, double zeta, StepSizes steps,
                               MixtureState init)
    : data_(data), priors_(priors), zeta_(zeta), steps_(steps), state_(std::move(init)) {
  priors_.validate();
  if (data_.empty()) throw DomainError("MixtureSampler: empty data");
  if (!(zeta_ >= 0.0 && zeta_ <= 1.0)) throw DomainError("MixtureSampler: zeta must lie in [0, 1]");
  m_ = state_.size();
  n_ = data_.size();
  if (m_ != priors_.m || state_.mu.size() != m_ || state_.lambda.size() != m_) {
    throw ShapeError("MixtureSampler: state does not have m components");
  }
  g_.resize(m_);
  double total_g = 0.0;
  for (std::size_t i = 0; i < m_; ++i) {
    if (!(state_.v[i] > 0.0) || !(state_.lambda[i] > 0.0)) {
      throw DomainError("MixtureSampler: v and lambda must be positive");
    }
    g_[i] = g_of(state_.v[i], priors_.c);
    total_g += g_[i];
  }
  if (!(total_g > 0.0)) throw DomainError("MixtureSampler: initial state has no active component");

  dens_.assign(n_ * m_, 0.0);
  row_valid_.assign(m_, false);
  candidate_.resize(n_);
  log_prior_ = 0.0;
  for (std::size_t i = 0; i < m_; ++i) {
    log_prior_ += component_prior(priors_, state_.v[i], state_.mu[i], state_.lambda[i]);
  }
  if (zeta_ > 0.0) {
    for (std::size_t i = 0; i < m_; ++i) {
      if (g_[i] > 0.0) ensure_row(i);
    }
    log_lik_ = log_likelihood(g_, m_, nullptr, 0.0, 0.0);
  }
}

double MixtureSampler::log_target() const { return log_prior_ + zeta_ * log_lik_; }

double MixtureSampler::component_log_prior(double v, double mu, double lambda) const {
  return component_prior(priors_, v, mu, lambda);
}

void MixtureSampler::fill_row(double mu, double lambda, std::vector<double>& row) const {
  const double scale = std::sqrt(lambda) * kInvSqrt2Pi;
  const double half_lambda = 0.5 * lambda;
  for (std::size_t j = 0; j < n_; ++j) {
    const double d = data_[j] - mu;
    row[j] = scale * std::exp(-half_lambda * d * d);
  }
}

void MixtureSampler::ensure_row(std::size_t i) {
  if (row_valid_[i]) return;
  fill_row(state_.mu[i], state_.lambda[i], candidate_);
  for (std::size_t j = 0; j < n_; ++j) dens_[j * m_ + i] = candidate_[j];
  row_valid_[i] = true;
}

// sum_j log(sum_i g_i N_ij / sum_i g_i), with component `replaced` (if < m)
// taking densities from `replacement` and parameters (replaced_mu, replaced_lambda).
double MixtureSampler::log_likelihood(std::span<const double> g, std::size_t replaced,
                                      const std::vector<double>* replacement, double replaced_mu,
                                      double replaced_lambda) const {
  std::vector<std::size_t> active;
  double total_g = 0.0;
  for (std::size_t i = 0; i < m_; ++i) {
    if (g[i] > 0.0) {
      active.push_back(i);
      total_g += g[i];
    }
  }
  double out = 0.0;
  std::vector<double> terms;
  for (std::size_t j = 0; j < n_; ++j) {
    const double* row = &dens_[j * m_];
    double s = 0.0;
    for (std::size_t i : active) s += g[i] * (i == replaced ? (*replacement)[j] : row[i]);
    if (s >= std::numeric_limits<double>::min()) {
      out += std::log(s);
      continue;
    }
    // Every active density underflowed at this point; fall back to log space.
    terms.clear();
    for (std::size_t i : active) {
      const double mu = i == replaced ? replaced_mu : state_.mu[i];
      const double lambda = i == replaced ? replaced_lambda : state_.lambda[i];
      terms.push_back(std::log(g[i]) + normal_logpdf(data_[j], mu, 1.0 / std::sqrt(lambda)));
    }
    out += log_sum_exp(terms);
  }
  return out - static_cast<double>(n_) * std::log(total_g);
}

SweepAcceptance MixtureSampler::sweep(RandomSource& rng, std::vector<MhTransition>* log) {
  SweepAcceptance acc{std::vector<bool>(m_, false), std::vector<bool>(m_, false)};
  const bool use_lik = zeta_ > 0.0;

  for (std::size_t i = 0; i < m_; ++i) {
    const double mu_new = state_.mu[i] + steps_.mu * rng.normal();
    const double log_lambda_old = std::log(state_.lambda[i]);
    const double log_lambda_new = log_lambda_old + steps_.log_lambda * rng.normal();
    const double lambda_new = std::exp(log_lambda_new);
    const double log_u = std::log(rng.uniform());

    const double prior_old = component_log_prior(state_.v[i], state_.mu[i], state_.lambda[i]);
    const double prior_new = component_log_prior(state_.v[i], mu_new, lambda_new);
    double lik_new = log_lik_;
    const bool touches_lik = use_lik && g_[i] > 0.0;
    if (touches_lik) {
      fill_row(mu_new, lambda_new, candidate_);
      lik_new = log_likelihood(g_, i, &candidate_, mu_new, lambda_new);
    }
    const double current = log_target();
    const double proposed = log_prior_ - prior_old + prior_new + zeta_ * lik_new;
    const double log_jacobian = log_lambda_new - log_lambda_old;
    const bool accept = log_u < proposed - current + log_jacobian;

    if (log) {
      MixtureState prop = state_;
      prop.mu[i] = mu_new;
      prop.lambda[i] = lambda_new;
      log->push_back({MhTransition::Block::kMuLambda, i, state_, std::move(prop), current, proposed, log_jacobian,
                      log_u, accept});
    }
    if (accept) {
      state_.mu[i] = mu_new;
      state_.lambda[i] = lambda_new;
      log_prior_ += prior_new - prior_old;
      if (touches_lik) {
        for (std::size_t j = 0; j < n_; ++j) dens_[j * m_ + i] = candidate_[j];
        row_valid_[i] = true;
        log_lik_ = lik_new;
      } else {
        row_valid_[i] = false;
      }
    }
    acc.mu_lambda[i] = accept;
  }

  std::vector<double> g_new(m_);
  for (std::size_t i = 0; i < m_; ++i) {
    const double log_v_old = std::log(state_.v[i]);
    const double log_v_new = log_v_old + steps_.log_v * rng.normal();
    const double v_new = std::exp(log_v_new);
    const double log_u = std::log(rng.uniform());

    g_new = g_;
    g_new[i] = g_of(v_new, priors_.c);
    double total_new = 0.0;
    for (double g : g_new) total_new += g;

    const double prior_old = component_log_prior(state_.v[i], state_.mu[i], state_.lambda[i]);
    const double prior_new = component_log_prior(v_new, state_.mu[i], state_.lambda[i]);
    const double current = log_target();
    const double log_jacobian = log_v_new - log_v_old;
    double proposed = kNegInf;
    double lik_new = log_lik_;
    if (total_new > 0.0 && v_new > 0.0) {
      if (use_lik && (g_new[i] > 0.0 || g_[i] > 0.0)) {
        if (g_new[i] > 0.0) ensure_row(i);
        lik_new = log_likelihood(g_new, m_, nullptr, 0.0, 0.0);
      }
      proposed = log_prior_ - prior_old + prior_new + zeta_ * lik_new;
    }
    const bool accept = log_u < proposed - current + log_jacobian;

    if (log) {
      MixtureState prop = state_;
      prop.v[i] = v_new;
      log->push_back(
          {MhTransition::Block::kV, i, state_, std::move(prop), current, proposed, log_jacobian, log_u, accept});
    }
    if (accept) {
      state_.v[i] = v_new;
      g_[i] = g_new[i];
      log_prior_ += prior_new - prior_old;
      log_lik_ = lik_new;
    }
    acc.v[i] = accept;
  }
  return acc;
}

std::pair<MixtureState, SweepAcceptance> mh_sweep(const MixtureState& state, std::span<const double> data,
                                                  const MixturePriors& priors, double zeta, const StepSizes& steps,
                                                  RandomSource& rng) {
  MixtureSampler sampler(data, priors, zeta, steps, state);
  SweepAcceptance acc = sampler.sweep(rng);
  return {sampler.state(), std::move(acc)};
}

MixtureState draw_mixture_prior(const MixturePriors& priors, RandomSource& rng) {
  priors.validate();
  MixtureState state{std::vector<double>(priors.m), std::vector<double>(priors.m), std::vector<double>(priors.m)};
  do {
    for (double& v : state.v) {
      do {
        v = draw_gamma(rng, priors.a, priors.b);
      } while (!(v > 0.0));
    }
  } while (state.num_active(priors.c) == 0);
  for (std::size_t i = 0; i < priors.m; ++i) {
    state.mu[i] = draw_normal(rng, priors.mu_mean, priors.mu_sd);
    state.lambda[i] = std::exp(draw_normal(rng, priors.log_lambda_mean, priors.log_lambda_sd));
  }
  return state;
}

ChainTrace<MixtureState> run_mixture_chain(std::span<const double> data, const MixturePriors& priors,
                                           const CoarseningConfig& cfg, std::uint64_t sweeps, std::uint64_t burnin,
                                           const RandomSource& rng, const StepSizes& steps,
                                           MixtureChainStats* stats) {
  if (sweeps <= burnin) throw UsageError("run_mixture_chain: sweeps must exceed burnin");
  RandomSource chain_rng = rng;
  MixtureState init = draw_mixture_prior(priors, chain_rng);
  MixtureSampler sampler(data, priors, zeta(data.size(), cfg), steps, std::move(init));

  ChainTrace<MixtureState> trace;
  trace.burnin = burnin;
  trace.sweeps = sweeps;
  trace.seed = rng.seed();
  trace.stream = rng.stream();
  trace.states.reserve(sweeps - burnin);
  std::uint64_t accepted_ml = 0;
  std::uint64_t accepted_v = 0;
  for (std::uint64_t it = 0; it < sweeps; ++it) {
    const SweepAcceptance acc = sampler.sweep(chain_rng);
    accepted_ml += static_cast<std::uint64_t>(std::count(acc.mu_lambda.begin(), acc.mu_lambda.end(), true));
    accepted_v += static_cast<std::uint64_t>(std::count(acc.v.begin(), acc.v.end(), true));
    if (it >= burnin) trace.states.push_back(sampler.state());
  }
  if (stats) {
    const double moves = static_cast<double>(sweeps) * static_cast<double>(priors.m);
    stats->mu_lambda_acceptance = static_cast<double>(accepted_ml) / moves;
    stats->v_acceptance = static_cast<double>(accepted_v) / moves;
  }
  return trace;
}

SimplexVector posterior_on_k(const ChainTrace<MixtureState>& trace, double c) {
  if (trace.empty()) throw UsageError("posterior_on_k: empty trace");
  const std::size_t m = trace.states.front().size();
  std::vector<double> counts(m, 0.0);
  for (const auto& st : trace.states) {
    const std::size_t k = st.num_active(c);
    if (k == 0) throw NumericalError("posterior_on_k: state with no active component");
    counts[k - 1] += 1.0;
  }
  return SimplexVector::normalized(std::move(counts));
}

std::vector<SkewNormalParams> default_skew_mixture_components() {
  return {SkewNormalParams(-4.0, 1.0, 5.0), SkewNormalParams(-1.0, 2.0, 5.0)};
}

std::vector<double> generate_skew_mixture(std::size_t n, RandomSource& rng,
                                          std::span<const SkewNormalParams> components) {
  if (n == 0) throw DomainError("generate_skew_mixture: n must be >= 1");
  const std::vector<SkewNormalParams> defaults = default_skew_mixture_components();
  if (components.empty()) components = defaults;
  const std::vector<double> equal(components.size(), 1.0);
  std::vector<double> x(n);
  for (double& xi : x) xi = sample_skew_normal(components[draw_categorical(rng, equal)], rng);
  return x;
}

MixturePriors data_dependent_priors(std::span<const double> x, std::size_t m) {
  if (x.size() < 2) throw DomainError("data_dependent_priors: need at least two observations");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double xi : x) mean += xi;
  mean /= n;
  double ss = 0.0;
  for (double xi : x) ss += (xi - mean) * (xi - mean);
  const double var = ss / (n - 1.0);
  if (!(var > 0.0)) throw DomainError("data_dependent_priors: data are constant");

  MixturePriors priors = MixturePriors::defaults(m);
  priors.mu_mean = mean;
  priors.mu_sd = std::sqrt(var);
  priors.log_lambda_mean = std::log(4.0 / var);
  priors.log_lambda_sd = 2.0;
  return priors;
}

DensityOverlay density_overlay(const MixtureState& state, double c, std::span<const double> grid) {
  const std::vector<double> w = weights_from_v(state.v, c);
  DensityOverlay out;
  out.grid.assign(grid.begin(), grid.end());
  out.total.assign(grid.size(), 0.0);
  out.components.assign(state.size(), std::vector<double>(grid.size(), 0.0));
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (w[i] <= 0.0) continue;
    const double sd = 1.0 / std::sqrt(state.lambda[i]);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      const double d = w[i] * std::exp(normal_logpdf(grid[t], state.mu[i], sd));
      out.components[i][t] = d;
      out.total[t] += d;
    }
  }
  return out;
}

}  // namespace cposterior
