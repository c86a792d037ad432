#include "cposterior/arorder.hpp"

#include <cmath>
#include <numbers>

#include "cposterior/errors.hpp"
#include "cposterior/special.hpp"

namespace cposterior {

void ARModelSpec::validate() const {
  if (!(sigma > 0.0)) throw DomainError("AR model: sigma must be positive");
  if (!(sigma0 > 0.0)) throw DomainError("AR model: sigma0 must be positive");
}

ARSuffStats ARSuffStats::leading(std::size_t k) const {
  const auto kk = static_cast<Eigen::Index>(k);
  if (kk > v.size()) throw ShapeError("ARSuffStats::leading: order exceeds available lags");
  return {M.topLeftCorner(kk, kk), v.head(kk)};
}

ARSuffStats ar_suff_stats(std::span<const double> x, std::size_t k, double sigma) {
  if (x.empty()) throw DomainError("ar_suff_stats: need at least one observation");
  if (!(sigma > 0.0)) throw DomainError("ar_suff_stats: sigma must be positive");
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto kk = static_cast<Eigen::Index>(k);
  // x_{t-i} for 1-based t, zero before the series starts.
  auto lag = [&](std::ptrdiff_t t, Eigen::Index i) { return t - i >= 1 ? x[t - i - 1] : 0.0; };

  ARSuffStats stats{Eigen::MatrixXd::Zero(kk, kk), Eigen::VectorXd::Zero(kk)};
  for (std::ptrdiff_t t = 1; t <= n; ++t) {
    for (Eigen::Index i = 1; i <= kk; ++i) {
      const double xi = lag(t, i);
      if (xi == 0.0) continue;
      stats.v[i - 1] += x[t - 1] * xi;
      for (Eigen::Index j = i; j <= kk; ++j) stats.M(i - 1, j - 1) += xi * lag(t, j);
    }
  }
  stats.M.triangularView<Eigen::StrictlyLower>() = stats.M.transpose().triangularView<Eigen::StrictlyLower>();
  const double inv_var = 1.0 / (sigma * sigma);
  stats.M *= inv_var;
  stats.v *= inv_var;
  return stats;
}

double log_coarsened_marginal(const ARSuffStats& stats, std::span<const double> x, const ARModelSpec& spec,
                              const CoarseningConfig& cfg) {
  spec.validate();
  if (x.empty()) throw DomainError("log_coarsened_marginal: need at least one observation");
  const double z = zeta(x.size(), cfg);

  double log_white = 0.0;
  const double var = spec.sigma * spec.sigma;
  for (double xt : x) log_white += -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * xt * xt / var;
  if (spec.k == 0) return z * log_white;

  const ARSuffStats sub = stats.leading(spec.k);
  const auto kk = static_cast<Eigen::Index>(spec.k);
  const Eigen::MatrixXd precision =
      z * sub.M + Eigen::MatrixXd::Identity(kk, kk) / (spec.sigma0 * spec.sigma0);
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("log_coarsened_marginal: precision not positive definite");
  const Eigen::VectorXd solved = llt.solve(sub.v);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return 0.5 * z * z * sub.v.dot(solved) - static_cast<double>(kk) * std::log(spec.sigma0) - 0.5 * log_det +
         z * log_white;
}

double log_coarsened_marginal(std::span<const double> x, const ARModelSpec& spec, const CoarseningConfig& cfg) {
  spec.validate();
  return log_coarsened_marginal(ar_suff_stats(x, spec.k, spec.sigma), x, spec, cfg);
}

OrderPosterior cposterior_over_orders(std::span<const double> x, std::size_t kmax, double sigma, double sigma0,
                                      const CoarseningConfig& cfg, const std::optional<SimplexVector>& prior_on_k) {
  if (prior_on_k && prior_on_k->size() != kmax + 1) {
    throw ShapeError("cposterior_over_orders: prior must have kmax + 1 entries");
  }
  const ARSuffStats stats = ar_suff_stats(x, kmax, sigma);
  OrderPosterior out{std::vector<double>(kmax + 1), SimplexVector::uniform(kmax + 1)};
  std::vector<double> log_post(kmax + 1);
  for (std::size_t k = 0; k <= kmax; ++k) {
    out.log_marginal[k] = log_coarsened_marginal(stats, x, ARModelSpec{k, sigma, sigma0}, cfg);
    const double log_prior = prior_on_k ? std::log((*prior_on_k)[k]) : 0.0;
    log_post[k] = out.log_marginal[k] + log_prior;
  }
  const double norm = log_sum_exp(log_post);
  std::vector<double> post(kmax + 1);
  for (std::size_t k = 0; k <= kmax; ++k) post[k] = std::exp(log_post[k] - norm);
  out.posterior = SimplexVector::normalized(std::move(post));
  return out;
}

std::vector<double> generate_misspec_ar(std::size_t n, std::span<const double> theta, double noise_sd,
                                        double sin_amp, RandomSource& rng) {
  if (n == 0) throw DomainError("generate_misspec_ar: n must be >= 1");
  if (!(noise_sd >= 0.0)) throw DomainError("generate_misspec_ar: noise_sd must be >= 0");
  std::vector<double> x(n, 0.0);
  for (std::size_t t = 1; t <= n; ++t) {
    double value = 0.0;
    for (std::size_t l = 1; l <= theta.size() && l < t; ++l) value += theta[l - 1] * x[t - l - 1];
    value += noise_sd * rng.normal() + sin_amp * std::sin(static_cast<double>(t));
    x[t - 1] = value;
  }
  return x;
}

std::vector<double> default_misspec_theta() { return {0.25, 0.25, -0.25, 0.25}; }

}  // namespace cposterior
