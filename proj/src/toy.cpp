#include "cposterior/toy.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cposterior/distributions.hpp"
#include "cposterior/errors.hpp"
#include "cposterior/special.hpp"

namespace cposterior {

namespace {

void check_xbar(double xbar) {
  if (!(xbar >= 0.0 && xbar <= 1.0)) throw DomainError("toy posterior: xbar must lie in [0, 1]");
}

// Posterior of H0 when the H1 / H0 evidence ratio is 2^m B(1 + m xbar, 1 + m (1 - xbar)).
double posterior_with_size(double m, double xbar) {
  const double log_ratio = m * std::numbers::ln2 + ln_beta(1.0 + m * xbar, 1.0 + m * (1.0 - xbar));
  return logistic(-log_ratio);
}

double xlogy_ratio(double p, double q) {
  if (p == 0.0) return 0.0;
  if (q == 0.0) return std::numeric_limits<double>::infinity();
  return p * std::log(p / q);
}

}  // namespace

double bernoulli_relative_entropy(double xbar, double theta) {
  return std::max(0.0, xlogy_ratio(xbar, theta) + xlogy_ratio(1.0 - xbar, 1.0 - theta));
}

double toy_standard_posterior(std::uint64_t n, double xbar) {
  check_xbar(xbar);
  return posterior_with_size(static_cast<double>(n), xbar);
}

double toy_approx_cposterior(std::uint64_t n, double xbar, const CoarseningConfig& cfg) {
  check_xbar(xbar);
  return posterior_with_size(effective_sample_size(n, cfg), xbar);
}

double toy_exact_cposterior(std::uint64_t n, double xbar, const CoarseningConfig& cfg) {
  check_xbar(xbar);
  if (n == 0) return 0.5;
  const double nd = static_cast<double>(n);
  const double successes = nd * xbar;
  if (std::abs(successes - std::round(successes)) > 1e-6 * std::max(1.0, nd)) {
    throw DomainError("toy_exact_cposterior: n * xbar must be an integer count");
  }
  if (cfg.is_standard()) return toy_standard_posterior(n, xbar);

  // log Pr(Z = 1 | h) = log E[exp(-alpha D) | h] over S.
  std::vector<double> log_h0;
  std::vector<double> log_h1;
  log_h0.reserve(n + 1);
  log_h1.reserve(n + 1);
  const double log_uniform = -std::log(nd + 1.0);
  for (std::uint64_t s = 0; s <= n; ++s) {
    const double d = bernoulli_relative_entropy(xbar, static_cast<double>(s) / nd);
    if (std::isinf(d)) continue;
    const double kernel = -cfg.alpha() * d;
    log_h0.push_back(binomial_logpmf(s, n, 0.5) + kernel);
    log_h1.push_back(log_uniform + kernel);
  }
  const double a = log_sum_exp(log_h0);
  const double b = log_sum_exp(log_h1);
  return logistic(a - b);
}

double alpha_from_epsilon(double eps) {
  if (!(eps > 0.0)) throw DomainError("alpha_from_epsilon: eps must be positive");
  return 1.0 / (2.0 * eps * eps);
}

}  // namespace cposterior
