#include "cposterior/conjugate.hpp"

#include <cmath>
#include <numbers>

#include "cposterior/errors.hpp"
#include "cposterior/special.hpp"

namespace cposterior {

std::vector<double> BernoulliFamily::sufficient_statistic(double x) const {
  if (x != 0.0 && x != 1.0) throw DomainError("Bernoulli observation must be 0 or 1");
  return {x};
}

bool BernoulliFamily::admissible(const NaturalConjugatePrior& prior) const {
  return prior.xi.size() == 1 && 1.0 + prior.xi[0] > 0.0 && 1.0 + prior.nu - prior.xi[0] > 0.0;
}

double BernoulliFamily::log_partition(const NaturalConjugatePrior& prior) const {
  const auto [a, b] = beta_shapes(prior);
  return ln_beta(a, b);
}

NaturalConjugatePrior BernoulliFamily::prior_from_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("Beta shapes must be positive");
  return {{a - 1.0}, a + b - 2.0};
}

std::pair<double, double> BernoulliFamily::beta_shapes(const NaturalConjugatePrior& prior) {
  return {1.0 + prior.xi.at(0), 1.0 + prior.nu - prior.xi.at(0)};
}

NormalKnownVarianceFamily::NormalKnownVarianceFamily(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0)) throw DomainError("Normal family: sigma must be positive");
}

std::vector<double> NormalKnownVarianceFamily::sufficient_statistic(double x) const {
  return {x / (sigma_ * sigma_)};
}

double NormalKnownVarianceFamily::log_base_measure(double x) const {
  const double var = sigma_ * sigma_;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * x * x / var;
}

bool NormalKnownVarianceFamily::admissible(const NaturalConjugatePrior& prior) const {
  return prior.xi.size() == 1 && prior.nu > 0.0 && std::isfinite(prior.xi[0]);
}

double NormalKnownVarianceFamily::log_partition(const NaturalConjugatePrior& prior) const {
  const double var = sigma_ * sigma_;
  const double xi = prior.xi.at(0);
  return 0.5 * std::log(2.0 * std::numbers::pi * var / prior.nu) + 0.5 * xi * xi * var / prior.nu;
}

NaturalConjugatePrior NormalKnownVarianceFamily::prior_from_normal(double mean, double sd) const {
  if (!(sd > 0.0)) throw DomainError("Normal prior sd must be positive");
  const double nu = sigma_ * sigma_ / (sd * sd);
  return {{mean * nu / (sigma_ * sigma_)}, nu};
}

NaturalConjugatePrior power_update(const ExponentialFamily& family, const NaturalConjugatePrior& prior,
                                   std::span<const double> data, double zeta) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw DomainError("power_update: zeta must lie in [0, 1]");
  if (prior.xi.size() != family.dimension()) throw ShapeError("power_update: xi has wrong dimension");
  NaturalConjugatePrior out = prior;
  std::vector<double> total(family.dimension(), 0.0);
  for (double x : data) {
    const auto s = family.sufficient_statistic(x);
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += s[j];
  }
  for (std::size_t j = 0; j < total.size(); ++j) out.xi[j] += zeta * total[j];
  out.nu += static_cast<double>(data.size()) * zeta;
  if (!family.admissible(out)) throw DomainError("power_update: updated parameters are not admissible");
  return out;
}

double log_marginal_power_likelihood(const ExponentialFamily& family, const NaturalConjugatePrior& prior,
                                     std::span<const double> data, double zeta) {
  if (!family.admissible(prior)) throw DomainError("log_marginal_power_likelihood: prior not admissible");
  const NaturalConjugatePrior posterior = power_update(family, prior, data, zeta);
  double base = 0.0;
  for (double x : data) base += family.log_base_measure(x);
  return family.log_partition(posterior) - family.log_partition(prior) + zeta * base;
}

}  // namespace cposterior
