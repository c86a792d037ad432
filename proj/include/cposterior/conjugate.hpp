#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cposterior {

/// Natural parameters (xi, nu) of a conjugate prior
/// pi(theta) = exp(theta^T xi - nu kappa(theta) - psi(xi, nu)).
struct NaturalConjugatePrior {
  std::vector<double> xi;
  double nu = 0.0;
};

/// Exponential family p(x | theta) = h(x) exp(theta^T s(x) - kappa(theta)) over
/// scalar observations, together with the closed-form conjugate log-normalizer.
class ExponentialFamily {
 public:
  virtual ~ExponentialFamily() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> sufficient_statistic(double x) const = 0;
  virtual double log_base_measure(double x) const = 0;
  virtual bool admissible(const NaturalConjugatePrior& prior) const = 0;
  /// psi(xi, nu); only meaningful on the admissible set.
  virtual double log_partition(const NaturalConjugatePrior& prior) const = 0;
};

/// Bernoulli likelihood with the conjugate prior taken over the success
/// probability: (xi, nu) <-> Beta(1 + xi, 1 + nu - xi).
class BernoulliFamily final : public ExponentialFamily {
 public:
  std::size_t dimension() const override { return 1; }
  std::vector<double> sufficient_statistic(double x) const override;
  double log_base_measure(double) const override { return 0.0; }
  bool admissible(const NaturalConjugatePrior& prior) const override;
  double log_partition(const NaturalConjugatePrior& prior) const override;

  static NaturalConjugatePrior prior_from_beta(double a, double b);
  /// Beta shape parameters (a, b) of an admissible prior.
  static std::pair<double, double> beta_shapes(const NaturalConjugatePrior& prior);
};

/// Normal likelihood with known standard deviation sigma; theta is the mean,
/// s(x) = x / sigma^2 and kappa(theta) = theta^2 / (2 sigma^2). The conjugate
/// prior is Normal with precision nu / sigma^2 and mean xi sigma^2 / nu.
class NormalKnownVarianceFamily final : public ExponentialFamily {
 public:
  explicit NormalKnownVarianceFamily(double sigma);

  double sigma() const { return sigma_; }

  std::size_t dimension() const override { return 1; }
  std::vector<double> sufficient_statistic(double x) const override;
  double log_base_measure(double x) const override;
  bool admissible(const NaturalConjugatePrior& prior) const override;
  double log_partition(const NaturalConjugatePrior& prior) const override;

  NaturalConjugatePrior prior_from_normal(double mean, double sd) const;

 private:
  double sigma_;
};

/// (xi + zeta sum s(x_i), nu + n zeta).
NaturalConjugatePrior power_update(const ExponentialFamily& family, const NaturalConjugatePrior& prior,
                                   std::span<const double> data, double zeta);

/// log of the integral of prod p(x_i | theta)^zeta against the prior:
/// psi(xi_n, nu_n) - psi(xi, nu) + zeta sum log h(x_i).
double log_marginal_power_likelihood(const ExponentialFamily& family, const NaturalConjugatePrior& prior,
                                     std::span<const double> data, double zeta);

}  // namespace cposterior
