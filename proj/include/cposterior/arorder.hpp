#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cposterior/coarsening.hpp"
#include "cposterior/random.hpp"

namespace cposterior {

/// AR(k) with known noise sd sigma and i.i.d. N(0, sigma0^2) coefficients.
struct ARModelSpec {
  std::size_t k = 0;
  double sigma = 1.0;
  double sigma0 = 1.0;

  void validate() const;
};

/// M_ij = sum_t x_{t-i} x_{t-j} / sigma^2 and v_i = sum_t x_t x_{t-i} / sigma^2,
/// i, j = 1..k, with x_t = 0 for t <= 0.
struct ARSuffStats {
  Eigen::MatrixXd M;
  Eigen::VectorXd v;

  /// Statistics of the order-k submodel (leading block).
  ARSuffStats leading(std::size_t k) const;
};

ARSuffStats ar_suff_stats(std::span<const double> x, std::size_t k, double sigma);

/// log of exp(zeta^2 v^T L^{-1} v / 2) / (sigma0^k |L|^{1/2}) N(x | 0, sigma^2 I)^zeta,
/// L = zeta M + sigma0^{-2} I, zeta = zeta(n, cfg).
double log_coarsened_marginal(std::span<const double> x, const ARModelSpec& spec, const CoarseningConfig& cfg);

/// Same quantity from precomputed statistics of at least spec.k lags.
double log_coarsened_marginal(const ARSuffStats& stats, std::span<const double> x, const ARModelSpec& spec,
                              const CoarseningConfig& cfg);

struct OrderPosterior {
  std::vector<double> log_marginal;  // indexed by k = 0..kmax
  SimplexVector posterior;
};

/// pi_c(k | x) proportional to p_c(x | k) pi(k) over k = 0..kmax. The prior
/// defaults to uniform.
OrderPosterior cposterior_over_orders(std::span<const double> x, std::size_t kmax, double sigma, double sigma0,
                                      const CoarseningConfig& cfg,
                                      const std::optional<SimplexVector>& prior_on_k = std::nullopt);

/// x_t = sum_l theta_l x_{t-l} + eps_t + sin_amp sin(t), eps_t ~ N(0, noise_sd^2),
/// x_t = 0 for t <= 0.
std::vector<double> generate_misspec_ar(std::size_t n, std::span<const double> theta, double noise_sd,
                                        double sin_amp, RandomSource& rng);

/// Coefficients (1/4, 1/4, -1/4, 1/4) of the near-AR(4) benchmark process.
std::vector<double> default_misspec_theta();

}  // namespace cposterior
