#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cposterior/random.hpp"

namespace cposterior {

/// Rate alpha of the Exponential(alpha) prior on the neighborhood radius.
/// alpha = +inf encodes the standard, uncoarsened posterior.
class CoarseningConfig {
 public:
  explicit CoarseningConfig(double alpha);

  static CoarseningConfig standard();

  double alpha() const { return alpha_; }
  bool is_standard() const;

 private:
  double alpha_;
};

/// Tempering exponent 1 / (1 + n / alpha); exactly 1 for n = 0 or alpha = inf.
double zeta(std::uint64_t n, const CoarseningConfig& cfg);

/// n * zeta(n), the effective sample size 1 / (1/n + 1/alpha).
double effective_sample_size(std::uint64_t n, const CoarseningConfig& cfg);

/// Finite probability vector: entries >= 0 summing to one within 1e-12.
class SimplexVector {
 public:
  explicit SimplexVector(std::vector<double> weights);

  /// Normalizes non-negative weights with positive total.
  static SimplexVector normalized(std::vector<double> weights);
  static SimplexVector uniform(std::size_t size);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  auto begin() const { return weights_.begin(); }
  auto end() const { return weights_.end(); }

  /// Index of the largest entry (first on ties).
  std::size_t argmax() const;

  bool strictly_positive() const;

 private:
  std::vector<double> weights_;
};

/// D(p || q) = sum p_i log(p_i / q_i), with 0 log 0 = 0; +inf when q_i = 0 < p_i.
double relative_entropy(const SimplexVector& p, const SimplexVector& q);

/// sum (p_i - q_i)^2 / q_i; q must be strictly positive.
double chi_squared(const SimplexVector& p, const SimplexVector& q);

/// Mahalanobis form (p' - q')^T C^{-1} (p' - q') over the first k-1 coordinates,
/// C = diag(q') - q' q'^T, using the rank-one inverse diag(q')^{-1} + (1/q_k) 1 1^T.
double mahalanobis_chi_squared(const SimplexVector& p, const SimplexVector& q);

/// (n zeta / alpha)^((k-1)/2) exp(-n zeta D(p || s)); alpha must be finite.
double small_sample_rhs(const SimplexVector& p, const SimplexVector& s, std::uint64_t n,
                        const CoarseningConfig& cfg);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate of E exp(-alpha D(p || s_hat)) where s_hat is the
/// empirical distribution of n i.i.d. draws from s.
McEstimate small_sample_lhs_mc(const SimplexVector& p, const SimplexVector& s, std::uint64_t n,
                               const CoarseningConfig& cfg, std::uint64_t draws, RandomSource& rng);

/// Weights proportional to prior_i exp(-alpha distance_i), normalized in log
/// space. For alpha = inf the mass goes to the minimizers of distance, split in
/// proportion to their prior weight.
SimplexVector asymptotic_reweight(const SimplexVector& prior, std::span<const double> distances,
                                  const CoarseningConfig& cfg);

}  // namespace cposterior
