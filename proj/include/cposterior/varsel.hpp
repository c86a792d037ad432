#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cposterior/coarsening.hpp"
#include "cposterior/random.hpp"
#include "cposterior/trace.hpp"

namespace cposterior {

/// Design matrix X (n x p) and targets y. Standardized datasets carry the
/// constant covariate in column 0.
struct RegressionDataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;  // optional column labels, size p when set

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
  void validate() const;
};

/// W ~ Beta(r, s), beta_j ~ N(0, 1/L0) with probability W else 0, lambda ~ Gamma(a, b).
struct VarselPriors {
  double r = 1.0;
  double s = 2.0;
  double L0 = 1.0;
  double a = 1.0;
  double b = 1.0;

  /// r = 1, s = 2p, L0 = 1, a = b = 1.
  static VarselPriors defaults_for(Eigen::Index p);
  void validate() const;
};

/// Exact zeros in beta mark excluded coefficients.
struct VarselState {
  Eigen::VectorXd beta;
  double lambda = 1.0;

  std::size_t num_nonzero() const;
};

struct GammaParams {
  double shape;
  double rate;
};

/// Full conditional of lambda: Gamma(a + n zeta / 2, b + (zeta / 2) sum (y_i - beta^T x_i)^2).
GammaParams lambda_conditional(const VarselState& state, const RegressionDataset& data, const VarselPriors& priors,
                               double zeta);

/// Pr(beta_j = 0 | beta_{-j}, lambda, y) under the power posterior.
double beta_inclusion_probability(std::size_t j, const VarselState& state, const RegressionDataset& data,
                                  const VarselPriors& priors, double zeta);

/// Draws lambda, then beta_1..beta_p in ascending order.
VarselState gibbs_sweep(const VarselState& state, const RegressionDataset& data, const VarselPriors& priors,
                        double zeta, RandomSource& rng);

/// Stateful sampler with a cached residual vector; one call to sweep() is one
/// Gibbs scan. Used by run_chain; exposes the coefficient-only update for
/// fixed-lambda checks.
class VarselSampler {
 public:
  VarselSampler(const RegressionDataset& data, VarselPriors priors, double zeta, VarselState init);

  void sweep(RandomSource& rng);
  void update_lambda(RandomSource& rng);
  void update_coefficients(RandomSource& rng);

  const VarselState& state() const { return state_; }

 private:
  const RegressionDataset& data_;
  VarselPriors priors_;
  double zeta_;
  VarselState state_;
  Eigen::VectorXd residual_;  // y - X beta
  Eigen::VectorXd col_sq_norm_;
};

/// Post-burn-in trace of `sweeps - burnin` states, zeta = zeta(n, cfg),
/// starting from beta = 0 and lambda = a / b.
ChainTrace<VarselState> run_varsel_chain(const RegressionDataset& data, const VarselPriors& priors,
                                         const CoarseningConfig& cfg, std::uint64_t sweeps, std::uint64_t burnin,
                                         const RandomSource& rng);

struct CoefficientSummary {
  double inclusion = 0.0;
  double q025 = 0.0;
  double median = 0.0;
  double q975 = 0.0;
  double mean = 0.0;
  std::vector<double> cdf;  // evaluated on TraceSummary::cdf_grid
};

struct TraceSummary {
  std::vector<CoefficientSummary> coefficients;
  std::vector<double> k_pmf;  // over 0..p
  std::vector<double> cdf_grid;

  std::size_t k_mode() const;
};

/// Inclusion frequencies, posterior pmf of the number of nonzero coefficients,
/// empirical quantiles (linear interpolation between order statistics) and
/// the empirical CDF of each coefficient on `cdf_grid`.
TraceSummary trace_summaries(const ChainTrace<VarselState>& trace, std::span<const double> cdf_grid = {});

/// Simulated benchmark: x_1 = 1, x_2..x_6 standardized SN_5(Omega, a),
/// y = -1 + 4 (x_2 + x_2^2 / 16) + N(0, 1).
RegressionDataset generate_varsel_data(std::size_t n, RandomSource& rng);

/// Centers and scales every column of X and y by sample mean and standard
/// deviation (divisor n), then prepends a constant column.
RegressionDataset standardize_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      std::vector<std::string> names = {});

/// alpha = 2 sigma^2 / delta^2 for a mean-shift tolerance delta at noise sd sigma.
double alpha_from_delta(double sigma, double delta);

}  // namespace cposterior
