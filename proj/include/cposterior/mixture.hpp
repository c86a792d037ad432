#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cposterior/coarsening.hpp"
#include "cposterior/random.hpp"
#include "cposterior/skew_normal.hpp"
#include "cposterior/trace.hpp"

namespace cposterior {

/// Prior for the reparameterized Gaussian mixture: v_i ~ Gamma(a, b) i.i.d.
/// conditioned on sum g(v_i) > 0 with g(v) = max(v - c, 0); mu_i ~ N(mu_mean,
/// mu_sd^2); log lambda_i ~ N(log_lambda_mean, log_lambda_sd^2).
struct MixturePriors {
  std::size_t m = 10;
  double a = 0.1;
  double b = 1.0;
  double c = 1.0;
  double mu_mean = 0.0;
  double mu_sd = 5.0;
  double log_lambda_mean = 0.0;
  double log_lambda_sd = 2.0;

  /// a = 1/m, b = 1, c with Pr(v_i > c) = 1/m, mu ~ N(0, 5^2), log lambda ~ N(0, 2^2).
  static MixturePriors defaults(std::size_t m = 10);
  void validate() const;
};

struct MixtureState {
  std::vector<double> v;
  std::vector<double> mu;
  std::vector<double> lambda;

  std::size_t size() const { return v.size(); }
  /// Number of components with v_i > c.
  std::size_t num_active(double c) const;
};

/// Random-walk proposal standard deviations.
struct StepSizes {
  double mu = 0.2;
  double log_lambda = 0.2;
  double log_v = 0.3;
};

/// w_i = g(v_i) / sum_j g(v_j).
std::vector<double> weights_from_v(std::span<const double> v, double c);

/// c with Pr(v > c) = p for v ~ Gamma(a, b).
double threshold_from_inclusion(double a, double b, double p);

/// Zero-truncated Binomial(m, p) pmf; entry i is the probability of k = i + 1.
SimplexVector induced_prior_on_k(std::size_t m, double p);

/// Unnormalized log density of the power posterior over (v, mu, lambda):
/// prior terms (lambda density includes the log-normal Jacobian -log lambda)
/// plus zeta sum_j log sum_i w_i N(x_j | mu_i, 1/lambda_i). Returns -inf when no
/// component is active.
double log_power_posterior_density(const MixtureState& state, std::span<const double> data,
                                   const MixturePriors& priors, double zeta);

/// One logged Metropolis-Hastings decision. A move is accepted iff
/// log_u < log_target_proposed - log_target_current + log_jacobian.
struct MhTransition {
  enum class Block { kMuLambda, kV };
  Block block;
  std::size_t component;
  MixtureState current;
  MixtureState proposed;
  double log_target_current;
  double log_target_proposed;
  double log_jacobian;
  double log_u;
  bool accepted;
};

struct SweepAcceptance {
  std::vector<bool> mu_lambda;
  std::vector<bool> v;
};

/// Metropolis-Hastings sampler with per-point density caches. A sweep updates
/// each (mu_i, log lambda_i) jointly, then each log v_i.
class MixtureSampler {
 public:
  MixtureSampler(std::span<const double> data, MixturePriors priors, double zeta, StepSizes steps,
                 MixtureState init);

  SweepAcceptance sweep(RandomSource& rng, std::vector<MhTransition>* log = nullptr);

  const MixtureState& state() const { return state_; }
  /// Cached unnormalized log target of the current state.
  double log_target() const;

 private:
  double component_log_prior(double v, double mu, double lambda) const;
  void fill_row(double mu, double lambda, std::vector<double>& row) const;
  void ensure_row(std::size_t i);
  double log_likelihood(std::span<const double> g, std::size_t replaced, const std::vector<double>* replacement,
                        double replaced_mu, double replaced_lambda) const;

  std::span<const double> data_;
  MixturePriors priors_;
  double zeta_;
  StepSizes steps_;
  MixtureState state_;
  std::size_t m_;
  std::size_t n_;
  std::vector<double> g_;
  std::vector<double> dens_;  // point-major: dens_[j * m + i] = N(x_j | mu_i, 1/lambda_i)
  std::vector<bool> row_valid_;
  std::vector<double> candidate_;
  double log_prior_ = 0.0;
  double log_lik_ = 0.0;
};

/// One sweep from `state` with a freshly built sampler.
std::pair<MixtureState, SweepAcceptance> mh_sweep(const MixtureState& state, std::span<const double> data,
                                                  const MixturePriors& priors, double zeta, const StepSizes& steps,
                                                  RandomSource& rng);

/// v drawn from its prior until some component is active; mu and lambda from their priors.
MixtureState draw_mixture_prior(const MixturePriors& priors, RandomSource& rng);

struct MixtureChainStats {
  double mu_lambda_acceptance = 0.0;
  double v_acceptance = 0.0;
};

ChainTrace<MixtureState> run_mixture_chain(std::span<const double> data, const MixturePriors& priors,
                                           const CoarseningConfig& cfg, std::uint64_t sweeps, std::uint64_t burnin,
                                           const RandomSource& rng, const StepSizes& steps = {},
                                           MixtureChainStats* stats = nullptr);

/// Empirical pmf of k = #{i : v_i > c}; entry i is the probability of k = i + 1.
SimplexVector posterior_on_k(const ChainTrace<MixtureState>& trace, double c);

/// The two-component benchmark 1/2 SN(-4, 1, 5) + 1/2 SN(-1, 2, 5).
std::vector<SkewNormalParams> default_skew_mixture_components();

/// Equal-weight mixture draws: a uniform pick of component, then a skew-normal draw.
std::vector<double> generate_skew_mixture(std::size_t n, RandomSource& rng,
                                          std::span<const SkewNormalParams> components = {});

/// Data-scaled priors: mu ~ N(mean, sd^2), log lambda ~ N(log(4 / sd^2), 2^2),
/// a = 1/m, b = 1, c with Pr(v > c) = 1/m. sd uses divisor n - 1.
MixturePriors data_dependent_priors(std::span<const double> x, std::size_t m = 20);

/// Mixture density and weighted component densities of one state on a grid.
struct DensityOverlay {
  std::vector<double> grid;
  std::vector<double> total;
  std::vector<std::vector<double>> components;  // [component][grid point]
};

DensityOverlay density_overlay(const MixtureState& state, double c, std::span<const double> grid);

}  // namespace cposterior
