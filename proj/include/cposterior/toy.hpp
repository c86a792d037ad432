#pragma once

#include <cstdint>

#include "cposterior/coarsening.hpp"

namespace cposterior {

// Bernoulli test of H0: theta = 1/2 against H1: theta ~ Uniform(0, 1), equal
// prior odds. Every function returns the posterior probability of H0 given n
// observations with sample mean xbar.

/// Standard posterior 1 / (1 + 2^n B(1 + n xbar, 1 + n (1 - xbar))).
double toy_standard_posterior(std::uint64_t n, double xbar);

/// Power-posterior approximation: n replaced by n zeta_n.
double toy_approx_cposterior(std::uint64_t n, double xbar, const CoarseningConfig& cfg);

/// Exact c-posterior Pr(H0 | D(p_x || p_X) < R), R ~ Exponential(alpha),
/// summing over the success count S of the idealized data:
/// S | H0 ~ Binomial(n, 1/2), S | H1 ~ Uniform{0..n}.
double toy_exact_cposterior(std::uint64_t n, double xbar, const CoarseningConfig& cfg);

/// Relative entropy between Bernoulli(xbar) and Bernoulli(s / n) as two-point
/// distributions.
double bernoulli_relative_entropy(double xbar, double theta);

/// alpha = 1 / (2 eps^2): tolerance eps on the sample mean near 1/2.
double alpha_from_epsilon(double eps);

}  // namespace cposterior
