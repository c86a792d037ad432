#pragma once

#include <cstdint>
#include <span>

#include "cposterior/random.hpp"

namespace cposterior {

// Log densities / mass functions. Gamma uses the shape-rate parameterization.

double normal_logpdf(double x, double mean, double sd);
double normal_cdf(double x);
double gamma_logpdf(double x, double shape, double rate);
double binomial_logpmf(std::uint64_t k, std::uint64_t n, double p);
double beta_binomial_logpmf(std::uint64_t k, std::uint64_t n, double a, double b);

// Samplers.

double draw_normal(RandomSource& rng, double mean, double sd);
/// Marsaglia-Tsang; shapes below one use the u^(1/shape) boost.
double draw_gamma(RandomSource& rng, double shape, double rate);
double draw_beta(RandomSource& rng, double a, double b);
double draw_exponential(RandomSource& rng, double rate);
bool draw_bernoulli(RandomSource& rng, double p);
std::uint64_t draw_binomial(RandomSource& rng, std::uint64_t n, double p);
std::uint64_t draw_beta_binomial(RandomSource& rng, std::uint64_t n, double a, double b);
/// Index drawn with probability proportional to weights.
std::size_t draw_categorical(RandomSource& rng, std::span<const double> weights);

}  // namespace cposterior
