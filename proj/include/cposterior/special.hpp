#pragma once

#include <span>

namespace cposterior {

/// log Gamma(x) for x > 0 (Lanczos, g = 671/128, 14 terms).
double ln_gamma(double x);

/// log B(a, b).
double ln_beta(double a, double b);

/// log binomial coefficient for real-valued n >= k >= 0.
double ln_choose(double n, double k);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Quantile of Gamma(shape, rate): x with P(shape, rate * x) = q.
double gamma_quantile(double shape, double rate, double q);

/// log(sum exp(values)); returns -inf for an empty span or all -inf entries.
double log_sum_exp(std::span<const double> values);

/// log(exp(a) + exp(b)).
double log_add_exp(double a, double b);

/// 1 / (1 + exp(-x)) without overflow.
double logistic(double x);

}  // namespace cposterior
