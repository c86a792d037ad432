#include "cposterior/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cposterior/errors.hpp"
#include "cposterior/special.hpp"

namespace cposterior {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
}

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -kHalfLog2Pi - std::log(sd) - 0.5 * z * z;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double gamma_logpdf(double x, double shape, double rate) {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  if (x == 0.0) {
    if (shape < 1.0) return std::numeric_limits<double>::infinity();
    return shape == 1.0 ? std::log(rate) : -std::numeric_limits<double>::infinity();
  }
  return shape * std::log(rate) - ln_gamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double binomial_logpmf(std::uint64_t k, std::uint64_t n, double p) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  double out = ln_choose(nd, kd);
  if (k > 0) out += kd * std::log(p);
  if (k < n) out += (nd - kd) * std::log1p(-p);
  return out;
}

double beta_binomial_logpmf(std::uint64_t k, std::uint64_t n, double a, double b) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  return ln_choose(nd, kd) + ln_beta(kd + a, nd - kd + b) - ln_beta(a, b);
}

double draw_normal(RandomSource& rng, double mean, double sd) { return mean + sd * rng.normal(); }

double draw_gamma(RandomSource& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw DomainError("draw_gamma: shape and rate must be positive");
  if (shape < 1.0) {
    const double boost = std::pow(rng.uniform(), 1.0 / shape);
    return draw_gamma(rng, shape + 1.0, rate) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double draw_beta(RandomSource& rng, double a, double b) {
  const double x = draw_gamma(rng, a, 1.0);
  const double y = draw_gamma(rng, b, 1.0);
  return x / (x + y);
}

double draw_exponential(RandomSource& rng, double rate) { return -std::log(rng.uniform()) / rate; }

bool draw_bernoulli(RandomSource& rng, double p) { return rng.uniform() < p; }

std::uint64_t draw_binomial(RandomSource& rng, std::uint64_t n, double p) {
  std::uint64_t count = 0;
  for (std::uint64_t i = 0; i < n; ++i) count += draw_bernoulli(rng, p) ? 1 : 0;
  return count;
}

std::uint64_t draw_beta_binomial(RandomSource& rng, std::uint64_t n, double a, double b) {
  return draw_binomial(rng, n, draw_beta(rng, a, b));
}

std::size_t draw_categorical(RandomSource& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw DomainError("draw_categorical: weights must have positive total");
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  // Rounding left u marginally non-negative; return the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

}  // namespace cposterior
