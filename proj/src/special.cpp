#include "cposterior/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "cposterior/errors.hpp"

namespace cposterior {

double ln_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("ln_gamma: argument must be positive and finite, got " + std::to_string(x));
  }
  static constexpr std::array<double, 14> kCoef = {
      57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
      -0.491913816097620199,   .339946499848118887e-4,  .465236289270485756e-4,
      -.983744753048795646e-4, .158088703224912494e-3,  -.210264441724104883e-3,
      .217439618115212643e-3,  -.164318106536763890e-3, .844182239838527433e-4,
      -.261908384015814087e-4, .368991826595316234e-5};
  double y = x;
  double tmp = x + 5.24218750000000000;  // g + 1/2 with g = 671/128
  tmp = (x + 0.5) * std::log(tmp) - tmp;
  double series = 0.999999999999997092;
  for (double c : kCoef) series += c / ++y;
  return tmp + std::log(2.5066282746310005 * series / x);
}

double ln_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw DomainError("ln_beta: arguments must be positive");
  }
  return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
}

double ln_choose(double n, double k) {
  if (k < 0.0 || k > n) throw DomainError("ln_choose: need 0 <= k <= n");
  if (k == 0.0 || k == n) return 0.0;
  return ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0);
}

double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("gamma_p: shape must be positive");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(a, x);
}

double gamma_quantile(double shape, double rate, double q) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw DomainError("gamma_quantile: shape and rate must be positive");
  }
  if (!(q > 0.0 && q < 1.0)) throw DomainError("gamma_quantile: q must lie in (0, 1)");

  auto f = [&](double y) { return gamma_p(shape, y) - q; };
  double lo = 0.0;
  double hi = std::max(1.0, shape);
  while (f(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("gamma_quantile: failed to bracket");
  }
  if (f(hi) == 0.0) return hi / rate;
  std::uintmax_t iters = 500;
  const auto bracket =
      boost::math::tools::toms748_solve(f, lo, hi, f(lo), f(hi), boost::math::tools::eps_tolerance<double>(53), iters);
  // Pick the endpoint with the smaller residual in P.
  const double root = std::abs(f(bracket.first)) <= std::abs(f(bracket.second)) ? bracket.first : bracket.second;
  return root / rate;
}

double log_sum_exp(std::span<const double> values) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : values) top = std::max(top, v);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace cposterior
