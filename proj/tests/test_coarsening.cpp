#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "cposterior/coarsening.hpp"
#include "cposterior/errors.hpp"
#include "cposterior/special.hpp"
#include "test_support.hpp"

using namespace cposterior;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact E exp(-alpha D(p || s_hat)) by enumerating multinomial count vectors.
double enumerate_lhs(const SimplexVector& p, const SimplexVector& s, std::uint64_t n, double alpha) {
  const std::size_t k = s.size();
  std::vector<std::uint64_t> counts(k, 0);
  double total = 0.0;
  std::function<void(std::size_t, std::uint64_t)> rec = [&](std::size_t i, std::uint64_t left) {
    if (i + 1 == k) {
      counts[i] = left;
      double log_prob = ln_gamma(static_cast<double>(n) + 1.0);
      std::vector<double> s_hat(k);
      for (std::size_t j = 0; j < k; ++j) {
        log_prob += static_cast<double>(counts[j]) * std::log(s[j]) - ln_gamma(static_cast<double>(counts[j]) + 1.0);
        s_hat[j] = static_cast<double>(counts[j]) / static_cast<double>(n);
      }
      const double d = relative_entropy(p, SimplexVector(s_hat));
      if (std::isfinite(d)) total += std::exp(log_prob - alpha * d);
      return;
    }
    for (std::uint64_t c = 0; c <= left; ++c) {
      counts[i] = c;
      rec(i + 1, left - c);
    }
  };
  rec(0, n);
  return total;
}

}  // namespace

TEST_CASE("zeta schedule") {
  CHECK(zeta(100, CoarseningConfig(100.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(zeta(0, CoarseningConfig(50.0)) == 1.0);
  CHECK(zeta(10000, CoarseningConfig::standard()) == 1.0);
  CHECK(effective_sample_size(10000, CoarseningConfig::standard()) == 10000.0);
  CHECK_THROWS_AS(CoarseningConfig(0.0), DomainError);
  CHECK_THROWS_AS(CoarseningConfig(-3.0), DomainError);
  CHECK(CoarseningConfig::standard().is_standard());
}

TEST_CASE("zeta is decreasing and the effective sample size increases toward alpha") {
  for (double alpha : {0.5, 10.0, 1250.0}) {
    const CoarseningConfig cfg(alpha);
    double prev_z = 2.0;
    double prev_ess = -1.0;
    for (std::uint64_t n = 0; n < 3000; n += 7) {
      const double z = zeta(n, cfg);
      const double ess = effective_sample_size(n, cfg);
      CHECK(z < prev_z);
      CHECK(ess > prev_ess);
      CHECK(ess < alpha);
      prev_z = z;
      prev_ess = ess;
    }
  }
}

TEST_CASE("SimplexVector validation") {
  CHECK_THROWS(SimplexVector({0.5, 0.6}));
  CHECK_THROWS(SimplexVector({1.2, -0.2}));
  CHECK_NOTHROW(SimplexVector({0.25, 0.75}));
  CHECK(SimplexVector::normalized({1.0, 3.0})[1] == doctest::Approx(0.75));
  CHECK_THROWS(SimplexVector::normalized({0.0, 0.0}));
  CHECK(SimplexVector::uniform(4)[2] == 0.25);
}

TEST_CASE("relative entropy examples") {
  const SimplexVector half({0.5, 0.5});
  CHECK(relative_entropy(half, half) == 0.0);
  CHECK(std::abs(relative_entropy(SimplexVector({1.0, 0.0}), half) - std::log(2.0)) < 1e-15);
  CHECK(std::abs(relative_entropy(SimplexVector({0.6, 0.4}), half) - (0.6 * std::log(1.2) + 0.4 * std::log(0.8))) <
        1e-15);
  CHECK(relative_entropy(half, SimplexVector({1.0, 0.0})) == kInf);
  CHECK_THROWS_AS(relative_entropy(half, SimplexVector::uniform(3)), ShapeError);
}

TEST_CASE("chi-squared examples and errors") {
  const SimplexVector half({0.5, 0.5});
  CHECK(chi_squared(half, half) == 0.0);
  CHECK(std::abs(chi_squared(SimplexVector({0.6, 0.4}), half) - 0.04) < 1e-15);
  CHECK(std::abs(chi_squared(SimplexVector({1.0, 0.0}), half) - 1.0) < 1e-15);
  CHECK_THROWS_AS(chi_squared(half, SimplexVector({1.0, 0.0})), DomainError);
  CHECK(std::abs(mahalanobis_chi_squared(SimplexVector({0.6, 0.4}), half) - 0.04) < 1e-15);
  CHECK(mahalanobis_chi_squared(half, half) == 0.0);
}

TEST_CASE("relative entropy is non-negative and vanishes only at equality") {
  RandomSource rng(101);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + rng.next_u64() % 9;
    const SimplexVector p(testsupport::random_simplex(rng, k));
    const SimplexVector q(testsupport::random_simplex(rng, k));
    CHECK(relative_entropy(p, q) > 0.0);
    CHECK(relative_entropy(q, q) == 0.0);
  }
}

TEST_CASE("Mahalanobis form equals chi-squared on random pairs") {
  RandomSource rng(103);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + i % 9;
    const SimplexVector p(testsupport::random_simplex(rng, k));
    const SimplexVector q(testsupport::random_simplex(rng, k));
    CHECK(std::abs(mahalanobis_chi_squared(p, q) - chi_squared(p, q)) <= 1e-12 * std::max(1.0, chi_squared(p, q)));
  }
}

TEST_CASE("twice the relative entropy approaches chi-squared to second order") {
  RandomSource rng(107);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + trial % 5;
    std::vector<double> q = testsupport::random_simplex(rng, k);
    for (auto& v : q) v = 0.5 * v + 0.5 / static_cast<double>(k);  // keep away from the boundary
    std::vector<double> d(k);
    double mean_d = 0.0;
    for (auto& v : d) {
      v = rng.normal();
      mean_d += v / static_cast<double>(k);
    }
    double norm = 0.0;
    for (auto& v : d) {
      v -= mean_d;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : d) v /= norm;
    for (double t : {0.01, 0.003, 0.001}) {
      std::vector<double> p(k);
      for (std::size_t i = 0; i < k; ++i) p[i] = q[i] + t * d[i];
      if (*std::min_element(p.begin(), p.end()) <= 0.0) continue;
      const SimplexVector ps = SimplexVector::normalized(p);
      const SimplexVector qs(q);
      const double ratio = 2.0 * relative_entropy(ps, qs) / chi_squared(ps, qs);
      CHECK(ratio >= 1.0 - 5.0 * t);
      CHECK(ratio <= 1.0 + 5.0 * t);
    }
  }
}

TEST_CASE("small-sample right-hand side") {
  const SimplexVector half({0.5, 0.5});
  CHECK(std::abs(small_sample_rhs(half, half, 50, CoarseningConfig(50.0)) - std::sqrt(0.5)) < 1e-15);
  const SimplexVector third = SimplexVector::uniform(3);
  const double z = zeta(80, CoarseningConfig(20.0));
  CHECK(std::abs(small_sample_rhs(third, third, 80, CoarseningConfig(20.0)) - 80.0 * z / 20.0) < 1e-14);
  CHECK_THROWS_AS(small_sample_rhs(half, half, 50, CoarseningConfig::standard()), DomainError);
  const SimplexVector p({0.55, 0.45});
  const double expected = std::sqrt(50.0 * zeta(50, CoarseningConfig(25.0)) / 25.0) *
                          std::exp(-50.0 * zeta(50, CoarseningConfig(25.0)) * relative_entropy(p, half));
  CHECK(std::abs(small_sample_rhs(p, half, 50, CoarseningConfig(25.0)) - expected) < 1e-15);
}

TEST_CASE("small-sample Monte Carlo matches exact enumeration") {
  RandomSource rng(109);
  struct Case {
    std::vector<double> p, s;
    std::uint64_t n;
    double alpha;
  };
  const std::vector<Case> cases{
      {{1.0, 0.0}, {0.5, 0.5}, 4, 3.0},
      {{1.0, 0.0, 0.0}, {0.2, 0.3, 0.5}, 6, 1.5},
      {{0.3, 0.7}, {0.6, 0.4}, 5, 2.0},
      {{0.2, 0.3, 0.5}, {0.4, 0.4, 0.2}, 6, 4.0},
  };
  for (const auto& c : cases) {
    const SimplexVector p(c.p);
    const SimplexVector s(c.s);
    const double exact = enumerate_lhs(p, s, c.n, c.alpha);
    RandomSource local = rng.split(c.n);
    const McEstimate mc = small_sample_lhs_mc(p, s, c.n, CoarseningConfig(c.alpha), 200000, local);
    CHECK(std::abs(mc.estimate - exact) < 3.5 * mc.std_error + 1e-12);
  }
}

TEST_CASE("small-sample Monte Carlo matches the asymptotic right-hand side") {
  RandomSource rng(113);
  for (std::size_t k : {2u, 3u}) {
    for (std::uint64_t n : {50u, 200u}) {
      for (double alpha : {10.0, 50.0}) {
        const SimplexVector s = SimplexVector::uniform(k);
        const CoarseningConfig cfg(alpha);
        RandomSource local = rng.split(k * 1000 + n + static_cast<std::uint64_t>(alpha));
        const McEstimate mc = small_sample_lhs_mc(s, s, n, cfg, 100000, local);
        const double rhs = small_sample_rhs(s, s, n, cfg);
        CHECK(std::abs(mc.estimate - rhs) <= std::max(3.0 * mc.std_error, 0.15 * rhs));
      }
    }
  }
  const SimplexVector half({0.5, 0.5});
  RandomSource local(127);
  const McEstimate mc = small_sample_lhs_mc(half, half, 50, CoarseningConfig(25.0), 100000, local);
  // n zeta / alpha = (50 / 3) / 25 = 2 / 3; the exact expectation sits 0.4% below this at n = 50.
  const double rhs = small_sample_rhs(half, half, 50, CoarseningConfig(25.0));
  CHECK(std::abs(rhs - std::sqrt(2.0 / 3.0)) < 1e-15);
  CHECK(std::abs(mc.estimate - enumerate_lhs(half, half, 50, 25.0)) < 3.0 * mc.std_error);
  CHECK(std::abs(mc.estimate - rhs) < 0.01 * rhs);
}

TEST_CASE("small-sample Monte Carlo tends to one as alpha shrinks") {
  RandomSource rng(131);
  const SimplexVector s({0.3, 0.7});
  const McEstimate mc = small_sample_lhs_mc(s, s, 40, CoarseningConfig(1e-9), 2000, rng);
  CHECK(mc.estimate > 1.0 - 1e-8);
}

TEST_CASE("asymptotic reweighting") {
  const SimplexVector prior = SimplexVector::uniform(3);
  const std::vector<double> d{0.0, 0.1, 0.2};
  const SimplexVector w = asymptotic_reweight(prior, d, CoarseningConfig(10.0));
  const double z = 1.0 + std::exp(-1.0) + std::exp(-2.0);
  CHECK(std::abs(w[0] - 1.0 / z) < 1e-15);
  CHECK(std::abs(w[1] - std::exp(-1.0) / z) < 1e-15);
  CHECK(std::abs(w[2] - std::exp(-2.0) / z) < 1e-15);

  const SimplexVector skewed({0.2, 0.5, 0.3});
  const std::vector<double> equal{0.4, 0.4, 0.4};
  const SimplexVector same = asymptotic_reweight(skewed, equal, CoarseningConfig(7.0));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(same[i] - skewed[i]) < 1e-15);
  const SimplexVector tiny = asymptotic_reweight(skewed, d, CoarseningConfig(1e-12));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(tiny[i] - skewed[i]) < 1e-12);

  // Large alpha * distance must not underflow the normalization.
  const std::vector<double> far{5000.0, 5001.0, 5003.0};
  const SimplexVector big = asymptotic_reweight(prior, far, CoarseningConfig(1.0));
  CHECK(std::abs(big[0] - 1.0 / (1.0 + std::exp(-1.0) + std::exp(-3.0))) < 1e-14);

  const SimplexVector standard = asymptotic_reweight(prior, d, CoarseningConfig::standard());
  CHECK(standard[0] == 1.0);
  const std::vector<double> tie{0.1, 0.0, 0.0};
  const SimplexVector split = asymptotic_reweight(prior, tie, CoarseningConfig::standard());
  CHECK(split[0] == 0.0);
  CHECK(std::abs(split[1] - 0.5) < 1e-15);
  CHECK_THROWS_AS(asymptotic_reweight(prior, std::vector<double>{0.0, 1.0}, CoarseningConfig(1.0)), ShapeError);
}

TEST_CASE("asymptotic reweighting argmax is shift invariant") {
  RandomSource rng(137);
  for (int i = 0; i < 300; ++i) {
    const std::size_t k = 2 + i % 6;
    const SimplexVector prior(testsupport::random_simplex(rng, k));
    std::vector<double> d(k);
    for (auto& v : d) v = rng.uniform();
    std::vector<double> shifted = d;
    for (auto& v : shifted) v += 3.7;
    const CoarseningConfig cfg(1.0 + 20.0 * rng.uniform());
    const SimplexVector a = asymptotic_reweight(prior, d, cfg);
    const SimplexVector b = asymptotic_reweight(prior, shifted, cfg);
    double total = 0.0;
    for (double v : a) total += v;
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(a.argmax() == b.argmax());
  }
}
