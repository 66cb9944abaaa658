#include <catch2/catch.hpp>

#include <cmath>
#include <map>

#include "shufflesum/rng.hpp"
#include "shufflesum/stats.hpp"

using namespace shufflesum;

TEST_CASE("rng streams are reproducible") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  Rng base(9);
  Rng d1 = base.derive(0);
  Rng d2 = base.derive(0);
  Rng d3 = base.derive(1);
  CHECK(d1.next_u64() == d2.next_u64());
  CHECK(d1.next_u64() != d3.next_u64());
  // derive() leaves the parent untouched
  Rng fresh(9);
  CHECK(base.next_u64() == fresh.next_u64());
}

TEST_CASE("uniform_below stays in range and covers it") {
  Rng rng(5);
  std::map<std::uint64_t, int> seen;
  for (int i = 0; i < 3000; ++i) ++seen[rng.uniform_below(7)];
  REQUIRE(seen.size() == 7);
  for (const auto& [v, c] : seen) {
    CHECK(v < 7);
    CHECK(c > 300);
  }
}

TEST_CASE("chi-square p-values at known quantiles") {
  // Chi-square survival values from standard tables.
  CHECK(chi_square_p_value(3.841, 1) == Approx(0.05).margin(1e-3));
  CHECK(chi_square_p_value(18.307, 10) == Approx(0.05).margin(1e-3));
  CHECK(chi_square_p_value(29.588, 10) == Approx(0.001).margin(1e-4));
  CHECK(chi_square_p_value(0.0, 4) == 1.0);
}

TEST_CASE("chi-square accepts its own null and rejects a wrong one") {
  Rng rng(17);
  std::map<std::int64_t, std::uint64_t> counts;
  const std::uint64_t trials = 50'000;
  for (std::uint64_t t = 0; t < trials; ++t) ++counts[rng.uniform_below(10)];

  auto uniform_pmf = [](std::int64_t k) { return (k >= 0 && k < 10) ? 0.1 : 0.0; };
  const GofReport good = chi_square_integer_gof(counts, trials, uniform_pmf);
  CHECK(good.pass);

  auto skewed_pmf = [](std::int64_t k) {
    if (k < 0 || k >= 10) return 0.0;
    return k == 0 ? 0.19 : 0.09;
  };
  const GofReport bad = chi_square_integer_gof(counts, trials, skewed_pmf);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("laplace and exponential moments are sane") {
  Rng rng(31);
  double mean = 0.0, mean_abs = 0.0;
  const int trials = 200'000;
  for (int i = 0; i < trials; ++i) {
    const double x = rng.laplace(0.5);
    mean += x;
    mean_abs += std::fabs(x);
  }
  mean /= trials;
  mean_abs /= trials;
  CHECK(mean == Approx(0.0).margin(0.01));      // centered
  CHECK(mean_abs == Approx(0.5).margin(0.01));  // E|Laplace(b)| = b
}

TEST_CASE("gamma and poisson sampler moments are sane") {
  Rng rng(41);
  const int trials = 100'000;
  double gmean = 0.0;
  for (int i = 0; i < trials; ++i) gmean += rng.gamma(0.35);
  gmean /= trials;
  CHECK(gmean == Approx(0.35).margin(0.02));

  double pmean = 0.0;
  for (int i = 0; i < trials; ++i) pmean += static_cast<double>(rng.poisson(77.0));
  pmean /= trials;
  CHECK(pmean == Approx(77.0).margin(0.3));
}
