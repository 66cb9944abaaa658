#include <catch2/catch.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "shufflesum/shuffler.hpp"
#include "shufflesum/stats.hpp"

using namespace shufflesum;

namespace {

// Observed counts per lexicographic rank.
std::vector<double> sample_histogram(const ShufflerModel& model, std::uint64_t trials,
                                     std::uint64_t seed) {
  std::vector<double> counts(factorial(model.size()), 0.0);
  Rng rng(seed);
  for (std::uint64_t t = 0; t < trials; ++t)
    counts[lexicographic_rank(model.sample(rng))] += 1.0;
  return counts;
}

GofReport fit_against_pmf(const ShufflerModel& model, const std::vector<double>& pmf_table,
                          std::uint64_t trials, std::uint64_t seed) {
  const std::vector<double> observed = sample_histogram(model, trials, seed);
  std::vector<double> expected(pmf_table.size());
  for (std::size_t i = 0; i < pmf_table.size(); ++i)
    expected[i] = pmf_table[i] * double(trials);
  return chi_square_from_bins(observed, expected);
}

}  // namespace

TEST_CASE("point mass and degenerate uniform sampling") {
  const Permutation p = Permutation::from_one_based({3, 1, 2});
  const ShufflerModel pm = ShufflerModel::point_mass(p);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) CHECK(pm.sample(rng) == p);

  const ShufflerModel u1 = ShufflerModel::uniform(1);
  CHECK(u1.sample(rng) == Permutation::identity(1));
}

TEST_CASE("uniform sampler frequencies on two players") {
  const ShufflerModel u = ShufflerModel::uniform(2);
  Rng rng(2);
  const std::uint64_t trials = 100'000;
  std::uint64_t identity_count = 0;
  for (std::uint64_t t = 0; t < trials; ++t) identity_count += u.sample(rng).is_identity();
  CHECK(std::fabs(identity_count / double(trials) - 0.5) < 0.01);
}

TEST_CASE("samplers are deterministic given the seed") {
  const std::vector<ShufflerModel> models = {
      ShufflerModel::uniform(5),
      ShufflerModel::cayley_mallows(5, 0.4),
      ShufflerModel::timestamp_laplace(3.0, {0.1, 0.4, 0.2, 0.9, 0.5}),
      ShufflerModel::composed(ShufflerModel::uniform(5), ShufflerModel::cayley_mallows(5, 0.2)),
  };
  for (const auto& model : models) {
    Rng a(77), b(77);
    for (int i = 0; i < 10; ++i) REQUIRE(model.sample(a) == model.sample(b));
  }
}

TEST_CASE("exact pmf reference values") {
  const ShufflerModel u3 = ShufflerModel::uniform(3);
  for (const auto& p : enumerate_permutations(3))
    CHECK(u3.exact_pmf(p) == Approx(1.0 / 6.0).epsilon(1e-12));

  // Zero dispersion collapses to uniform.
  const ShufflerModel cm0 = ShufflerModel::cayley_mallows(4, 0.0);
  for (const auto& p : enumerate_permutations(4))
    CHECK(cm0.exact_pmf(p) == Approx(1.0 / 24.0).epsilon(1e-12));

  // Two players, weights {1, 1/2} normalize to {2/3, 1/3}.
  const ShufflerModel cm2 = ShufflerModel::cayley_mallows(2, std::log(2.0));
  CHECK(cm2.exact_pmf(Permutation::identity(2)) == Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(cm2.exact_pmf(Permutation::from_one_based({2, 1})) == Approx(1.0 / 3.0).epsilon(1e-12));

  const ShufflerModel tl = ShufflerModel::timestamp_laplace(1.0, {0.0, 1.0});
  CHECK_THROWS_AS(tl.exact_pmf(Permutation::identity(2)), unsupported_model_error);
  CHECK_FALSE(tl.has_exact_pmf());
}

TEST_CASE("exact pmf tables sum to one for every exact variant") {
  for (std::size_t n = 2; n <= 6; ++n) {
    std::vector<ShufflerModel> models = {
        ShufflerModel::uniform(n),
        ShufflerModel::cayley_mallows(n, 0.35),
        ShufflerModel::point_mass(Permutation::from_one_based([n] {
          std::vector<std::uint32_t> m(n);
          for (std::size_t i = 0; i < n; ++i) m[i] = static_cast<std::uint32_t>((i + 1) % n + 1);
          return m;
        }())),
    };
    models.push_back(ShufflerModel::composed(ShufflerModel::cayley_mallows(n, 0.2),
                                             ShufflerModel::uniform(n)));
    models.push_back(ShufflerModel::inverse_of(ShufflerModel::cayley_mallows(n, 0.7)));
    for (const auto& model : models) {
      const std::vector<double> table = model.exact_pmf_table();
      double total = 0.0;
      for (double p : table) total += p;
      REQUIRE(total == Approx(1.0).epsilon(1e-12));
      // Table agrees with pointwise queries.
      const auto perms = enumerate_permutations(n);
      for (std::size_t i = 0; i < perms.size(); i += 7)
        REQUIRE(table[i] == Approx(model.exact_pmf(perms[i])).margin(1e-13));
    }
  }
}

TEST_CASE("parallel rounds are independent and reproducible") {
  const ShufflerModel pm = ShufflerModel::point_mass(Permutation::identity(4));
  Rng rng(5);
  const RoundPermutations rounds = pm.sample_parallel(3, rng);
  REQUIRE(rounds.size() == 3);
  for (const auto& r : rounds) CHECK(r == Permutation::identity(4));

  const ShufflerModel u = ShufflerModel::uniform(3);
  Rng a(9), b(9);
  CHECK(u.sample_parallel(4, a) == u.sample_parallel(4, b));
  // Consecutive calls on the same stream differ.
  Rng c(9);
  const RoundPermutations first = u.sample_parallel(4, c);
  const RoundPermutations second = u.sample_parallel(4, c);
  CHECK(first != second);

  CHECK_THROWS_AS(u.sample_parallel(0, a), std::invalid_argument);
}

TEST_CASE("uniform round pairs are equidistributed") {
  const ShufflerModel u = ShufflerModel::uniform(2);
  Rng rng(6);
  const std::uint64_t trials = 100'000;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> counts;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const RoundPermutations rounds = u.sample_parallel(2, rng);
    ++counts[{lexicographic_rank(rounds[0]), lexicographic_rank(rounds[1])}];
  }
  REQUIRE(counts.size() == 4);
  for (const auto& [key, count] : counts)
    CHECK(std::fabs(count / double(trials) - 0.25) < 0.01);
}

TEST_CASE("mallows samplers match the exact pmf") {
  const Permutation center = Permutation::from_one_based({2, 3, 1, 4});
  const ShufflerModel cm = ShufflerModel::cayley_mallows(4, 0.45, center);
  const std::vector<double> pmf = cm.exact_pmf_table();

  // Inverse-CDF route (n within the enumeration cap).
  CHECK(fit_against_pmf(cm, pmf, 100'000, 7).pass);

  // The insertion route must produce the same law; weight one side with it
  // by sampling through a model forced beyond the cap is not possible for
  // n=4, so drive the internal path via a size-9 check of marginals instead:
  // distance from center of an insertion-sampled permutation matches the
  // closed-form distance distribution derived from the pmf table.
  const ShufflerModel big = ShufflerModel::cayley_mallows(9, 0.45);
  Rng rng(8);
  std::map<std::int64_t, std::uint64_t> distance_counts;
  const std::uint64_t trials = 100'000;
  for (std::uint64_t t = 0; t < trials; ++t)
    ++distance_counts[static_cast<std::int64_t>(
        swap_distance(big.sample(rng), Permutation::identity(9)))];
  // Distance is a sum of independent indicators: P[X_j = 1] = j theta / (1 + j theta),
  // j = 1..n-1. Convolve exactly for the expected distance pmf.
  const double theta = std::exp(-0.45);
  std::vector<double> dist_pmf{1.0};
  for (std::size_t j = 1; j <= 8; ++j) {
    const double pj = double(j) * theta / (1.0 + double(j) * theta);
    std::vector<double> next(dist_pmf.size() + 1, 0.0);
    for (std::size_t k = 0; k < dist_pmf.size(); ++k) {
      next[k] += dist_pmf[k] * (1.0 - pj);
      next[k + 1] += dist_pmf[k] * pj;
    }
    dist_pmf = std::move(next);
  }
  const GofReport gof = chi_square_integer_gof(
      distance_counts, trials,
      [&](std::int64_t k) {
        return (k >= 0 && k < std::int64_t(dist_pmf.size())) ? dist_pmf[k] : 0.0;
      });
  CHECK(gof.pass);
}

TEST_CASE("timestamp shuffler with equal offsets is uniform") {
  const ShufflerModel tl = ShufflerModel::timestamp_laplace(2.0, std::vector<double>(4, 0.5));
  const std::vector<double> uniform_pmf(24, 1.0 / 24.0);
  CHECK(fit_against_pmf(tl, uniform_pmf, 100'000, 10).pass);
}

TEST_CASE("timestamp shuffler construction guards") {
  CHECK_THROWS_AS(ShufflerModel::timestamp_laplace(0.0, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ShufflerModel::timestamp_laplace(-1.0, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ShufflerModel::timestamp_laplace(1.0, {0.0, 1.5}), std::invalid_argument);
}

TEST_CASE("timestamp shuffler with spread offsets favors the identity") {
  // Offsets (0, 0.5, 1) with distortion 20 (noise scale 0.1): inversions are
  // rare, so the arrival order almost always matches the offsets. The value
  // below is a frozen regression from the first run of this configuration.
  const ShufflerModel tl = ShufflerModel::timestamp_laplace(20.0, {0.0, 0.5, 1.0});
  Rng rng(11);
  const std::uint64_t trials = 100'000;
  std::uint64_t identity_count = 0;
  for (std::uint64_t t = 0; t < trials; ++t) identity_count += tl.sample(rng).is_identity();
  const double p_identity = identity_count / double(trials);
  CHECK(p_identity > 0.5);
  CHECK(p_identity == Approx(0.97572).margin(0.005));
}

TEST_CASE("imperfectness audit: exact reference models") {
  CHECK(verify_imperfectness(ShufflerModel::uniform(4), VerifyMode::exact)
            .max_log_ratio_per_swap == Approx(0.0).margin(1e-12));

  const auto cm = verify_imperfectness(ShufflerModel::cayley_mallows(4, 0.3), VerifyMode::exact);
  CHECK(cm.max_log_ratio_per_swap == Approx(0.3).margin(1e-9));
  CHECK_FALSE(cm.is_estimate);

  const auto pm = verify_imperfectness(
      ShufflerModel::point_mass(Permutation::from_one_based({2, 1, 3})), VerifyMode::exact);
  CHECK(std::isinf(pm.max_log_ratio_per_swap));
}

TEST_CASE("imperfectness audit: dispersion is recovered exactly") {
  for (std::size_t n : {2, 3, 4, 5}) {
    for (double gamma : {0.1, 0.3}) {
      const auto report =
          verify_imperfectness(ShufflerModel::cayley_mallows(n, gamma), VerifyMode::exact);
      REQUIRE(report.max_log_ratio_per_swap == Approx(gamma).margin(1e-9));
    }
  }
}

TEST_CASE("imperfectness audit: monte carlo mode estimates") {
  const auto est = verify_imperfectness(ShufflerModel::cayley_mallows(3, 0.25),
                                        VerifyMode::monte_carlo, 200'000, 12);
  CHECK(est.is_estimate);
  CHECK(est.samples == 200'000);
  CHECK(est.max_log_ratio_per_swap == Approx(0.25).margin(0.05));

  // Statistical-only route for the timestamp model.
  const auto tl = verify_imperfectness(
      ShufflerModel::timestamp_laplace(2.0, std::vector<double>(3, 0.5)),
      VerifyMode::monte_carlo, 200'000, 13);
  CHECK(tl.is_estimate);
  CHECK(tl.max_log_ratio_per_swap < 0.1);  // exchangeable, so near zero

  CHECK_THROWS_AS(verify_imperfectness(
                      ShufflerModel::timestamp_laplace(2.0, std::vector<double>(3, 0.5)),
                      VerifyMode::exact),
                  unsupported_model_error);
}

TEST_CASE("composed round model reference cases") {
  const Permutation sigma = Permutation::from_one_based({3, 1, 2});

  // Same point mass on both sides cancels to the identity.
  const ShufflerModel both_pm =
      composed_round_model(ShufflerModel::point_mass(sigma), ShufflerModel::point_mass(sigma));
  CHECK(both_pm.exact_pmf(Permutation::identity(3)) == Approx(1.0).epsilon(1e-12));

  // Point-mass outer leg relabels; the mallows dispersion survives.
  const ShufflerModel relabeled = composed_round_model(ShufflerModel::point_mass(sigma),
                                                       ShufflerModel::cayley_mallows(3, 0.4));
  const auto report = verify_imperfectness(relabeled, VerifyMode::exact);
  CHECK(report.max_log_ratio_per_swap == Approx(0.4).margin(1e-9));

  // Uniform composed with uniform stays uniform.
  const ShufflerModel uu =
      composed_round_model(ShufflerModel::uniform(3), ShufflerModel::uniform(3));
  for (const auto& p : enumerate_permutations(3))
    CHECK(uu.exact_pmf(p) == Approx(1.0 / 6.0).epsilon(1e-12));

  CHECK_THROWS_AS(composed_round_model(ShufflerModel::uniform(3), ShufflerModel::uniform(4)),
                  std::invalid_argument);
}

TEST_CASE("composition preserves imperfectness of the inner model") {
  // For every pair (s imperfect at gamma, s' arbitrary exact), the round
  // model S^-1 o S' stays within gamma of s.
  const std::size_t n = 4;
  const std::vector<std::pair<ShufflerModel, double>> imperfect = {
      {ShufflerModel::uniform(n), 0.0},
      {ShufflerModel::cayley_mallows(n, 0.25), 0.25},
      {ShufflerModel::cayley_mallows(n, 0.6, Permutation::from_one_based({2, 1, 4, 3})), 0.6},
  };
  const std::vector<ShufflerModel> arbitrary = {
      ShufflerModel::uniform(n),
      ShufflerModel::cayley_mallows(n, 0.9),
      ShufflerModel::point_mass(Permutation::from_one_based({4, 3, 2, 1})),
  };
  for (const auto& [s, gamma] : imperfect) {
    for (const auto& s_prime : arbitrary) {
      // Imperfect leg as the inner shuffler (the post-processing statement)...
      const auto inner_report =
          verify_imperfectness(composed_round_model(s_prime, s), VerifyMode::exact);
      REQUIRE(inner_report.max_log_ratio_per_swap <= gamma + 1e-9);
      // ...and as the inverted outer leg; swap distance is bi-invariant, so
      // the same guarantee holds on this side.
      const auto outer_report =
          verify_imperfectness(composed_round_model(s, s_prime), VerifyMode::exact);
      REQUIRE(outer_report.max_log_ratio_per_swap <= gamma + 1e-9);
    }
  }
}
