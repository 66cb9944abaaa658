#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shufflesum/errors.hpp"
#include "shufflesum/field.hpp"
#include "shufflesum/graph.hpp"
#include "shufflesum/parallel.hpp"
#include "shufflesum/permutation.hpp"
#include "shufflesum/protocol.hpp"
#include "shufflesum/rng.hpp"
#include "shufflesum/shuffler.hpp"

namespace shufflesum {

struct EmpiricalEstimate {
  double estimate = 0.0;
  double half_width = 0.0;  // 3-sigma normal approximation
};

/// A computed bound together with the preconditions that were checked and,
/// when requested, a Monte Carlo companion estimate. Bounds above 1 are
/// reported verbatim and flagged vacuous so callers see when the inequality
/// carries no information.
struct BoundReport {
  double bound = 0.0;
  std::vector<std::string> preconditions;
  bool vacuous = false;
  std::optional<EmpiricalEstimate> empirical;
  std::string note;
};

namespace detail {

inline double log_binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace detail

/// Histogram of connected-component counts over sampled communication
/// graphs. Index c holds the empirical probability of exactly c components
/// (index 0 unused).
struct ComponentHistogram {
  std::uint64_t trials = 0;
  std::vector<double> probability;
  std::vector<double> half_width;
};

/// Samples the m-round communication graph of the composed round shuffler
/// S^-1 o S' built from `model` and histograms its component counts.
inline ComponentHistogram empirical_component_dist(const ShufflerModel& model, std::size_t m,
                                                   std::uint64_t trials, std::uint64_t seed) {
  if (trials == 0) throw std::invalid_argument("empirical_component_dist: trials must be >= 1");
  const std::size_t n = model.size();
  const ShufflerModel composed = composed_round_model(model, model);
  std::vector<std::uint64_t> counts(n + 1, 0);
  std::vector<std::uint32_t> per_trial(trials);
  const Rng base(seed);
  for_each_trial(trials, [&](std::uint64_t t) {
    Rng rng = base.derive(t);
    const RoundPermutations rounds = composed.sample_parallel(m, rng);
    per_trial[t] = static_cast<std::uint32_t>(count_components(build_comm_graph(rounds)));
  });
  for (std::uint64_t t = 0; t < trials; ++t) ++counts[per_trial[t]];

  ComponentHistogram hist;
  hist.trials = trials;
  hist.probability.assign(n + 1, 0.0);
  hist.half_width.assign(n + 1, 0.0);
  for (std::size_t c = 1; c <= n; ++c) {
    const double p = static_cast<double>(counts[c]) / static_cast<double>(trials);
    hist.probability[c] = p;
    hist.half_width[c] = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
  return hist;
}

/// Upper bound on the probability that an m-round graph of a gamma-imperfect
/// shuffler has no edge between a fixed size-s subset and its complement.
/// Takes the minimum of the applicable closed forms:
///   e^(2 s m gamma)     C(n,s)^-m        for s <= n/2,
///   e^(2 (n-s) m gamma) C(n,s)^-m        for s >= n/2,
///   e^(k m gamma)       C(floor(n/2),k)^-m  for k <= min(s, n-s).
/// floor(n/2) is the conservative reading of the half-size binomial for odd n.
inline BoundReport disconnect_bound(std::uint64_t n, std::uint64_t s, std::uint64_t m,
                                    double gamma, std::optional<std::uint64_t> k = std::nullopt) {
  if (s < 1 || s >= n) throw std::invalid_argument("disconnect_bound: need 1 <= s <= n-1");
  if (m < 1) throw std::invalid_argument("disconnect_bound: need m >= 1");
  if (!(gamma >= 0.0)) throw std::invalid_argument("disconnect_bound: gamma must be >= 0");
  const double md = static_cast<double>(m);
  const double log_cns = detail::log_binomial(n, s);
  double best = std::numeric_limits<double>::infinity();
  if (2 * s <= n)
    best = std::min(best, std::exp(2.0 * static_cast<double>(s) * md * gamma - md * log_cns));
  if (2 * s >= n)
    best = std::min(best,
                    std::exp(2.0 * static_cast<double>(n - s) * md * gamma - md * log_cns));
  const std::uint64_t k_max = std::min(s, n - s);
  const std::uint64_t half = n / 2;
  auto k_bound = [&](std::uint64_t kk) {
    return std::exp(static_cast<double>(kk) * md * gamma -
                    md * detail::log_binomial(half, kk));
  };
  if (k) {
    if (*k > k_max) throw std::invalid_argument("disconnect_bound: k above min(s, n-s)");
    best = std::min(best, k_bound(*k));
  } else {
    for (std::uint64_t kk = 0; kk <= std::min(k_max, half); ++kk)
      best = std::min(best, k_bound(kk));
  }
  BoundReport report;
  report.bound = best;
  report.preconditions = {"1 <= s <= n-1", "m >= 1", "gamma >= 0"};
  report.vacuous = best > 1.0;
  return report;
}

/// Probability that the m-round communication graph of `model` has no edge
/// crossing (subset, complement). Exact mode integrates the model pmf per
/// round; a permutation avoids crossing edges iff it maps the subset onto
/// itself.
inline double empirical_disconnect_prob(const ShufflerModel& model,
                                        const std::vector<std::uint32_t>& subset, std::size_t m,
                                        VerifyMode mode, std::uint64_t trials = 0,
                                        std::uint64_t seed = 0) {
  const std::size_t n = model.size();
  std::vector<bool> in_subset(n, false);
  for (std::uint32_t v : subset) {
    if (v >= n) throw std::invalid_argument("empirical_disconnect_prob: subset out of range");
    in_subset[v] = true;
  }
  auto preserves_subset = [&](const Permutation& p) {
    for (std::size_t i = 0; i < n; ++i)
      if (in_subset[i] != in_subset[p(i)]) return false;
    return true;
  };

  if (mode == VerifyMode::exact) {
    if (!model.has_exact_pmf())
      throw unsupported_model_error("empirical_disconnect_prob: exact mode needs an exact pmf");
    const std::vector<Permutation> perms = enumerate_permutations(n);
    const std::vector<double> pmf = model.exact_pmf_table();
    double preserved = 0.0;
    for (std::size_t i = 0; i < perms.size(); ++i)
      if (preserves_subset(perms[i])) preserved += pmf[i];
    return std::pow(preserved, static_cast<double>(m));
  }

  if (trials == 0)
    throw std::invalid_argument("empirical_disconnect_prob: monte_carlo mode needs trials");
  std::vector<std::uint8_t> crossing_free(trials, 0);
  const Rng base(seed);
  for_each_trial(trials, [&](std::uint64_t t) {
    Rng rng = base.derive(t);
    const RoundPermutations rounds = model.sample_parallel(m, rng);
    bool free_of_crossings = true;
    for (const Permutation& p : rounds) {
      if (!preserves_subset(p)) {
        free_of_crossings = false;
        break;
      }
    }
    crossing_free[t] = free_of_crossings ? 1 : 0;
  });
  std::uint64_t hits = 0;
  for (std::uint8_t f : crossing_free) hits += f;
  return static_cast<double>(hits) / static_cast<double>(trials);
}

/// Upper bound on P[graph has exactly c components]:
/// 2^(c-1)/c! (e/n)^((m-1)(c-1)/(32 e^(4 gamma))) e^(2 gamma (m-1)(c-1)).
inline double component_bound(std::uint64_t n, std::uint64_t c, std::uint64_t m, double gamma) {
  if (n < 19) throw precondition_error("precondition violated: n >= 19");
  if (static_cast<double>(m) < 8.0 * std::exp(4.0 * gamma))
    throw precondition_error("precondition violated: m >= 8 e^(4 gamma)");
  if (c < 1 || c > n) throw precondition_error("precondition violated: 1 <= c <= n");
  const double cm1 = static_cast<double>(c - 1);
  const double mm1 = static_cast<double>(m - 1);
  const double e4g = std::exp(4.0 * gamma);
  const double log_value = cm1 * std::log(2.0) -
                           std::lgamma(static_cast<double>(c) + 1.0) +
                           (mm1 * cm1 / (32.0 * e4g)) *
                               (1.0 - std::log(static_cast<double>(n))) +
                           2.0 * gamma * mm1 * cm1;
  return std::exp(log_value);
}

/// Upper bound on E[q^C(G)] for the m-round graph of a gamma-imperfect
/// shuffler: q + 3 q^2 e^(2 gamma (m-1)) (e/n)^((m-1)/(32 e^(4 gamma))).
inline BoundReport q_power_expectation_bound(std::uint64_t n, std::uint64_t m, std::uint64_t q,
                                             double gamma) {
  detail::check_security_preconditions(n, m, q, gamma);
  const double mm1 = static_cast<double>(m - 1);
  const double e4g = std::exp(4.0 * gamma);
  const double qd = static_cast<double>(q);
  BoundReport report;
  report.bound = qd + 3.0 * qd * qd *
                          std::exp(2.0 * gamma * mm1 +
                                   (mm1 / (32.0 * e4g)) *
                                       (1.0 - std::log(static_cast<double>(n))));
  report.preconditions = {"n >= 19", "m >= 8 e^(4 gamma)",
                          "q <= (n/e)^((m-1)/(32 e^(4 gamma))) e^(2 gamma (1-m))"};
  return report;
}

/// Same bound plus a Monte Carlo estimate of E[q^C(G)] over the composed
/// round shuffler built from `model`. The estimate is flagged when its
/// 3-sigma lower edge already exceeds the bound, which marks models that are
/// not gamma-imperfect at these parameters.
inline BoundReport q_power_expectation_bound_with_estimate(std::uint64_t n, std::uint64_t m,
                                                           std::uint64_t q, double gamma,
                                                           const ShufflerModel& model,
                                                           std::uint64_t trials,
                                                           std::uint64_t seed) {
  BoundReport report = q_power_expectation_bound(n, m, q, gamma);
  if (model.size() != n)
    throw std::invalid_argument("q_power_expectation_bound: model size mismatch");
  if (trials == 0) throw std::invalid_argument("q_power_expectation_bound: trials must be >= 1");
  const ShufflerModel composed = composed_round_model(model, model);
  std::vector<double> values(trials);
  const Rng base(seed);
  for_each_trial(trials, [&](std::uint64_t t) {
    Rng rng = base.derive(t);
    const RoundPermutations rounds = composed.sample_parallel(m, rng);
    values[t] = std::pow(static_cast<double>(q),
                         static_cast<double>(count_components(build_comm_graph(rounds))));
  });
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(trials);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(trials);
  const double half_width = 3.0 * std::sqrt(var / static_cast<double>(trials));
  report.empirical = EmpiricalEstimate{mean, half_width};
  if (mean - half_width > report.bound)
    report.note = "estimate exceeds the bound: the supplied model is not gamma-imperfect "
                  "at this distortion";
  return report;
}

/// Exact E[q^C(G)] where G is the m-round communication graph with rounds
/// drawn i.i.d. from `per_round_model`. Enumerates all (n!)^m round tuples.
inline double exact_q_component_expectation(const ShufflerModel& per_round_model, std::size_t m,
                                            double q, std::uint64_t tuple_cap = 10'000'000) {
  if (!per_round_model.has_exact_pmf())
    throw unsupported_model_error("exact_q_component_expectation: model has no exact pmf");
  const std::size_t n = per_round_model.size();
  const std::vector<Permutation> perms = enumerate_permutations(n);
  const std::vector<double> pmf = per_round_model.exact_pmf_table();
  double tuples = 1.0;
  for (std::size_t j = 0; j < m; ++j) {
    tuples *= static_cast<double>(perms.size());
    if (tuples > static_cast<double>(tuple_cap))
      throw std::invalid_argument("exact_q_component_expectation: (n!)^m above cap");
  }
  double total = 0.0;
  std::vector<const Permutation*> stack(m, nullptr);
  std::function<void(std::size_t, double)> recurse = [&](std::size_t round, double prob) {
    if (prob == 0.0) return;
    if (round == m) {
      RoundPermutations rounds;
      rounds.reserve(m);
      for (const Permutation* p : stack) rounds.push_back(*p);
      total += prob * std::pow(q, static_cast<double>(
                                      count_components(build_comm_graph(rounds))));
      return;
    }
    for (std::size_t i = 0; i < perms.size(); ++i) {
      stack[round] = &perms[i];
      recurse(round + 1, prob * pmf[i]);
    }
  };
  recurse(0, 1.0);
  return total;
}

/// Exact output law of the split-and-mix protocol on input x: probability
/// of every analyst view in G^(mn), indexed base-q with digit k at message
/// slot k of the round-major flattening.
inline std::vector<double> exact_protocol_distribution(const FieldVec& x, std::size_t m,
                                                       const ShufflerModel& model,
                                                       std::uint64_t state_cap = 1'000'000) {
  const std::size_t n = x.size();
  if (model.size() != n)
    throw std::invalid_argument("exact_protocol_distribution: model size mismatch");
  if (!model.has_exact_pmf())
    throw unsupported_model_error("exact_protocol_distribution: model has no exact pmf");
  if (m == 0) throw std::invalid_argument("exact_protocol_distribution: need m >= 1");
  const std::uint64_t q = x.modulus.q;
  double states = 1.0;
  for (std::size_t k = 0; k < m * n; ++k) {
    states *= static_cast<double>(q);
    if (states > static_cast<double>(state_cap))
      throw std::invalid_argument("exact_protocol_distribution: q^(mn) above cap");
  }
  const std::uint64_t total_states = static_cast<std::uint64_t>(states);

  const std::vector<Permutation> perms = enumerate_permutations(n);
  const std::vector<double> pmf = model.exact_pmf_table();

  // Powers of q addressing message slot (round j, position i) = j*n + i.
  std::vector<std::uint64_t> slot_weight(m * n, 1);
  for (std::size_t k = 1; k < m * n; ++k) slot_weight[k] = slot_weight[k - 1] * q;

  std::vector<double> dist(total_states, 0.0);
  const std::size_t free_shares = n * (m - 1);
  double share_prob = 1.0;
  for (std::size_t k = 0; k < free_shares; ++k) share_prob /= static_cast<double>(q);

  std::vector<std::uint64_t> digits(free_shares, 0);
  std::vector<std::vector<std::uint64_t>> columns(m, std::vector<std::uint64_t>(n));
  // Per round: the base-q index contribution of each possible permutation.
  std::vector<std::vector<std::pair<double, std::uint64_t>>> round_support(m);

  for (;;) {
    // First m-1 shares of player i are free digits; the last balances.
    for (std::size_t i = 0; i < n; ++i) {
      uint128 acc = 0;
      for (std::size_t j = 0; j + 1 < m; ++j) {
        const std::uint64_t v = digits[i * (m - 1) + j];
        columns[j][i] = v;
        acc += v;
      }
      columns[m - 1][i] =
          (x.values[i] % q + q - static_cast<std::uint64_t>(acc % q)) % q;
    }
    for (std::size_t j = 0; j < m; ++j) {
      auto& support = round_support[j];
      support.clear();
      for (std::size_t pi = 0; pi < perms.size(); ++pi) {
        if (pmf[pi] == 0.0) continue;
        std::uint64_t idx = 0;
        for (std::size_t i = 0; i < n; ++i)
          idx += columns[j][i] * slot_weight[j * n + perms[pi](i)];
        support.emplace_back(pmf[pi], idx);
      }
    }
    // Rounds are independent given the shares: take the product measure.
    std::function<void(std::size_t, double, std::uint64_t)> expand =
        [&](std::size_t round, double prob, std::uint64_t idx) {
          if (round == m) {
            dist[idx] += share_prob * prob;
            return;
          }
          for (const auto& [p, contribution] : round_support[round])
            expand(round + 1, prob * p, idx + contribution);
        };
    expand(0, 1.0, 0);

    // Odometer over the free shares.
    std::size_t pos = 0;
    while (pos < free_shares) {
      if (++digits[pos] < q) break;
      digits[pos] = 0;
      ++pos;
    }
    if (pos == free_shares) break;
    if (free_shares == 0) break;
  }
  return dist;
}

/// Collision probability of two independent executions on the same input:
/// sum_v P[output = v]^2.
inline double exact_collision_prob(const FieldVec& x, std::size_t m, const ShufflerModel& model,
                                   std::uint64_t state_cap = 1'000'000) {
  const std::vector<double> dist = exact_protocol_distribution(x, m, model, state_cap);
  double total = 0.0;
  for (double p : dist) total += p * p;
  return total;
}

/// Collision probability averaged over a uniformly random input vector,
/// the quantity the average-case security chain bounds.
inline double average_collision_prob(std::size_t n, std::size_t m, FieldModulus q,
                                     const ShufflerModel& model,
                                     std::uint64_t state_cap = 1'000'000) {
  std::vector<std::uint64_t> values(n, 0);
  double total = 0.0;
  std::uint64_t inputs = 0;
  for (;;) {
    total += exact_collision_prob(FieldVec(q, values), m, model, state_cap);
    ++inputs;
    std::size_t pos = 0;
    while (pos < n) {
      if (++values[pos] < q.q) break;
      values[pos] = 0;
      ++pos;
    }
    if (pos == n) break;
  }
  return total / static_cast<double>(inputs);
}

struct TvdSummary {
  double worst = 0.0;
  double average = 0.0;              // mean over all ordered same-sum pairs
  double directional_average = 0.0;  // max over zero-sum differences d of
                                     // the mean of TVD(P(X), P(X-d)), X uniform
};

/// Exact total variation distance between protocol output laws over every
/// pair of same-sum inputs.
///
/// Three summaries of the same table:
///  - worst: the maximum over same-sum pairs (worst-case security).
///  - average: the mean over uniformly random ordered same-sum pairs; this
///    is what the collision-probability chain bounds.
///  - directional_average: the largest fixed-difference mean. Adding one
///    message reduces the worst case of the larger protocol to exactly this
///    quantity (the coupling that proves it fixes the input difference), so
///    it, not `average`, dominates worst(m+1). The all-pairs mean is diluted
///    by same-law pairs and can be strictly smaller.
inline TvdSummary exact_tvd_same_sum(std::size_t n, std::size_t m, FieldModulus q,
                                     const ShufflerModel& model,
                                     std::uint64_t state_cap = 1'000'000) {
  // Group the q^n inputs by their sum; classes have equal size q^(n-1), so
  // a uniform same-sum pair is a uniform class followed by two independent
  // uniform members.
  std::vector<std::vector<std::vector<std::uint64_t>>> classes(q.q);
  std::vector<std::uint64_t> values(n, 0);
  for (;;) {
    classes[field_reduce_sum(values, q)].push_back(values);
    std::size_t pos = 0;
    while (pos < n) {
      if (++values[pos] < q.q) break;
      values[pos] = 0;
      ++pos;
    }
    if (pos == n) break;
  }

  TvdSummary summary;
  double pair_total = 0.0;
  std::uint64_t pair_count = 0;
  std::uint64_t input_count = 0;
  // Keyed by the base-q encoding of the componentwise difference (a - b).
  std::vector<double> tvd_by_difference(
      static_cast<std::size_t>(std::pow(double(q.q), double(n))), 0.0);
  for (const auto& members : classes) {
    std::vector<std::vector<double>> laws;
    laws.reserve(members.size());
    for (const auto& member : members)
      laws.push_back(exact_protocol_distribution(FieldVec(q, member), m, model, state_cap));
    input_count += members.size();
    for (std::size_t a = 0; a < laws.size(); ++a) {
      for (std::size_t b = 0; b < laws.size(); ++b) {
        double tvd = 0.0;
        for (std::size_t v = 0; v < laws[a].size(); ++v)
          tvd += std::fabs(laws[a][v] - laws[b][v]);
        tvd *= 0.5;
        summary.worst = std::max(summary.worst, tvd);
        pair_total += tvd;
        ++pair_count;
        std::uint64_t diff_index = 0, weight = 1;
        for (std::size_t i = 0; i < n; ++i) {
          diff_index += ((members[a][i] + q.q - members[b][i]) % q.q) * weight;
          weight *= q.q;
        }
        tvd_by_difference[diff_index] += tvd;
      }
    }
  }
  summary.average = pair_total / static_cast<double>(pair_count);
  for (double total : tvd_by_difference)
    summary.directional_average =
        std::max(summary.directional_average, total / static_cast<double>(input_count));
  return summary;
}

struct AmplificationResult {
  double epsilon_shuffle = 0.0;
  double epsilon_imperfect = 0.0;
};

/// Privacy amplification of an epsilon0-DP local randomizer under a uniform
/// shuffle, and the imperfect-shuffle variant which adds the distortion to
/// the amplified epsilon. Natural logarithms throughout.
inline AmplificationResult amplification_bound(double epsilon0, std::uint64_t n, double delta,
                                               double gamma) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("amplification_bound: delta must lie in (0,1)");
  if (!(epsilon0 >= 0.0))
    throw std::invalid_argument("amplification_bound: epsilon0 must be >= 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("amplification_bound: gamma must be >= 0");
  const double nd = static_cast<double>(n);
  const double validity = std::log(nd / (16.0 * std::log(2.0 / delta)));
  if (!(epsilon0 <= validity))
    throw precondition_error("precondition violated: epsilon0 <= ln(n/(16 ln(2/delta)))");
  const double e0 = std::exp(epsilon0);
  const double amplified =
      ((e0 - 1.0) / (e0 + 1.0)) * 8.0 * std::sqrt(e0 * std::log(4.0 / delta)) / std::sqrt(nd);
  AmplificationResult r;
  r.epsilon_shuffle = std::log1p(amplified);
  r.epsilon_imperfect = r.epsilon_shuffle + gamma;
  return r;
}

}  // namespace shufflesum
