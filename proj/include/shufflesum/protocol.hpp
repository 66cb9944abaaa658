#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shufflesum/errors.hpp"
#include "shufflesum/field.hpp"
#include "shufflesum/noise.hpp"
#include "shufflesum/rng.hpp"
#include "shufflesum/shuffler.hpp"

namespace shufflesum {

/// One named validity check of a parameter bundle.
struct ParamCheck {
  std::string name;
  bool holds = false;
};

/// Parameter bundle for one protocol instance.
struct ProtocolParams {
  std::uint64_t players = 0;              // n
  std::uint64_t messages_per_player = 0;  // m
  std::uint64_t modulus = 0;              // q
  double precision = 0.0;                 // p = sqrt(n), kept real-valued
  double epsilon = 0.0;
  double delta = 0.0;
  double distortion = 0.0;                // gamma
  double sigma = 0.0;

  bool basic_valid() const {
    return players >= 1 && messages_per_player >= 1 && modulus >= 2;
  }

  /// Preconditions of the security planning theorems, each by name.
  std::vector<ParamCheck> planning_checks() const;
};

/// n x m grid of field elements, stored round-major so each round's column
/// is contiguous. Row i carries player i's shares.
struct MessageMatrix {
  FieldModulus modulus;
  std::size_t players = 0;
  std::size_t rounds = 0;
  std::vector<std::uint64_t> cells;  // cells[j * players + i]

  MessageMatrix(FieldModulus q, std::size_t n, std::size_t m)
      : modulus(q), players(n), rounds(m), cells(n * m, 0) {}

  std::uint64_t& at(std::size_t player, std::size_t round) {
    return cells[round * players + player];
  }
  std::uint64_t at(std::size_t player, std::size_t round) const {
    return cells[round * players + player];
  }
};

/// One protocol execution. The analyst is shown only the shuffled matrix;
/// inputs and round permutations are retained for debugging and exact
/// verification and never enter the analyst view.
struct Transcript {
  MessageMatrix shuffled;
  RoundPermutations rounds;
  std::vector<std::uint64_t> inputs;

  /// Round-major flattening of the shuffled matrix; the value vector whose
  /// distribution the security analysis studies.
  std::vector<std::uint64_t> analyst_view() const { return shuffled.cells; }
};

/// Additive shares of x: the first m-1 are i.i.d. uniform on [0, q) and the
/// last balances the sum, which is exactly uniform over all valid tuples.
inline std::vector<std::uint64_t> split(std::uint64_t x, std::size_t m, FieldModulus q,
                                        Rng& rng) {
  if (m == 0) throw std::invalid_argument("split: need at least one share");
  std::vector<std::uint64_t> shares(m);
  uint128 running = 0;
  for (std::size_t j = 0; j + 1 < m; ++j) {
    shares[j] = rng.uniform_below(q.q);
    running += shares[j];
  }
  const std::uint64_t partial = static_cast<std::uint64_t>(running % q.q);
  shares[m - 1] = (x % q.q + q.q - partial) % q.q;
  return shares;
}

/// Split every input and shuffle each round's column by an independent
/// draw from the model.
inline Transcript run_field_protocol(const FieldVec& inputs, std::size_t m,
                                     const ShufflerModel& model, Rng& rng) {
  const std::size_t n = inputs.size();
  if (model.size() != n)
    throw std::invalid_argument("run_field_protocol: model size does not match inputs");
  MessageMatrix matrix(inputs.modulus, n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::uint64_t> shares = split(inputs.values[i], m, inputs.modulus, rng);
    for (std::size_t j = 0; j < m; ++j) matrix.at(i, j) = shares[j];
  }
  RoundPermutations rounds = model.sample_parallel(m, rng);
  MessageMatrix out(inputs.modulus, n, m);
  for (std::size_t j = 0; j < m; ++j) {
    const Permutation& p = rounds[j];
    for (std::size_t i = 0; i < n; ++i) out.at(p(i), j) = matrix.at(i, j);
  }
  return Transcript{std::move(out), std::move(rounds), inputs.values};
}

/// Reconstruct the pre-shuffle matrix from a transcript.
inline MessageMatrix unshuffled_matrix(const Transcript& t) {
  MessageMatrix m(t.shuffled.modulus, t.shuffled.players, t.shuffled.rounds);
  for (std::size_t j = 0; j < t.shuffled.rounds; ++j) {
    const Permutation& p = t.rounds[j];
    for (std::size_t i = 0; i < t.shuffled.players; ++i)
      m.at(i, j) = t.shuffled.at(p(i), j);
  }
  return m;
}

/// The analyst's sum: all mn shuffled messages reduced mod q.
inline std::uint64_t aggregate(const Transcript& t) {
  return field_reduce_sum(t.shuffled.cells, t.shuffled.modulus);
}

/// CSV with columns round,slot,value (0-based indices).
inline void transcript_to_csv(const Transcript& t, std::ostream& os) {
  os << "round,slot,value\n";
  for (std::size_t j = 0; j < t.shuffled.rounds; ++j)
    for (std::size_t i = 0; i < t.shuffled.players; ++i)
      os << j << ',' << i << ',' << t.shuffled.at(i, j) << '\n';
}

/// Polya noise is the one randomness source this switch controls;
/// randomized rounding stays active either way. Test-only: the CLI refuses
/// disabled noise outside test mode.
enum class NoiseMode { enabled, disabled_for_tests };

/// Client-side encoding of x in [0,1]: randomized rounding at precision
/// p = sqrt(n), then a difference of two Polya(1/n, e^(-epsilon/p)) draws,
/// wrapped into [0, q) for q = choose_modulus(n).
inline std::uint64_t encode_real(double x, double epsilon, std::uint64_t n, Rng& rng,
                                 NoiseMode noise = NoiseMode::enabled) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("encode_real: x outside [0,1]");
  const NoiseParams params = NoiseParams::for_protocol(epsilon, n);
  const FieldModulus q = choose_modulus(n);
  std::int64_t z = static_cast<std::int64_t>(randomized_round(x, params.precision, rng));
  if (noise == NoiseMode::enabled) {
    z += static_cast<std::int64_t>(sample_polya(params.shape, params.alpha, rng));
    z -= static_cast<std::int64_t>(sample_polya(params.shape, params.alpha, rng));
  }
  const std::int64_t qi = static_cast<std::int64_t>(q.q);
  const std::int64_t wrapped = ((z % qi) + qi) % qi;
  return static_cast<std::uint64_t>(wrapped);
}

/// Analyst-side decoding of the aggregated field element. Sums up to
/// 3np/2 are read directly; larger residues are wrapped negative.
inline double decode_sum(std::uint64_t z, std::uint64_t n) {
  const FieldModulus q = choose_modulus(n);
  if (z >= q.q) throw std::domain_error("decode_sum: value not reduced mod q");
  const double p = std::sqrt(static_cast<double>(n));
  const double threshold = 1.5 * static_cast<double>(n) * p;
  const double zd = static_cast<double>(z);
  if (zd <= threshold) return zd / p;
  return (zd - static_cast<double>(q.q)) / p;
}

struct SummationResult {
  double estimate = 0.0;
  double true_sum = 0.0;
  double abs_error = 0.0;
};

/// End-to-end real summation: encode, split-and-mix, aggregate, decode.
inline SummationResult run_real_summation(std::span<const double> xs, double epsilon,
                                          const ShufflerModel& model, std::size_t m, Rng& rng,
                                          NoiseMode noise = NoiseMode::enabled) {
  const std::uint64_t n = xs.size();
  if (n == 0) throw std::invalid_argument("run_real_summation: need at least one player");
  const FieldModulus q = choose_modulus(n);
  std::vector<std::uint64_t> encoded(n);
  double true_sum = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    encoded[i] = encode_real(xs[i], epsilon, n, rng, noise);
    true_sum += xs[i];
  }
  const Transcript t = run_field_protocol(FieldVec(q, std::move(encoded)), m, model, rng);
  const double estimate = decode_sum(aggregate(t), n);
  return SummationResult{estimate, true_sum, std::fabs(estimate - true_sum)};
}

/// Closed-form reference for the expected absolute error of the pipeline
/// when inputs round exactly: E|DLap(e^(-eps/p))| / p.
inline double reference_abs_error(double epsilon, std::uint64_t n) {
  const double p = std::sqrt(static_cast<double>(n));
  return dlap_mean_abs(std::exp(-epsilon / p)) / p;
}

namespace detail {

inline double log2e() { return 1.4426950408889634074; }

/// Per-message security gain: (log2 n - log2 e)/(64 e^(4 gamma)) - 2 gamma log2 e.
inline double security_slope(std::uint64_t n, double gamma) {
  const double e4g = std::exp(4.0 * gamma);
  return (std::log2(static_cast<double>(n)) - log2e()) / (64.0 * e4g) -
         2.0 * gamma * log2e();
}

/// ln q <= (m-1)(ln n - 1)/(32 e^(4 gamma)) + 2 gamma (1 - m)?
inline bool modulus_precondition_holds(std::uint64_t n, std::uint64_t m, std::uint64_t q,
                                       double gamma) {
  const double e4g = std::exp(4.0 * gamma);
  const double rhs = (static_cast<double>(m - 1) / (32.0 * e4g)) *
                         (std::log(static_cast<double>(n)) - 1.0) +
                     2.0 * gamma * (1.0 - static_cast<double>(m));
  return std::log(static_cast<double>(q)) <= rhs;
}

inline void check_security_preconditions(std::uint64_t n, std::uint64_t m, std::uint64_t q,
                                         double gamma) {
  if (n < 19) throw precondition_error("precondition violated: n >= 19");
  if (!(gamma >= 0.0)) throw precondition_error("precondition violated: gamma >= 0");
  if (static_cast<double>(m) < 8.0 * std::exp(4.0 * gamma))
    throw precondition_error("precondition violated: m >= 8 e^(4 gamma)");
  if (q < 2) throw precondition_error("precondition violated: q >= 2");
  if (!modulus_precondition_holds(n, m, q, gamma))
    throw precondition_error(
        "precondition violated: q <= (n/e)^((m-1)/(32 e^(4 gamma))) e^(2 gamma (1-m))");
}

}  // namespace detail

inline std::vector<ParamCheck> ProtocolParams::planning_checks() const {
  const double gamma_cap =
      players >= 2 ? std::log2(std::log2(static_cast<double>(players))) / 80.0 : 0.0;
  return {
      {"n >= 19", players >= 19},
      {"gamma <= log2(log2 n)/80", distortion >= 0.0 && distortion <= gamma_cap},
      {"m >= 8 e^(4 gamma)",
       static_cast<double>(messages_per_player) >= 8.0 * std::exp(4.0 * distortion)},
      {"q <= (n/e)^((m-1)/(32 e^(4 gamma))) e^(2 gamma (1-m))",
       messages_per_player >= 1 &&
           detail::modulus_precondition_holds(players, messages_per_player, modulus,
                                              distortion)},
  };
}

/// Statistical-security parameter guaranteed by the split-and-mix protocol:
/// sigma = (m-1)((log2 n - log2 e)/(64 e^(4 gamma)) - 2 gamma log2 e) - 3 log2(3q).
/// Nonpositive values mean no guaranteed security at these parameters.
inline double security_parameter(std::uint64_t n, std::uint64_t m, std::uint64_t q,
                                 double gamma) {
  detail::check_security_preconditions(n, m, q, gamma);
  return static_cast<double>(m - 1) * detail::security_slope(n, gamma) -
         3.0 * std::log2(3.0 * static_cast<double>(q));
}

/// Smallest sigma with (1 + e^epsilon) 2^(-sigma-1) <= delta.
inline std::uint64_t sigma_from_dp(double epsilon, double delta) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("sigma_from_dp: epsilon must be >= 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("sigma_from_dp: delta must lie in (0,1)");
  const double lead = 1.0 + std::exp(epsilon);
  auto satisfied = [&](std::int64_t sigma) {
    return lead * std::exp2(-static_cast<double>(sigma) - 1.0) <= delta;
  };
  std::int64_t sigma =
      static_cast<std::int64_t>(std::ceil(std::log2(lead / delta) - 1.0));
  if (sigma < 1) sigma = 1;
  while (!satisfied(sigma)) ++sigma;
  while (sigma > 1 && satisfied(sigma - 1)) --sigma;
  return static_cast<std::uint64_t>(sigma);
}

/// Smallest m >= ceil(8 e^(4 gamma)) whose security parameter at
/// q = choose_modulus(n) reaches sigma_target with the modulus precondition
/// intact.
inline std::uint64_t required_messages(std::uint64_t n, double gamma, double sigma_target) {
  if (n < 19) throw precondition_error("precondition violated: n >= 19");
  const double gamma_cap = std::log2(std::log2(static_cast<double>(n))) / 80.0;
  if (!(gamma >= 0.0 && gamma <= gamma_cap))
    throw precondition_error("precondition violated: gamma <= log2(log2 n)/80");
  if (!(sigma_target > 0.0))
    throw precondition_error("precondition violated: sigma_target > 0");
  const std::uint64_t q = choose_modulus(n).q;
  const double slope = detail::security_slope(n, gamma);
  if (!(slope > 0.0))
    throw precondition_error(
        "precondition violated: (log2 n - log2 e)/(64 e^(4 gamma)) > 2 gamma log2 e");
  const double offset = 3.0 * std::log2(3.0 * static_cast<double>(q));
  const std::uint64_t m_min =
      static_cast<std::uint64_t>(std::ceil(8.0 * std::exp(4.0 * gamma)));

  auto admissible = [&](std::uint64_t m) {
    return detail::modulus_precondition_holds(n, m, q, gamma) &&
           static_cast<double>(m - 1) * slope - offset >= sigma_target;
  };
  std::uint64_t m = std::max<std::uint64_t>(
      m_min, static_cast<std::uint64_t>(
                 std::floor((sigma_target + offset) / slope)));
  if (m > m_min + 4) m -= 4;  // start just below the analytic crossing
  while (!admissible(m)) {
    ++m;
    if (m > m_min + 100'000'000ULL)
      throw precondition_error("required_messages: no admissible m found");
  }
  while (m > m_min && admissible(m - 1)) --m;
  return m;
}

struct VectorSummationResult {
  std::vector<double> estimates;
  double per_coordinate_epsilon = 0.0;
  double per_coordinate_delta = 0.0;
  std::uint64_t messages_used = 0;
};

/// d independent runs of the scalar protocol, one per coordinate, at
/// epsilon/d and delta/d each (basic composition). When m is not supplied
/// it is planned from the per-coordinate budget via sigma_from_dp and
/// required_messages.
inline VectorSummationResult run_vector_summation(
    const std::vector<std::vector<double>>& rows, double epsilon, double delta,
    const ShufflerModel& model, Rng& rng,
    std::optional<std::uint64_t> messages = std::nullopt,
    NoiseMode noise = NoiseMode::enabled, double planning_distortion = 0.0) {
  if (rows.empty()) throw std::invalid_argument("run_vector_summation: need players");
  const std::size_t d = rows.front().size();
  if (d == 0) throw std::invalid_argument("run_vector_summation: need at least one coordinate");
  for (const auto& row : rows)
    if (row.size() != d)
      throw std::invalid_argument("run_vector_summation: ragged input matrix");

  VectorSummationResult result;
  result.per_coordinate_epsilon = epsilon / static_cast<double>(d);
  result.per_coordinate_delta = delta / static_cast<double>(d);
  result.messages_used =
      messages ? *messages
               : required_messages(rows.size(), planning_distortion,
                                   static_cast<double>(sigma_from_dp(
                                       result.per_coordinate_epsilon,
                                       result.per_coordinate_delta)));
  result.estimates.reserve(d);
  const std::uint64_t root = rng.next_u64();
  std::vector<double> column(rows.size());
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i][c];
    Rng sub = Rng(root).derive(c);
    result.estimates.push_back(run_real_summation(column, result.per_coordinate_epsilon,
                                                  model, result.messages_used, sub, noise)
                                   .estimate);
  }
  return result;
}

}  // namespace shufflesum
