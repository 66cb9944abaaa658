#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>

#include "shufflesum/rng.hpp"
#include "shufflesum/stats.hpp"

namespace shufflesum {

/// Noise configuration of the real-summation encoder.
struct NoiseParams {
  double alpha;        // discrete-Laplace decay, e^(-epsilon/precision)
  double shape;        // Polya shape, 1/n
  double precision;    // rounding precision, sqrt(n)

  NoiseParams(double a, double r, double p) : alpha(a), shape(r), precision(p) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("NoiseParams: alpha must lie in (0,1)");
    if (!(shape > 0.0)) throw std::invalid_argument("NoiseParams: shape must be positive");
    if (!(precision >= 1.0))
      throw std::invalid_argument("NoiseParams: precision must be >= 1");
  }

  /// The protocol's choices for n players at privacy epsilon.
  static NoiseParams for_protocol(double epsilon, std::uint64_t n) {
    if (!(epsilon > 0.0))
      throw std::invalid_argument("NoiseParams: epsilon must be positive");
    if (n == 0) throw std::invalid_argument("NoiseParams: n must be positive");
    const double p = std::sqrt(static_cast<double>(n));
    return NoiseParams(std::exp(-epsilon / p), 1.0 / static_cast<double>(n), p);
  }
};

/// floor(x p) + Ber(frac(x p)): integer with expectation exactly x p.
inline std::uint64_t randomized_round(double x, double precision, Rng& rng) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("randomized_round: x outside [0,1]");
  if (!(precision >= 1.0)) throw std::domain_error("randomized_round: precision must be >= 1");
  const double scaled = x * precision;
  const double base = std::floor(scaled);
  const double frac = scaled - base;
  return static_cast<std::uint64_t>(base) + (rng.bernoulli(frac) ? 1 : 0);
}

/// Polya (negative binomial with real shape) mass at k:
/// binom(k+r-1, k) p^k (1-p)^r.
inline double polya_pmf(double shape, double p, std::int64_t k) {
  if (!(shape > 0.0)) throw std::invalid_argument("polya_pmf: shape must be positive");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("polya_pmf: p must lie in (0,1)");
  if (k < 0) return 0.0;
  const double kd = static_cast<double>(k);
  const double log_binom =
      std::lgamma(kd + shape) - std::lgamma(kd + 1.0) - std::lgamma(shape);
  return std::exp(log_binom + kd * std::log(p) + shape * std::log1p(-p));
}

/// Draw from Polya(shape, p) via the gamma-Poisson mixture; non-integer
/// shapes have no direct combinatorial sampler.
inline std::uint64_t sample_polya(double shape, double p, Rng& rng) {
  if (!(shape > 0.0)) throw std::invalid_argument("sample_polya: shape must be positive");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("sample_polya: p must lie in (0,1)");
  const double mean = rng.gamma(shape) * (p / (1.0 - p));
  return rng.poisson(mean);
}

/// Discrete Laplace mass: (1-alpha)/(1+alpha) alpha^|k|.
inline double dlap_pmf(double alpha, std::int64_t k) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("dlap_pmf: alpha must lie in (0,1)");
  return (1.0 - alpha) / (1.0 + alpha) * std::pow(alpha, static_cast<double>(std::llabs(k)));
}

/// Closed-form mean absolute value of DLap(alpha): 2 alpha / (1 - alpha^2).
inline double dlap_mean_abs(double alpha) {
  return 2.0 * alpha / (1.0 - alpha * alpha);
}

/// DLap(alpha) as the difference of two geometric draws.
inline std::int64_t sample_dlap(double alpha, Rng& rng) {
  const std::int64_t a = static_cast<std::int64_t>(rng.geometric_failures(alpha));
  const std::int64_t b = static_cast<std::int64_t>(rng.geometric_failures(alpha));
  return a - b;
}

/// DLap(alpha) by inverse CDF; independent of the geometric route so the
/// two samplers can be cross-tested.
inline std::int64_t sample_dlap_inverse_cdf(double alpha, Rng& rng) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("sample_dlap_inverse_cdf: alpha must lie in (0,1)");
  const double side_mass = alpha / (1.0 + alpha);
  const double zero_mass = (1.0 - alpha) / (1.0 + alpha);
  const double u = rng.uniform01_open();
  if (u < side_mass) {
    const double r = u / side_mass;  // conditional on the negative side
    const std::int64_t k =
        1 + static_cast<std::int64_t>(std::floor(std::log1p(-r) / std::log(alpha)));
    return -std::max<std::int64_t>(k, 1);
  }
  if (u < side_mass + zero_mass) return 0;
  const double r = (u - side_mass - zero_mass) / side_mass;
  const std::int64_t k =
      1 + static_cast<std::int64_t>(std::floor(std::log1p(-r) / std::log(alpha)));
  return std::max<std::int64_t>(k, 1);
}

/// Chi-square check that sum_{i=1..n} (Polya(1/n,alpha) - Polya(1/n,alpha))
/// is DLap(alpha). `null_alpha` lets callers aim the test at a deliberately
/// wrong null to confirm its power.
inline GofReport polya_dlap_equivalence_test(std::uint64_t n, double alpha,
                                             std::uint64_t trials, Rng& rng,
                                             double significance = 1e-3,
                                             std::optional<double> null_alpha = std::nullopt) {
  if (n < 1) throw std::invalid_argument("polya_dlap_equivalence_test: n must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("polya_dlap_equivalence_test: alpha must lie in (0,1)");
  const double shape = 1.0 / static_cast<double>(n);
  std::map<std::int64_t, std::uint64_t> counts;
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::int64_t z = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      z += static_cast<std::int64_t>(sample_polya(shape, alpha, rng));
      z -= static_cast<std::int64_t>(sample_polya(shape, alpha, rng));
    }
    ++counts[z];
  }
  const double a0 = null_alpha.value_or(alpha);
  return chi_square_integer_gof(
      counts, trials, [a0](std::int64_t k) { return dlap_pmf(a0, k); }, significance);
}

}  // namespace shufflesum
