#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace shufflesum {

/// Deterministic random source for simulations.
///
/// SplitMix64 core with counter-derived substreams. All distribution
/// transforms are hand-rolled on top of the raw 64-bit stream so that runs
/// are reproducible across platforms and standard-library versions
/// (std::*_distribution output is unspecified). Simulation grade, not
/// cryptographic.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Child stream addressed by (current state, stream index). Does not
  /// advance this generator, so trial- or round-indexed substreams can be
  /// handed out in parallel and replayed independently.
  Rng derive(std::uint64_t stream) const {
    std::uint64_t h = state_ ^ (0x9e6c63d0876a9a35ULL * (stream + 1));
    h = (h ^ (h >> 33)) * 0xff51afd7ed558ccdULL;
    h = (h ^ (h >> 33)) * 0xc4ceb9fe1a85ec53ULL;
    return Rng(h ^ (h >> 33));
  }

  /// Unbiased draw from [0, bound) by rejection.
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x <= limit) return x % bound;
    }
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in the open interval (0, 1); safe under log().
  double uniform01_open() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Exponential with the given mean.
  double exponential(double mean) { return -mean * std::log(uniform01_open()); }

  /// Centered Laplace with the given scale.
  double laplace(double scale) {
    const double u = uniform01_open() - 0.5;
    const double mag = std::log1p(-2.0 * std::fabs(u));  // log(1 - 2|u|) <= 0
    return u < 0 ? scale * mag : -scale * mag;
  }

  /// Standard normal via Box-Muller (cosine branch only).
  double normal() {
    const double u1 = uniform01_open();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  /// Gamma with the given shape and unit scale. Marsaglia-Tsang for
  /// shape >= 1, boosted by U^(1/shape) below 1.
  double gamma(double shape) {
    if (!(shape > 0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      return gamma(shape + 1.0) * std::pow(uniform01_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Poisson by sequential search; large means split via infinite
  /// divisibility to keep the product method exact.
  std::uint64_t poisson(double mean) {
    if (!(mean >= 0)) throw std::invalid_argument("poisson: mean must be nonnegative");
    if (mean == 0.0) return 0;
    if (mean > 30.0) return poisson(mean * 0.5) + poisson(mean * 0.5);
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform01_open();
    while (prod > limit) {
      ++k;
      prod *= uniform01_open();
    }
    return k;
  }

  /// Number of failures before the first success, P[K = k] = (1-alpha) alpha^k.
  std::uint64_t geometric_failures(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("geometric_failures: alpha must lie in (0,1)");
    const double k = std::floor(std::log(uniform01_open()) / std::log(alpha));
    return k < 0 ? 0 : static_cast<std::uint64_t>(k);
  }

private:
  std::uint64_t state_;
};

}  // namespace shufflesum
