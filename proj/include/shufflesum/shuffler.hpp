#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shufflesum/errors.hpp"
#include "shufflesum/permutation.hpp"
#include "shufflesum/rng.hpp"

namespace shufflesum {

/// One permutation per message round.
using RoundPermutations = std::vector<Permutation>;

/// Distribution over permutations of [n].
///
/// Variants:
///  - uniform: the ideal shuffler.
///  - cayley_mallows: pmf proportional to exp(-dispersion * Swap(pi, center));
///    the canonical distribution with a known pmf whose probability ratios
///    are bounded by exp(dispersion * Swap), making its imperfectness
///    verifiable exactly.
///  - timestamp_laplace: player i releases at offsets[i] + Laplace(2/distortion)
///    and the output is the arrival rank order. No closed-form pmf; verified
///    statistically only.
///  - point_mass: a fixed permutation (maximally imperfect).
///  - composed: sample outer and inner independently, return outer o inner.
///  - inverse: sample the base model and invert.
///
/// Models are immutable; all sampling takes a caller-owned Rng.
class ShufflerModel {
public:
  enum class Kind { uniform, cayley_mallows, timestamp_laplace, point_mass, composed, inverse };

  static ShufflerModel uniform(std::size_t n) {
    ShufflerModel m(Kind::uniform, n);
    return m;
  }

  static ShufflerModel cayley_mallows(std::size_t n, double dispersion) {
    return cayley_mallows(n, dispersion, Permutation::identity(n));
  }

  static ShufflerModel cayley_mallows(std::size_t n, double dispersion, Permutation center) {
    if (!(dispersion >= 0.0))
      throw std::invalid_argument("cayley_mallows: dispersion must be nonnegative");
    if (center.size() != n)
      throw std::invalid_argument("cayley_mallows: center size mismatch");
    ShufflerModel m(Kind::cayley_mallows, n);
    m.dispersion_ = dispersion;
    m.perm_ = std::make_shared<Permutation>(std::move(center));
    return m;
  }

  static ShufflerModel timestamp_laplace(double distortion, std::vector<double> offsets) {
    if (!(distortion > 0.0))
      throw std::invalid_argument(
          "timestamp_laplace: distortion must be positive (scale 2/gamma is undefined at 0; "
          "use the uniform model for the perfect-shuffle limit)");
    for (double t : offsets) {
      if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("timestamp_laplace: offsets must lie in [0,1]");
    }
    ShufflerModel m(Kind::timestamp_laplace, offsets.size());
    m.distortion_ = distortion;
    m.offsets_ = std::move(offsets);
    return m;
  }

  static ShufflerModel point_mass(Permutation p) {
    ShufflerModel m(Kind::point_mass, p.size());
    m.perm_ = std::make_shared<Permutation>(std::move(p));
    return m;
  }

  static ShufflerModel composed(ShufflerModel outer, ShufflerModel inner) {
    if (outer.size() != inner.size())
      throw std::invalid_argument("composed: size mismatch");
    ShufflerModel m(Kind::composed, outer.size());
    m.left_ = std::make_shared<ShufflerModel>(std::move(outer));
    m.right_ = std::make_shared<ShufflerModel>(std::move(inner));
    return m;
  }

  static ShufflerModel inverse_of(ShufflerModel base) {
    ShufflerModel m(Kind::inverse, base.size());
    m.left_ = std::make_shared<ShufflerModel>(std::move(base));
    return m;
  }

  Kind kind() const { return kind_; }
  std::size_t size() const { return n_; }
  double dispersion() const { return dispersion_; }
  double distortion() const { return distortion_; }
  const std::vector<double>& offsets() const { return offsets_; }
  const Permutation& fixed_permutation() const { return *perm_; }
  const ShufflerModel& outer() const { return *left_; }
  const ShufflerModel& inner() const { return *right_; }
  const ShufflerModel& base() const { return *left_; }

  /// True when exact_pmf / exact_pmf_table are available.
  bool has_exact_pmf() const {
    switch (kind_) {
      case Kind::uniform:
      case Kind::cayley_mallows:
      case Kind::point_mass:
        return true;
      case Kind::timestamp_laplace:
        return false;
      case Kind::composed:
        return left_->has_exact_pmf() && right_->has_exact_pmf();
      case Kind::inverse:
        return left_->has_exact_pmf();
    }
    return false;
  }

  Permutation sample(Rng& rng) const {
    switch (kind_) {
      case Kind::uniform:
        return sample_uniform(rng);
      case Kind::cayley_mallows:
        return n_ <= kEnumerationCap ? sample_mallows_by_table(rng)
                                     : sample_mallows_by_insertion(rng);
      case Kind::timestamp_laplace:
        return sample_timestamp(rng);
      case Kind::point_mass:
        return *perm_;
      case Kind::composed: {
        const Permutation o = left_->sample(rng);
        const Permutation i = right_->sample(rng);
        return compose(o, i);
      }
      case Kind::inverse:
        return invert(left_->sample(rng));
    }
    throw std::logic_error("unreachable");
  }

  /// Independent draw per round, each from a counter-derived substream of
  /// rng so parallel trials replay identically.
  RoundPermutations sample_parallel(std::size_t rounds, Rng& rng) const {
    if (rounds == 0) throw std::invalid_argument("sample_parallel: need at least one round");
    const std::uint64_t root = rng.next_u64();
    RoundPermutations out;
    out.reserve(rounds);
    for (std::size_t j = 0; j < rounds; ++j) {
      Rng sub = Rng(root).derive(j);
      out.push_back(sample(sub));
    }
    return out;
  }

  /// P[model = p]. Supported for uniform, cayley_mallows (product-form
  /// normalizer), point_mass, and exact compositions/inversions thereof.
  double exact_pmf(const Permutation& p) const {
    if (p.size() != n_) throw std::invalid_argument("exact_pmf: size mismatch");
    switch (kind_) {
      case Kind::uniform:
        return 1.0 / static_cast<double>(factorial(n_));
      case Kind::cayley_mallows: {
        const double d = static_cast<double>(swap_distance(p, *perm_));
        return std::exp(-dispersion_ * d) / mallows_normalizer();
      }
      case Kind::point_mass:
        return p == *perm_ ? 1.0 : 0.0;
      case Kind::timestamp_laplace:
        throw unsupported_model_error(
            "exact_pmf: timestamp_laplace has no closed-form pmf");
      case Kind::composed: {
        // P[o o i = p] = sum_i P_outer[p o i^-1] P_inner[i].
        double total = 0.0;
        for (const Permutation& i : enumerate_permutations(n_))
          total += left_->exact_pmf(compose(p, invert(i))) * right_->exact_pmf(i);
        return total;
      }
      case Kind::inverse:
        return left_->exact_pmf(invert(p));
    }
    throw std::logic_error("unreachable");
  }

  /// Full pmf in lexicographic enumeration order. Composed models convolve
  /// their children's tables.
  std::vector<double> exact_pmf_table() const {
    if (n_ > kEnumerationCap)
      throw std::invalid_argument("exact_pmf_table: n above enumeration cap");
    const std::vector<Permutation> perms = enumerate_permutations(n_);
    std::vector<double> table(perms.size(), 0.0);
    switch (kind_) {
      case Kind::uniform: {
        std::fill(table.begin(), table.end(), 1.0 / static_cast<double>(perms.size()));
        return table;
      }
      case Kind::cayley_mallows: {
        const double z = mallows_normalizer();
        for (std::size_t i = 0; i < perms.size(); ++i)
          table[i] = std::exp(-dispersion_ * static_cast<double>(swap_distance(perms[i], *perm_))) / z;
        return table;
      }
      case Kind::point_mass: {
        table[lexicographic_rank(*perm_)] = 1.0;
        return table;
      }
      case Kind::timestamp_laplace:
        throw unsupported_model_error(
            "exact_pmf_table: timestamp_laplace has no closed-form pmf");
      case Kind::composed: {
        const std::vector<double> to = left_->exact_pmf_table();
        const std::vector<double> ti = right_->exact_pmf_table();
        for (std::size_t a = 0; a < perms.size(); ++a) {
          if (to[a] == 0.0) continue;
          for (std::size_t b = 0; b < perms.size(); ++b) {
            if (ti[b] == 0.0) continue;
            table[lexicographic_rank(compose(perms[a], perms[b]))] += to[a] * ti[b];
          }
        }
        return table;
      }
      case Kind::inverse: {
        const std::vector<double> tb = left_->exact_pmf_table();
        for (std::size_t i = 0; i < perms.size(); ++i)
          table[lexicographic_rank(invert(perms[i]))] = tb[i];
        return table;
      }
    }
    throw std::logic_error("unreachable");
  }

private:
  ShufflerModel(Kind kind, std::size_t n) : kind_(kind), n_(n) {
    if (n == 0) throw std::invalid_argument("ShufflerModel: n must be positive");
  }

  Permutation sample_uniform(Rng& rng) const {
    std::vector<std::uint32_t> m(n_);
    std::iota(m.begin(), m.end(), 0u);
    for (std::size_t i = n_ - 1; i > 0; --i) {
      const std::size_t j = rng.uniform_below(i + 1);
      std::swap(m[i], m[j]);
    }
    return Permutation(std::move(m));
  }

  /// Normalizer of the Cayley-Mallows weights around any center:
  /// prod_{j=1..n-1} (1 + j e^{-dispersion}).
  double mallows_normalizer() const {
    const double theta = std::exp(-dispersion_);
    double z = 1.0;
    for (std::size_t j = 1; j < n_; ++j) z *= 1.0 + static_cast<double>(j) * theta;
    return z;
  }

  /// Exhaustive inverse-CDF over all n! permutations; the directly
  /// verifiable route used inside the enumeration cap.
  Permutation sample_mallows_by_table(Rng& rng) const {
    std::vector<std::uint32_t> m(n_);
    std::iota(m.begin(), m.end(), 0u);
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(factorial(n_)));
    double total = 0.0;
    do {
      const double w =
          std::exp(-dispersion_ * static_cast<double>(swap_distance(Permutation(m), *perm_)));
      weights.push_back(w);
      total += w;
    } while (std::next_permutation(m.begin(), m.end()));

    double u = rng.uniform01() * total;
    std::iota(m.begin(), m.end(), 0u);
    std::size_t idx = 0;
    do {
      u -= weights[idx];
      if (u <= 0.0) return Permutation(m);
      ++idx;
    } while (std::next_permutation(m.begin(), m.end()));
    // Reached only through floating-point rounding; fall back to the last
    // permutation in lexicographic order.
    std::iota(m.rbegin(), m.rend(), 0u);
    return Permutation(std::move(m));
  }

  /// Sequential-insertion sampler with the product-form normalizer; exact
  /// for all n, used beyond the enumeration cap.
  Permutation sample_mallows_by_insertion(Rng& rng) const {
    const double theta = std::exp(-dispersion_);
    std::vector<std::uint32_t> sigma;
    sigma.reserve(n_);
    sigma.push_back(0);
    for (std::size_t j = 1; j < n_; ++j) {
      const double stay = 1.0 / (1.0 + static_cast<double>(j) * theta);
      if (rng.uniform01() < stay) {
        sigma.push_back(static_cast<std::uint32_t>(j));
      } else {
        // Join the cycle of a uniformly chosen earlier element; each such
        // move adds exactly one transposition to the distance from identity.
        const std::size_t i = rng.uniform_below(j);
        sigma.push_back(sigma[i]);
        sigma[i] = static_cast<std::uint32_t>(j);
      }
    }
    return compose(*perm_, Permutation(std::move(sigma)));
  }

  Permutation sample_timestamp(Rng& rng) const {
    const double scale = 2.0 / distortion_;
    std::vector<std::pair<double, std::uint32_t>> arrivals(n_);
    for (std::size_t i = 0; i < n_; ++i)
      arrivals[i] = {offsets_[i] + rng.laplace(scale), static_cast<std::uint32_t>(i)};
    // Ties broken by player index; probability zero under continuous noise.
    std::sort(arrivals.begin(), arrivals.end());
    std::vector<std::uint32_t> m(n_);
    for (std::size_t rank = 0; rank < n_; ++rank)
      m[arrivals[rank].second] = static_cast<std::uint32_t>(rank);
    return Permutation(std::move(m));
  }

  Kind kind_;
  std::size_t n_;
  double dispersion_ = 0.0;
  double distortion_ = 0.0;
  std::vector<double> offsets_;
  std::shared_ptr<const Permutation> perm_;
  std::shared_ptr<const ShufflerModel> left_;
  std::shared_ptr<const ShufflerModel> right_;
};

/// The round model used throughout the security analysis: the inverse of
/// one draw of `s` composed with an independent draw of `s_prime`. Because
/// composition with an arbitrary shuffler preserves imperfectness, this is
/// as imperfect as its parts and no worse.
inline ShufflerModel composed_round_model(const ShufflerModel& s, const ShufflerModel& s_prime) {
  if (s.size() != s_prime.size())
    throw std::invalid_argument("composed_round_model: size mismatch");
  return ShufflerModel::composed(ShufflerModel::inverse_of(s), s_prime);
}

enum class VerifyMode { exact, monte_carlo };

/// Result of an imperfectness audit: the supremum over ordered permutation
/// pairs of ln(P[pi]/P[pi']) / Swap(pi, pi'). A model is gamma-imperfect
/// iff this value is at most gamma.
struct ImperfectnessReport {
  double max_log_ratio_per_swap = 0.0;
  Permutation witness_numerator;
  Permutation witness_denominator;
  bool is_estimate = false;
  std::uint64_t samples = 0;
  std::uint64_t unobserved_cells = 0;  // monte_carlo only
};

inline ImperfectnessReport verify_imperfectness(const ShufflerModel& model,
                                                VerifyMode mode,
                                                std::uint64_t samples = 0,
                                                std::uint64_t seed = 0) {
  const std::size_t n = model.size();
  if (n > kEnumerationCap)
    throw std::invalid_argument("verify_imperfectness: n above enumeration cap");
  const std::vector<Permutation> perms = enumerate_permutations(n);

  std::vector<double> mass;
  ImperfectnessReport report{0.0, Permutation::identity(n), Permutation::identity(n),
                             mode == VerifyMode::monte_carlo, 0, 0};
  if (mode == VerifyMode::exact) {
    if (!model.has_exact_pmf())
      throw unsupported_model_error("verify_imperfectness: exact mode needs an exact pmf");
    mass = model.exact_pmf_table();
  } else {
    if (samples == 0)
      throw std::invalid_argument("verify_imperfectness: monte_carlo mode needs samples");
    report.samples = samples;
    std::vector<std::uint64_t> counts(perms.size(), 0);
    Rng rng(seed);
    for (std::uint64_t t = 0; t < samples; ++t)
      ++counts[lexicographic_rank(model.sample(rng))];
    mass.resize(perms.size());
    for (std::size_t i = 0; i < perms.size(); ++i) {
      mass[i] = static_cast<double>(counts[i]) / static_cast<double>(samples);
      if (counts[i] == 0) ++report.unobserved_cells;
    }
  }

  double best = 0.0;
  bool infinite = false;
  for (std::size_t a = 0; a < perms.size() && !infinite; ++a) {
    if (mass[a] == 0.0) continue;
    for (std::size_t b = 0; b < perms.size(); ++b) {
      if (a == b) continue;
      if (mass[b] == 0.0) {
        if (mode == VerifyMode::exact) {
          // A zero-probability denominator defeats every finite gamma.
          report.max_log_ratio_per_swap = std::numeric_limits<double>::infinity();
          report.witness_numerator = perms[a];
          report.witness_denominator = perms[b];
          infinite = true;
          break;
        }
        continue;  // empirically unobserved cells are skipped, counted above
      }
      const double d = static_cast<double>(swap_distance(perms[a], perms[b]));
      const double ratio = std::log(mass[a] / mass[b]) / d;
      if (ratio > best) {
        best = ratio;
        report.witness_numerator = perms[a];
        report.witness_denominator = perms[b];
      }
    }
  }
  if (!infinite) report.max_log_ratio_per_swap = best;
  return report;
}

}  // namespace shufflesum
