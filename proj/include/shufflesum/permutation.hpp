#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace shufflesum {

/// Largest n for which all n! permutations are enumerated by the exact
/// verifiers. 8! = 40320 keeps exhaustive pmf tables cheap.
inline constexpr std::size_t kEnumerationCap = 8;

/// Bijection on {0, ..., n-1}. Entry i holds the destination of i.
class Permutation {
public:
  Permutation() = default;  // empty permutation on zero elements

  explicit Permutation(std::vector<std::uint32_t> mapping) : map_(std::move(mapping)) {
    std::vector<bool> seen(map_.size(), false);
    for (std::uint32_t v : map_) {
      if (v >= map_.size() || seen[v])
        throw std::invalid_argument("Permutation: mapping is not a bijection");
      seen[v] = true;
    }
  }

  static Permutation identity(std::size_t n) {
    std::vector<std::uint32_t> m(n);
    std::iota(m.begin(), m.end(), 0u);
    return Permutation(std::move(m));
  }

  /// Convenience for the 1-indexed notation used in configs and docs,
  /// e.g. {2,1,3} for the transposition of the first two players.
  static Permutation from_one_based(const std::vector<std::uint32_t>& mapping) {
    std::vector<std::uint32_t> m(mapping.size());
    for (std::size_t i = 0; i < mapping.size(); ++i) {
      if (mapping[i] == 0)
        throw std::invalid_argument("Permutation: one-based entry cannot be 0");
      m[i] = mapping[i] - 1;
    }
    return Permutation(std::move(m));
  }

  std::size_t size() const { return map_.size(); }
  std::uint32_t operator()(std::size_t i) const { return map_[i]; }
  const std::vector<std::uint32_t>& mapping() const { return map_; }

  std::vector<std::uint32_t> to_one_based() const {
    std::vector<std::uint32_t> out(map_.size());
    for (std::size_t i = 0; i < map_.size(); ++i) out[i] = map_[i] + 1;
    return out;
  }

  bool is_identity() const {
    for (std::size_t i = 0; i < map_.size(); ++i)
      if (map_[i] != i) return false;
    return true;
  }

  bool operator==(const Permutation&) const = default;
  bool operator<(const Permutation& other) const { return map_ < other.map_; }

private:
  std::vector<std::uint32_t> map_;
};

/// (outer o inner)(i) = outer(inner(i)).
inline Permutation compose(const Permutation& outer, const Permutation& inner) {
  if (outer.size() != inner.size())
    throw std::invalid_argument("compose: size mismatch");
  std::vector<std::uint32_t> m(outer.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = outer(inner(i));
  return Permutation(std::move(m));
}

inline Permutation invert(const Permutation& p) {
  std::vector<std::uint32_t> m(p.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[p(i)] = static_cast<std::uint32_t>(i);
  return Permutation(std::move(m));
}

inline std::size_t cycle_count(const Permutation& p) {
  std::vector<bool> seen(p.size(), false);
  std::size_t cycles = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (seen[i]) continue;
    ++cycles;
    std::size_t j = i;
    while (!seen[j]) {
      seen[j] = true;
      j = p(j);
    }
  }
  return cycles;
}

/// Minimum number of transpositions turning one permutation into the other
/// (Cayley distance). Computed by the cycle formula n - #cycles(b^-1 o a),
/// which the tests validate against a breadth-first search oracle.
inline std::size_t swap_distance(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("swap_distance: size mismatch");
  return a.size() - cycle_count(compose(invert(b), a));
}

inline std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

/// All n! permutations in lexicographic order of their mapping.
inline std::vector<Permutation> enumerate_permutations(std::size_t n,
                                                       std::size_t cap = kEnumerationCap) {
  if (n > cap)
    throw std::invalid_argument("enumerate_permutations: n above enumeration cap");
  std::vector<std::uint32_t> m(n);
  std::iota(m.begin(), m.end(), 0u);
  std::vector<Permutation> out;
  out.reserve(static_cast<std::size_t>(factorial(n)));
  do {
    out.emplace_back(m);
  } while (std::next_permutation(m.begin(), m.end()));
  return out;
}

/// Position of p within enumerate_permutations(p.size()).
inline std::uint64_t lexicographic_rank(const Permutation& p) {
  const std::size_t n = p.size();
  std::uint64_t rank = 0;
  std::uint64_t suffix = factorial(n == 0 ? 0 : n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::uint64_t smaller_after = 0;
    for (std::size_t j = i + 1; j < n; ++j)
      if (p(j) < p(i)) ++smaller_after;
    rank += smaller_after * suffix;
    suffix /= (n - 1 - i);
  }
  return rank;
}

}  // namespace shufflesum
