#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace shufflesum {

using uint128 = unsigned __int128;

namespace detail {

/// Floor square root, exact over the full 128-bit range.
inline uint128 isqrt_u128(uint128 v) {
  if (v == 0) return 0;
  uint128 res = 0;
  uint128 bit = uint128(1) << 126;
  while (bit > v) bit >>= 2;
  while (bit != 0) {
    if (v >= res + bit) {
      v -= res + bit;
      res = (res >> 1) + bit;
    } else {
      res >>= 1;
    }
    bit >>= 2;
  }
  return res;
}

}  // namespace detail

/// Modulus of the additive group Z_q the protocol sums over. q need not be
/// prime; only addition is used.
struct FieldModulus {
  std::uint64_t q;

  explicit FieldModulus(std::uint64_t modulus) : q(modulus) {
    if (q < 2) throw std::invalid_argument("FieldModulus: q must be at least 2");
  }

  bool operator==(const FieldModulus&) const = default;
};

/// Vector of elements reduced into [0, q).
struct FieldVec {
  FieldModulus modulus;
  std::vector<std::uint64_t> values;

  FieldVec(FieldModulus m, std::vector<std::uint64_t> v)
      : modulus(m), values(std::move(v)) {
    for (std::uint64_t x : values) {
      if (x >= modulus.q)
        throw std::invalid_argument("FieldVec: element not reduced into [0, q)");
    }
  }

  std::size_t size() const { return values.size(); }
};

/// Sum of the inputs reduced mod q. Accepts unreduced values; the 128-bit
/// accumulator cannot overflow for any realistic message count.
inline std::uint64_t field_reduce_sum(std::span<const std::uint64_t> values,
                                      FieldModulus modulus) {
  uint128 acc = 0;
  for (std::uint64_t v : values) acc += v % modulus.q;
  return static_cast<std::uint64_t>(acc % modulus.q);
}

inline std::uint64_t field_reduce_sum(const std::vector<std::uint64_t>& values,
                                      FieldModulus modulus) {
  return field_reduce_sum(std::span<const std::uint64_t>(values), modulus);
}

/// Message modulus for an n-player run: ceil(2 n^(3/2)).
///
/// Computed with integer square roots so the ceiling is exact for every
/// n up to 2^40 (q enters bit-exact protocol arithmetic, so a one-off float
/// rounding here would silently change transcripts).
inline FieldModulus choose_modulus(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("choose_modulus: player count must be positive");
  if (n > (std::uint64_t{1} << 40))
    throw std::invalid_argument("choose_modulus: n above 2^40 exactness range");
  const uint128 four_n_cubed = uint128(4) * uint128(n) * uint128(n) * uint128(n);
  const uint128 root = detail::isqrt_u128(four_n_cubed);
  const uint128 q = (root * root == four_n_cubed) ? root : root + 1;
  return FieldModulus(static_cast<std::uint64_t>(q));
}

}  // namespace shufflesum
