// SPDX-License-Identifier: Apache-2.0
//
// FP8 binary interchange formats: E4M3 and E5M2.
//
// Both are sign/exponent/mantissa minifloats packed into one byte. E5M2
// keeps the full IEEE 754 special-value conventions (two infinities, six
// NaN patterns). E4M3 has no infinities and keeps a single NaN mantissa
// pattern, S.1111.111; the rest of the top exponent row is spent on normal
// values, which extends the largest finite magnitude to 448.

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace fp8 {

enum class FormatName : std::uint8_t { E4M3, E5M2 };

// How the top exponent row is spent.
enum class SpecialPolicy : std::uint8_t {
  ReclaimedNaNOnly,  // no infinities, one NaN mantissa pattern (E4M3)
  FullIEEE,          // IEEE-style infinities and NaNs (E5M2)
};

enum class FpClass : std::uint8_t { Zero, Subnormal, Normal, Infinity, NaN };
enum class Sign : std::uint8_t { Pos, Neg };

namespace detail {
constexpr float pow2f(int k) {
  float r = 1.0f;
  for (; k > 0; --k) r *= 2.0f;
  for (; k < 0; ++k) r *= 0.5f;
  return r;
}
}  // namespace detail

struct Fp8Format {
  FormatName name = FormatName::E4M3;
  int exponent_bits = 4;
  int mantissa_bits = 3;
  int exponent_bias = 7;
  SpecialPolicy special_policy = SpecialPolicy::ReclaimedNaNOnly;

  static constexpr Fp8Format e4m3() {
    return {FormatName::E4M3, 4, 3, 7, SpecialPolicy::ReclaimedNaNOnly};
  }
  static constexpr Fp8Format e5m2() {
    return {FormatName::E5M2, 5, 2, 15, SpecialPolicy::FullIEEE};
  }

  friend constexpr bool operator==(const Fp8Format&, const Fp8Format&) = default;

  constexpr std::uint8_t mantissa_mask() const {
    return std::uint8_t((1u << mantissa_bits) - 1u);
  }
  constexpr std::uint8_t exponent_field_mask() const {
    return std::uint8_t((1u << exponent_bits) - 1u);
  }
  constexpr int min_normal_exponent() const { return 1 - exponent_bias; }
  constexpr int max_normal_exponent() const {
    const int top = int(exponent_field_mask()) - exponent_bias;
    return special_policy == SpecialPolicy::FullIEEE ? top - 1 : top;
  }

  // Magnitude bit patterns (sign bit clear).
  constexpr std::uint8_t canonical_nan_bits() const {
    return special_policy == SpecialPolicy::FullIEEE
               ? std::uint8_t((exponent_field_mask() << mantissa_bits) | 0x2u)
               : std::uint8_t((exponent_field_mask() << mantissa_bits) | mantissa_mask());
  }
  // FullIEEE only.
  constexpr std::uint8_t infinity_bits() const {
    return std::uint8_t(exponent_field_mask() << mantissa_bits);
  }
  constexpr std::uint8_t max_normal_bits() const {
    return special_policy == SpecialPolicy::FullIEEE
               ? std::uint8_t(((exponent_field_mask() - 1u) << mantissa_bits) | mantissa_mask())
               : std::uint8_t((exponent_field_mask() << mantissa_bits) | (mantissa_mask() - 1u));
  }

  // Extremal finite magnitudes. All are exact binary32 values.
  constexpr float max_normal() const {
    const int top_mant = special_policy == SpecialPolicy::FullIEEE
                             ? mantissa_mask()
                             : mantissa_mask() - 1;
    return (1.0f + float(top_mant) * detail::pow2f(-mantissa_bits)) *
           detail::pow2f(max_normal_exponent());
  }
  constexpr float min_normal() const { return detail::pow2f(min_normal_exponent()); }
  constexpr float min_subnormal() const {
    return detail::pow2f(min_normal_exponent() - mantissa_bits);
  }
  constexpr float max_subnormal() const {
    return float(mantissa_mask()) * min_subnormal();
  }

  // Smallest magnitude that overflows under round-to-nearest-even:
  // max_normal plus half the grid step of the top binade (464 for E4M3,
  // 61440 for E5M2).
  constexpr float saturation_threshold() const {
    return max_normal() + detail::pow2f(max_normal_exponent() - mantissa_bits - 1);
  }
};

struct Fp8Value {
  std::uint8_t bits = 0;
  Fp8Format format;
};

struct Classification {
  FpClass cls = FpClass::Zero;
  Sign sign = Sign::Pos;
  friend constexpr bool operator==(const Classification&, const Classification&) = default;
};

Classification classify(Fp8Value v);

// Exact widening of a pattern to binary32. NaN patterns give a quiet NaN
// carrying the sign bit; -0 decodes to binary32 -0.
float decode(Fp8Value v);

// The unique pattern whose decode equals x bitwise (sign of zero included),
// or nullopt when x is not in the format's value set. NaN inputs yield the
// canonical NaN pattern with the input's sign.
std::optional<Fp8Value> encode_exact(float x, const Fp8Format& f);

struct Fp8Entry {
  std::uint8_t bits;
  float value;
  Classification cls;
};

// All 256 patterns in bit order. This list is the ground truth the
// exhaustive tests scan.
std::vector<Fp8Entry> enumerate(const Fp8Format& f);

// Monotone integer key: sign-magnitude folded so that value order matches
// integer order; both zeros map to 0. Precondition: v is not NaN.
int total_order_key(Fp8Value v);

// Value comparison with -0 == +0. Precondition: neither side is NaN.
std::strong_ordering compare(Fp8Value a, Fp8Value b);

const char* to_string(FpClass c);
const char* to_string(FormatName n);
std::optional<Fp8Format> format_from_string(std::string_view s);

}  // namespace fp8
