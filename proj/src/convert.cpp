// SPDX-License-Identifier: Apache-2.0

#include "fp8/convert.hpp"

#include <bit>

namespace fp8 {

std::uint32_t stochastic_draw(std::uint64_t seed, std::uint64_t element_index) {
  // splitmix64 finalizer over a per-element counter.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (element_index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return std::uint32_t(z >> 32);
}

namespace {

// Shared rounding/overflow tail. `mag` is the truncated magnitude code
// (consecutive codes are adjacent representable magnitudes), `rem` the
// discarded fraction with denominator 2^rem_bits.
Fp8Value round_magnitude(std::uint64_t mag, std::uint64_t rem, int rem_bits,
                         std::uint8_t sign8, const Fp8Format& f,
                         RoundingMode round, OverflowMode overflow,
                         std::uint64_t seed, std::uint64_t element_index) {
  const std::uint64_t pmax = f.max_normal_bits();
  const std::uint64_t half = std::uint64_t(1) << (rem_bits - 1);

  bool overflowed = false;
  switch (round) {
    case RoundingMode::NearestEven:
      overflowed = mag > pmax || (mag == pmax && rem >= half);
      break;
    case RoundingMode::TowardZero:
      overflowed = mag > pmax;
      break;
    case RoundingMode::Stochastic:
      // Deterministic: no probabilistic jump past the largest finite value.
      overflowed = mag > pmax || (mag == pmax && rem != 0);
      break;
  }
  if (overflowed) {
    if (overflow == OverflowMode::Saturate) {
      return {std::uint8_t(sign8 | pmax), f};
    }
    if (f.special_policy == SpecialPolicy::FullIEEE) {
      return {std::uint8_t(sign8 | f.infinity_bits()), f};
    }
    return {std::uint8_t(sign8 | f.canonical_nan_bits()), f};
  }

  bool round_up = false;
  switch (round) {
    case RoundingMode::NearestEven:
      round_up = rem > half || (rem == half && (mag & 1));
      break;
    case RoundingMode::TowardZero:
      break;
    case RoundingMode::Stochastic:
      if (rem != 0) {
        const std::uint32_t draw = stochastic_draw(seed, element_index);
        const std::uint64_t threshold = rem_bits <= 32
                                            ? rem << (32 - rem_bits)
                                            : rem >> (rem_bits - 32);
        round_up = draw < threshold;
      }
      break;
  }
  return {std::uint8_t(sign8 | (mag + (round_up ? 1u : 0u))), f};
}

}  // namespace

Fp8Value convert_to_fp8(float x, const Fp8Format& f, RoundingMode round,
                        OverflowMode overflow, std::uint64_t seed,
                        std::uint64_t element_index) {
  const std::uint32_t xb = std::bit_cast<std::uint32_t>(x);
  const std::uint8_t sign8 = (xb >> 31) ? 0x80u : 0x00u;
  const std::uint32_t absb = xb & 0x7FFFFFFFu;

  if (absb > 0x7F800000u) {
    return {std::uint8_t(sign8 | f.canonical_nan_bits()), f};
  }
  if (absb == 0x7F800000u) {
    if (f.special_policy == SpecialPolicy::FullIEEE) {
      return {std::uint8_t(sign8 | f.infinity_bits()), f};
    }
    // E4M3 has no infinities; the special-value rule precedes overflow
    // handling, so both overflow modes give NaN.
    return {std::uint8_t(sign8 | f.canonical_nan_bits()), f};
  }
  if (absb == 0) return {sign8, f};

  const int m = f.mantissa_bits;
  const int emin = f.min_normal_exponent();
  int e32;
  std::uint64_t sig;
  if ((absb >> 23) == 0) {
    e32 = -126;
    sig = absb;  // 0.xxx * 2^-126
  } else {
    e32 = int(absb >> 23) - 127;
    sig = (absb & 0x7FFFFFu) | 0x800000u;  // 1.xxx, 24 bits
  }

  // Align the significand to the format's grid at exponent max(e32, emin).
  int shift = (23 - m) + (e32 < emin ? emin - e32 : 0);
  std::uint64_t mag, rem;
  int rem_bits;
  if (shift >= 63) {
    // Far below the grid; sig < 2^24 keeps rem under half of 2^63.
    mag = 0;
    rem = sig;
    rem_bits = 63;
  } else {
    mag = sig >> shift;
    rem = sig & ((std::uint64_t(1) << shift) - 1u);
    rem_bits = shift;
  }
  if (e32 > emin) mag += std::uint64_t(e32 - emin) << m;

  return round_magnitude(mag, rem, rem_bits, sign8, f, round, overflow, seed,
                         element_index);
}

float convert_to_binary32(Fp8Value v) { return decode(v); }

Fp8Value e5m2_from_binary16_bits(std::uint16_t h, RoundingMode round,
                                 OverflowMode overflow, std::uint64_t seed,
                                 std::uint64_t element_index) {
  const Fp8Format f = Fp8Format::e5m2();
  const std::uint8_t sign8 = (h >> 15) ? 0x80u : 0x00u;
  const std::uint32_t mag16 = h & 0x7FFFu;

  if (mag16 > 0x7C00u) return {std::uint8_t(sign8 | f.canonical_nan_bits()), f};
  if (mag16 == 0x7C00u) return {std::uint8_t(sign8 | f.infinity_bits()), f};

  // Finite: exponent fields align, mantissa narrows from 10 to 2 bits.
  return round_magnitude(mag16 >> 8, mag16 & 0xFFu, 8, sign8, f, round,
                         overflow, seed, element_index);
}

}  // namespace fp8
