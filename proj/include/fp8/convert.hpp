// SPDX-License-Identifier: Apache-2.0
//
// binary32 -> FP8 conversion with selectable rounding and overflow
// handling, plus the binary16 -> E5M2 truncation path.

#pragma once

#include <cstdint>

#include "fp8/format.hpp"

namespace fp8 {

enum class RoundingMode : std::uint8_t { NearestEven, Stochastic, TowardZero };
enum class OverflowMode : std::uint8_t { Saturate, NonSaturating };

// 32-bit uniform draw from a counter-based generator keyed on
// (seed, element_index). Stateless, so bulk conversions are reproducible
// under any work partitioning.
std::uint32_t stochastic_draw(std::uint64_t seed, std::uint64_t element_index);

// Semantics:
//  - NaN input encodes as the canonical NaN pattern, keeping the sign.
//  - Infinity becomes NaN for E4M3 (in both overflow modes) and stays
//    infinity for E5M2.
//  - Finite overflow boundary per rounding mode, in magnitude:
//      NearestEven  >= saturation_threshold()   (max_normal + half step)
//      TowardZero   >= 2 * 2^max_normal_exponent()  (next extended value)
//      Stochastic   >  max_normal()             (handled without a draw)
//    Saturate clamps to +-max_normal; NonSaturating yields NaN for E4M3
//    and +-infinity for E5M2.
//  - Subnormal outputs are produced exactly, never flushed.
//  - Stochastic rounding direction: up with probability rem/2^k where
//    rem/2^k is the exact fractional position between the two bracketing
//    values, compared against a scaled 32-bit threshold.
Fp8Value convert_to_fp8(float x, const Fp8Format& f,
                        RoundingMode round = RoundingMode::NearestEven,
                        OverflowMode overflow = OverflowMode::Saturate,
                        std::uint64_t seed = 0, std::uint64_t element_index = 0);

// Exact widening; alias of decode.
float convert_to_binary32(Fp8Value v);

// binary16 and E5M2 share exponent width and bias, so a finite binary16
// magnitude pattern converts by rounding away its low 8 mantissa bits.
// Equivalent to widening the binary16 value to binary32 and converting.
Fp8Value e5m2_from_binary16_bits(std::uint16_t h,
                                 RoundingMode round = RoundingMode::NearestEven,
                                 OverflowMode overflow = OverflowMode::Saturate,
                                 std::uint64_t seed = 0,
                                 std::uint64_t element_index = 0);

}  // namespace fp8
