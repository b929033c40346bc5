// SPDX-License-Identifier: Apache-2.0
//
// Tensor scale factors: quantization multiplies by s before the FP8 cast
// and multiplies by 1/s after decoding. Power-of-two scales commute with
// the cast exactly; emulate_bias_cast uses that to realize any exponent
// bias as a scaled cast with the stock format.

#pragma once

#include <cstdint>
#include <vector>

#include "fp8/convert.hpp"

namespace fp8 {

enum class ScaleConstraint : std::uint8_t { Free, PowerOfTwo };

struct ScaleFactor {
  float value = 1.0f;  // positive and finite
  ScaleConstraint constraint = ScaleConstraint::Free;
};

enum class ScaleGranularity : std::uint8_t { PerTensor, PerChannel };

struct Granularity {
  ScaleGranularity kind = ScaleGranularity::PerTensor;
  int axis = 0;  // PerChannel only
  static constexpr Granularity per_tensor() { return {ScaleGranularity::PerTensor, 0}; }
  static constexpr Granularity per_channel(int axis) {
    return {ScaleGranularity::PerChannel, axis};
  }
  friend constexpr bool operator==(const Granularity&, const Granularity&) = default;
};

struct ScaleSet {
  Granularity granularity;
  std::vector<ScaleFactor> scales;  // one entry, or extent(axis) entries
};

// Largest scale that keeps amax representable: max_normal/amax for Free
// (nudged down so amax*value never exceeds max_normal), the nearest
// power of two below that for PowerOfTwo. amax == 0 maps to 1.0.
ScaleFactor scale_for_amax(float amax, const Fp8Format& f, ScaleConstraint constraint);

// convert_to_fp8(x * s) with the product formed in binary32.
Fp8Value quantize_scaled(float x, ScaleFactor s, const Fp8Format& f,
                         RoundingMode round = RoundingMode::NearestEven,
                         OverflowMode overflow = OverflowMode::Saturate,
                         std::uint64_t seed = 0, std::uint64_t element_index = 0);

// decode(v) * (1/s), with the reciprocal formed once in binary32.
float dequantize(Fp8Value v, ScaleFactor s);

// Quantization as if the format's exponent bias were bias_b, realized as a
// power-of-two scaled cast (scale 2^(bias_b - default_bias)). Returns the
// dequantized value. bias_b outside [-8, 31] throws std::out_of_range.
float emulate_bias_cast(float x, const Fp8Format& f, int bias_b,
                        RoundingMode round = RoundingMode::NearestEven,
                        OverflowMode overflow = OverflowMode::Saturate,
                        std::uint64_t seed = 0, std::uint64_t element_index = 0);

}  // namespace fp8
