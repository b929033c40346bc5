// SPDX-License-Identifier: Apache-2.0

#include "fp8/scaling.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fp8 {

ScaleFactor scale_for_amax(float amax, const Fp8Format& f, ScaleConstraint constraint) {
  if (amax == 0.0f) return {1.0f, constraint};

  const double max_d = double(f.max_normal());
  const double amax_d = double(amax);

  if (constraint == ScaleConstraint::PowerOfTwo) {
    int k = int(std::floor(std::log2(max_d / amax_d)));
    // log2 can land one off near exact powers; fix with exact products
    // (amax * 2^k is exact in double).
    while (amax_d * std::exp2(double(k)) > max_d) --k;
    while (amax_d * std::exp2(double(k + 1)) <= max_d) ++k;
    if (k > 127) k = 127;  // keep the scale a normal binary32 value
    if (k < -126) k = -126;
    return {std::ldexp(1.0f, k), ScaleConstraint::PowerOfTwo};
  }

  float s = float(max_d / amax_d);
  if (!std::isfinite(s)) s = std::numeric_limits<float>::max();
  // Division rounds to nearest, which can overshoot by up to one ulp; step
  // down so amax * s <= max_normal holds exactly (the product below is
  // exact in double).
  while (amax_d * double(s) > max_d) {
    s = std::nextafter(s, 0.0f);
  }
  return {s, ScaleConstraint::Free};
}

Fp8Value quantize_scaled(float x, ScaleFactor s, const Fp8Format& f,
                         RoundingMode round, OverflowMode overflow,
                         std::uint64_t seed, std::uint64_t element_index) {
  return convert_to_fp8(x * s.value, f, round, overflow, seed, element_index);
}

float dequantize(Fp8Value v, ScaleFactor s) {
  const float recip = 1.0f / s.value;
  return decode(v) * recip;
}

float emulate_bias_cast(float x, const Fp8Format& f, int bias_b,
                        RoundingMode round, OverflowMode overflow,
                        std::uint64_t seed, std::uint64_t element_index) {
  if (bias_b < -8 || bias_b > 31) {
    throw std::out_of_range("emulate_bias_cast: bias outside [-8, 31]");
  }
  const int k = bias_b - f.exponent_bias;
  const ScaleFactor s{std::ldexp(1.0f, k), ScaleConstraint::PowerOfTwo};
  const float recip = std::ldexp(1.0f, -k);  // exact inverse
  const Fp8Value v = quantize_scaled(x, s, f, round, overflow, seed, element_index);
  return decode(v) * recip;
}

}  // namespace fp8
