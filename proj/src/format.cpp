// SPDX-License-Identifier: Apache-2.0

#include "fp8/format.hpp"

#include <bit>
#include <cassert>
#include <cmath>
#include <limits>

namespace fp8 {

namespace {

float signed_nan(bool neg) {
  return std::copysign(std::numeric_limits<float>::quiet_NaN(), neg ? -1.0f : 1.0f);
}

}  // namespace

Classification classify(Fp8Value v) {
  const Fp8Format& f = v.format;
  const Sign sign = (v.bits & 0x80u) ? Sign::Neg : Sign::Pos;
  const std::uint32_t expf = (v.bits >> f.mantissa_bits) & f.exponent_field_mask();
  const std::uint32_t mant = v.bits & f.mantissa_mask();

  if (expf == f.exponent_field_mask()) {
    if (f.special_policy == SpecialPolicy::FullIEEE) {
      return {mant == 0 ? FpClass::Infinity : FpClass::NaN, sign};
    }
    if (mant == f.mantissa_mask()) return {FpClass::NaN, sign};
  }
  if (expf == 0) return {mant == 0 ? FpClass::Zero : FpClass::Subnormal, sign};
  return {FpClass::Normal, sign};
}

float decode(Fp8Value v) {
  const Fp8Format& f = v.format;
  const bool neg = (v.bits & 0x80u) != 0;
  const std::uint32_t expf = (v.bits >> f.mantissa_bits) & f.exponent_field_mask();
  const std::uint32_t mant = v.bits & f.mantissa_mask();

  if (expf == f.exponent_field_mask()) {
    if (f.special_policy == SpecialPolicy::FullIEEE) {
      if (mant == 0) return neg ? -std::numeric_limits<float>::infinity()
                                : std::numeric_limits<float>::infinity();
      return signed_nan(neg);
    }
    if (mant == f.mantissa_mask()) return signed_nan(neg);
  }
  float mag;
  if (expf == 0) {
    mag = std::ldexp(float(mant), f.min_normal_exponent() - f.mantissa_bits);
  } else {
    mag = std::ldexp(float((1u << f.mantissa_bits) | mant),
                     int(expf) - f.exponent_bias - f.mantissa_bits);
  }
  return neg ? -mag : mag;
}

std::optional<Fp8Value> encode_exact(float x, const Fp8Format& f) {
  const std::uint32_t xb = std::bit_cast<std::uint32_t>(x);
  const std::uint8_t sign8 = (xb >> 31) ? 0x80u : 0x00u;
  const std::uint32_t absb = xb & 0x7FFFFFFFu;

  if (absb > 0x7F800000u) {
    return Fp8Value{std::uint8_t(sign8 | f.canonical_nan_bits()), f};
  }
  if (absb == 0x7F800000u) {
    if (f.special_policy == SpecialPolicy::FullIEEE) {
      return Fp8Value{std::uint8_t(sign8 | f.infinity_bits()), f};
    }
    return std::nullopt;
  }
  if (absb == 0) return Fp8Value{sign8, f};
  // binary32 subnormals sit far below either format's range.
  if (absb < 0x00800000u) return std::nullopt;

  const int m = f.mantissa_bits;
  const int e32 = int(absb >> 23) - 127;
  const std::uint32_t mant32 = absb & 0x7FFFFFu;

  if (e32 >= f.min_normal_exponent()) {
    if (e32 > f.max_normal_exponent()) return std::nullopt;
    const int shift = 23 - m;
    if (mant32 & ((1u << shift) - 1u)) return std::nullopt;
    const std::uint8_t mag =
        std::uint8_t(((unsigned(e32 + f.exponent_bias)) << m) | (mant32 >> shift));
    // E4M3: the top pattern of the reclaimed row is NaN, so 1.111 x 2^8
    // has no encoding even though its exponent is in range.
    if (mag > f.max_normal_bits()) return std::nullopt;
    return Fp8Value{std::uint8_t(sign8 | mag), f};
  }

  // Subnormal range: x must be an exact multiple of min_subnormal. The
  // scaled value is exact in double (24-bit significand, power-of-two shift).
  const double units = std::ldexp(double(std::fabs(x)), f.exponent_bias + m - 1);
  if (units != std::floor(units)) return std::nullopt;
  const auto k = std::uint32_t(units);
  if (k == 0 || k > f.mantissa_mask()) return std::nullopt;
  return Fp8Value{std::uint8_t(sign8 | k), f};
}

std::vector<Fp8Entry> enumerate(const Fp8Format& f) {
  std::vector<Fp8Entry> out;
  out.reserve(256);
  for (unsigned b = 0; b < 256; ++b) {
    const Fp8Value v{std::uint8_t(b), f};
    out.push_back(Fp8Entry{std::uint8_t(b), decode(v), classify(v)});
  }
  return out;
}

int total_order_key(Fp8Value v) {
  assert(classify(v).cls != FpClass::NaN);
  const int mag = v.bits & 0x7F;
  return (v.bits & 0x80u) ? -mag : mag;
}

std::strong_ordering compare(Fp8Value a, Fp8Value b) {
  return total_order_key(a) <=> total_order_key(b);
}

const char* to_string(FpClass c) {
  switch (c) {
    case FpClass::Zero: return "zero";
    case FpClass::Subnormal: return "subnormal";
    case FpClass::Normal: return "normal";
    case FpClass::Infinity: return "infinity";
    case FpClass::NaN: return "nan";
  }
  return "?";
}

const char* to_string(FormatName n) {
  return n == FormatName::E4M3 ? "e4m3" : "e5m2";
}

std::optional<Fp8Format> format_from_string(std::string_view s) {
  if (s == "e4m3") return Fp8Format::e4m3();
  if (s == "e5m2") return Fp8Format::e5m2();
  return std::nullopt;
}

}  // namespace fp8
