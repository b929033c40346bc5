// SPDX-License-Identifier: Apache-2.0
//
// Release gate. Each numbered criterion prints exactly one [PASS]/[FAIL]
// line with the measured numbers; the process exits nonzero if any line
// failed. Expected values and tolerances are pinned in this file — when a
// criterion cannot hold, the line stays red rather than being loosened.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "fp8/calibrate.hpp"
#include "fp8/convert.hpp"
#include "fp8/format.hpp"
#include "fp8/quantsim.hpp"
#include "fp8/scaling.hpp"
#include "fp8/tensorio.hpp"
#include "oracle.hpp"

using namespace fp8;

namespace {

int failures = 0;

void line(int idx, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d. %s — %s\n", ok ? "PASS" : "FAIL", idx, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string sfmt(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

const Fp8Format e4 = Fp8Format::e4m3();
const Fp8Format e5 = Fp8Format::e5m2();

// ---- 1. extremal magnitudes -------------------------------------------

void c1_extremal_magnitudes() {
  int bad = 0;
  const auto expect = [&](bool c) { bad += c ? 0 : 1; };
  expect(e4.max_normal() == 448.0f);
  expect(e4.min_normal() == 0.015625f);
  expect(e4.max_subnormal() == 0.013671875f);
  expect(e4.min_subnormal() == 0.001953125f);
  expect(e5.max_normal() == 57344.0f);
  expect(e5.min_normal() == 6.103515625e-05f);
  expect(e5.max_subnormal() == 4.57763671875e-05f);
  expect(e5.min_subnormal() == 1.52587890625e-05f);
  expect(e4.saturation_threshold() == 464.0f);
  expect(e5.saturation_threshold() == 61440.0f);
  expect(e4.exponent_bias == 7);
  expect(e5.exponent_bias == 15);
  expect(e4.max_normal_bits() == 0x7E);
  expect(e5.max_normal_bits() == 0x7B);
  line(1, "extremal magnitudes and thresholds", bad == 0,
       bad == 0 ? "14 pinned constants match" : sfmt("%d mismatches", bad));
}

// ---- 2. special-value census ------------------------------------------

void c2_census() {
  struct Counts {
    int nan = 0, inf = 0, zero = 0, sub = 0, norm = 0;
  };
  const auto census = [](const Fp8Format& f) {
    Counts c;
    for (const auto& e : enumerate(f)) {
      switch (e.cls.cls) {
        case FpClass::NaN: ++c.nan; break;
        case FpClass::Infinity: ++c.inf; break;
        case FpClass::Zero: ++c.zero; break;
        case FpClass::Subnormal: ++c.sub; break;
        case FpClass::Normal: ++c.norm; break;
      }
    }
    return c;
  };
  const Counts a = census(e4), b = census(e5);
  const bool ok = a.nan == 2 && a.inf == 0 && a.zero == 2 && a.sub == 14 &&
                  a.norm == 238 && b.nan == 6 && b.inf == 2 && b.zero == 2 &&
                  b.sub == 6 && b.norm == 240;
  line(2, "special-value census", ok,
       sfmt("e4m3 nan/inf/zero/sub/norm = %d/%d/%d/%d/%d, e5m2 = %d/%d/%d/%d/%d",
            a.nan, a.inf, a.zero, a.sub, a.norm, b.nan, b.inf, b.zero, b.sub, b.norm));
}

// ---- 3. reclaimed top binade ------------------------------------------

void c3_reclaimed_binade() {
  std::set<float> top;
  for (const auto& e : enumerate(e4)) {
    if (e.cls.cls == FpClass::Normal && e.cls.sign == Sign::Pos && e.value >= 256.0f) {
      top.insert(e.value);
    }
  }
  const bool top_ok = top == std::set<float>{256, 288, 320, 352, 384, 416, 448};

  const Fp8Format ieee_variant{FormatName::E4M3, 4, 3, 7, SpecialPolicy::FullIEEE};
  const bool ieee_ok =
      ieee_variant.max_normal() == 240.0f && ieee_variant.max_normal_bits() == 0x77;

  const auto binades = [](const Fp8Format& f) {
    return int(std::ceil(std::log2(double(f.max_normal()) / double(f.min_subnormal()))));
  };
  const int b4 = binades(e4), b5 = binades(e5);
  line(3, "reclaimed top binade", top_ok && ieee_ok && b4 == 18 && b5 == 32,
       sfmt("top magnitudes %s, ieee-style max %.0f (0x%02X), binades %d/%d",
            top_ok ? "= {256..448 by 32}" : "WRONG", double(ieee_variant.max_normal()),
            unsigned(ieee_variant.max_normal_bits()), b4, b5));
}

// ---- 4. conversion equals the brute-force scan ------------------------

void c4_oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  long mismatches = 0;
  const std::size_t n = 1200000;
  for (const Fp8Format f : {e4, e5}) {
    const auto xs = oracle::stratified_inputs(0xACCE55 + unsigned(f.exponent_bias), n, f);
    for (const float x : xs) {
      for (const OverflowMode o : {OverflowMode::Saturate, OverflowMode::NonSaturating}) {
        if (convert_to_fp8(x, f, RoundingMode::NearestEven, o).bits !=
            oracle::convert_bits(x, f, RoundingMode::NearestEven, o)) {
          ++mismatches;
        }
        if (convert_to_fp8(x, f, RoundingMode::TowardZero, o).bits !=
            oracle::convert_bits(x, f, RoundingMode::TowardZero, o)) {
          ++mismatches;
        }
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  line(4, "cast equals nearest-scan reference", mismatches == 0 && secs < 60.0,
       sfmt("%zu stratified inputs/format, rne+tz, both overflow modes: %ld mismatches "
            "in %.1fs",
            n, mismatches, secs));
}

// ---- 5. order and round-trip structure --------------------------------

void c5_order_and_roundtrip() {
  int bad = 0;
  for (const Fp8Format f : {e4, e5}) {
    std::vector<Fp8Entry> finite;
    for (const auto& e : enumerate(f)) {
      if (e.cls.cls == FpClass::NaN) {
        const auto enc = encode_exact(e.value, f);
        if (!enc) ++bad;
        continue;
      }
      const auto enc = encode_exact(e.value, f);
      if (!enc || enc->bits != e.bits) ++bad;
      if (e.cls.cls != FpClass::Infinity) finite.push_back(e);
    }
    // total_order_key and compare() agree with value order on every pair
    for (const auto& a : finite) {
      for (const auto& b : finite) {
        const int ka = total_order_key(Fp8Value{a.bits, f});
        const int kb = total_order_key(Fp8Value{b.bits, f});
        if ((a.value < b.value) != (ka < kb)) ++bad;
        const auto c = compare(Fp8Value{a.bits, f}, Fp8Value{b.bits, f});
        if ((a.value < b.value) != (c == std::strong_ordering::less)) ++bad;
      }
    }
    // decoded nearest-even cast is monotone over a dense grid
    const double hi = double(f.saturation_threshold()) * 1.1;
    float prev = -std::numeric_limits<float>::infinity();
    for (int i = 0; i <= 100000; ++i) {
      const float x = float(-hi + 2 * hi * double(i) / 100000.0);
      const float q = decode(convert_to_fp8(x, f));
      if (!(q >= prev)) ++bad;
      prev = q;
    }
  }
  line(5, "encode/decode round trip and total order", bad == 0,
       bad == 0 ? "identity on all patterns, order keys consistent, cast monotone"
                : sfmt("%d violations", bad));
}

// ---- 6. stochastic rounding is unbiased -------------------------------

void c6_stochastic_unbiased() {
  struct Probe {
    Fp8Format f;
    std::uint8_t code;  // lower bracket; code+1 is the upper
  };
  const Probe probes[] = {
      {e4, 0x01}, {e4, 0x04}, {e4, 0x08}, {e4, 0x20}, {e4, 0x30},
      {e4, 0x38}, {e4, 0x48}, {e4, 0x60}, {e4, 0x70}, {e4, 0x7D},
      {e5, 0x01}, {e5, 0x03}, {e5, 0x10}, {e5, 0x20}, {e5, 0x30},
      {e5, 0x3C}, {e5, 0x50}, {e5, 0x60}, {e5, 0x70}, {e5, 0x7A},
  };
  const double fracs[] = {0.25, 0.5, 0.75};
  const int trials = 100000;
  int bad = 0;
  double worst_sigma = 0.0;
  for (std::size_t pi = 0; pi < std::size(probes); ++pi) {
    const auto& pr = probes[pi];
    const float lo = decode(Fp8Value{pr.code, pr.f});
    const float hi = decode(Fp8Value{std::uint8_t(pr.code + 1), pr.f});
    const double frac = fracs[pi % 3];
    const float x = float(double(lo) + (double(hi) - double(lo)) * frac);
    const double p = (double(x) - double(lo)) / (double(hi) - double(lo));
    int ups = 0;
    for (int i = 0; i < trials; ++i) {
      const float q = decode(convert_to_fp8(x, pr.f, RoundingMode::Stochastic,
                                            OverflowMode::Saturate, 2026 + pi, i));
      if (q == hi) {
        ++ups;
      } else if (q != lo) {
        ++bad;  // landed off the bracketing pair
      }
    }
    const double se = std::sqrt(p * (1.0 - p) / trials);
    const double sigma = std::fabs(double(ups) / trials - p) / se;
    worst_sigma = std::max(worst_sigma, sigma);
    if (sigma > 4.0) ++bad;
  }
  line(6, "stochastic rounding unbiased", bad == 0,
       sfmt("20 bracket points x %d trials, worst deviation %.2f sigma (gate 4.0)",
            trials, worst_sigma));
}

// ---- 7. exponent-bias emulation ----------------------------------------

void c7_bias_emulation() {
  int bad = 0;
  long checked = 0;
  for (int b = 4; b <= 12; ++b) {
    const auto grid = oracle::e4m3_bias_set(b);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const float v = float(grid[i].value);
      if (emulate_bias_cast(v, e4, b) != v) ++bad;
      if (emulate_bias_cast(-v, e4, b) != -v) ++bad;
      checked += 2;
      if (i + 1 < grid.size()) {
        // midpoint and quarter points of each adjacent pair
        for (const double w : {0.25, 0.5, 0.75}) {
          const float x = float(grid[i].value + (grid[i + 1].value - grid[i].value) * w);
          const float got = emulate_bias_cast(x, e4, b);
          const float want = oracle::bias_cast_ref(x, grid);
          if (std::bit_cast<std::uint32_t>(got) != std::bit_cast<std::uint32_t>(want)) {
            ++bad;
          }
          ++checked;
        }
      }
    }
    std::uint64_t rng = 0xB1A5 + std::uint64_t(b);
    const float span = float(grid.back().value) * 1.2f;
    for (int i = 0; i < 10000; ++i) {
      const float x = oracle::uniform_float(rng, -span, span);
      const float got = emulate_bias_cast(x, e4, b);
      const float want = oracle::bias_cast_ref(x, grid);
      if (std::bit_cast<std::uint32_t>(got) != std::bit_cast<std::uint32_t>(want)) ++bad;
      ++checked;
    }
    if (!std::isnan(emulate_bias_cast(std::numeric_limits<float>::infinity(), e4, b))) ++bad;
    if (!std::isnan(emulate_bias_cast(std::numeric_limits<float>::quiet_NaN(), e4, b))) ++bad;
    checked += 2;
  }
  line(7, "bias-b cast emulation", bad == 0,
       sfmt("biases 4..12 vs independent grid scan: %ld probes, %d bitwise mismatches",
            checked, bad));
}

// ---- 8. bias sweep finds an interior optimum ---------------------------

Tensor lognormal_fixture() {
  return oracle::flat_tensor(oracle::lognormal_signed(11, 100000, 2.0));
}

void c8_sweep_interior_optimum() {
  const Tensor t = lognormal_fixture();
  const auto pts = bias_sweep(t, e4, 0, 15, SweepMetric::Mse);
  int argmin = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].value < pts[std::size_t(argmin)].value) argmin = int(i);
  }
  const int best_bias = pts[std::size_t(argmin)].bias;
  const double best_mse = pts[std::size_t(argmin)].value;

  QuantConfig cfg;
  cfg.format = e4;
  cfg.scale_source = ScaleSource::auto_calibrated(CalibrationMethod::max(),
                                                  Granularity::per_tensor());
  const auto [qt, rep] = fake_quantize(t, cfg);

  const bool interior = best_bias > 0 && best_bias < 15;
  const bool amax_wins = rep.mse <= best_mse;
  line(8, "per-tensor scaling beats every fixed bias", interior && amax_wins,
       sfmt("sweep argmin bias %d (mse %.3f), amax-scaled mse %.3f", best_bias, best_mse,
            rep.mse));
}

// ---- 9. calibration method relationships -------------------------------

void c9_calibration_methods() {
  // (a) percentile 100 is exactly max calibration
  std::uint64_t rng = 0x100;
  int pct_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> v;
    const std::size_t n = 50 + oracle::next_u64(rng) % 450;
    for (std::size_t i = 0; i < n; ++i) {
      v.push_back(oracle::uniform_float(rng, -600.0f, 600.0f));
    }
    const auto t = oracle::flat_tensor(v);
    const auto a = calibrate(t, e4, CalibrationMethod::percentile_of(100.0),
                             Granularity::per_tensor());
    const auto b = calibrate(t, e4, CalibrationMethod::max(), Granularity::per_tensor());
    if (a.scale_set.scales[0].value != b.scale_set.scales[0].value) ++pct_bad;
  }

  // (b) on a heavy-outlier tensor a clipping method must win best-of with
  // strictly lower error than max calibration
  std::vector<float> v(999, 0.01f);
  v.push_back(448.0f);
  const auto t = oracle::flat_tensor(v);
  const CalibrationMethod methods[] = {CalibrationMethod::max(),
                                       CalibrationMethod::percentile_of(99.99),
                                       CalibrationMethod::mse()};
  const auto best = calibrate_best_of(t, e4, methods, Granularity::per_tensor());
  const auto mx = calibrate(t, e4, CalibrationMethod::max(), Granularity::per_tensor());
  const double sse_best = quantization_sse(t, best.scale_set, e4);
  const double sse_max = quantization_sse(t, mx.scale_set, e4);
  const char* winner = best.method.kind == CalibrationMethod::Kind::Max ? "max"
                       : best.method.kind == CalibrationMethod::Kind::Percentile
                           ? "percentile"
                           : "mse";
  const bool outlier_ok =
      best.method.kind != CalibrationMethod::Kind::Max && sse_best < sse_max;

  line(9, "percentile-100 = max; clipping wins on outlier tensor",
       pct_bad == 0 && outlier_ok,
       sfmt("pct100 equal on %d/100 tensors; outlier best-of winner '%s', sse %.6g vs "
            "max %.6g",
            100 - pct_bad, winner, sse_best, sse_max));
}

// ---- 10. scaling is the point ------------------------------------------

void c10_scaling_benefit() {
  const Tensor t = lognormal_fixture();
  QuantConfig none;
  none.format = e4;
  none.scale_source = ScaleSource::none();
  const auto [o1, unscaled] = fake_quantize(t, none);

  QuantConfig amax;
  amax.format = e4;
  amax.scale_source = ScaleSource::auto_calibrated(CalibrationMethod::max(),
                                                   Granularity::per_tensor());
  const auto [o2, scaled] = fake_quantize(t, amax);

  line(10, "amax scaling lowers quantization error", unscaled.mse > scaled.mse,
       sfmt("unscaled mse %.3f vs amax-scaled %.3f", unscaled.mse, scaled.mse));
}

// ---- 11. container round trip and validation ---------------------------

void c11_container() {
  int bad = 0;
  const std::string path = "./acc_c11.fpt";

  Tensor t;
  t.shape = {2, 3};
  t.data = {1.0f, -0.0f, std::bit_cast<float>(std::uint32_t{0x7FC01234}), 3.14159f,
            -448.0f, 1e-40f};
  write_tensor(path, t);
  const auto got = read_tensor(path);
  if (!std::holds_alternative<Tensor>(got)) {
    ++bad;
  } else {
    const auto& r = std::get<Tensor>(got);
    if (r.shape != t.shape) ++bad;
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      if (std::bit_cast<std::uint32_t>(r.data[i]) !=
          std::bit_cast<std::uint32_t>(t.data[i])) {
        ++bad;
      }
    }
  }

  Fp8Tensor q;
  q.shape = {4};
  q.data = {0x00, 0x7E, 0xFF, 0x38};
  q.format = e4;
  write_tensor(path, q);
  const auto got8 = read_tensor(path);
  if (!std::holds_alternative<Fp8Tensor>(got8) ||
      std::get<Fp8Tensor>(got8).data != q.data) {
    ++bad;
  }

  // one fixture per header-validation error
  const auto expect_kind = [&](const std::vector<std::uint8_t>& bytes,
                               TensorIoError::Kind want) {
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(bytes.data()),
                std::streamsize(bytes.size()));
    }
    try {
      (void)read_tensor(path);
      ++bad;
    } catch (const TensorIoError& e) {
      if (e.kind() != want) ++bad;
    }
  };
  // a valid one-element binary32 file, built by hand
  std::vector<std::uint8_t> seed = {'F', 'P', 'T', '1', 0, 1, 0, 0,
                                    1,   0,   0,   0,   0, 0, 0, 0,
                                    0,   0,   0xC0, 0x3F};  // 1.5f
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(seed.data()), std::streamsize(seed.size()));
  }
  try {
    const auto ok = read_tensor(path);
    if (std::get<Tensor>(ok).data[0] != 1.5f) ++bad;
  } catch (...) {
    ++bad;
  }

  auto mut = seed;
  mut[0] = 'X';
  expect_kind(mut, TensorIoError::Kind::BadMagic);
  mut = seed;
  mut[4] = 3;
  expect_kind(mut, TensorIoError::Kind::BadDtype);
  mut = seed;
  mut[5] = 0;
  expect_kind(mut, TensorIoError::Kind::RankOutOfRange);
  mut = seed;
  mut[5] = 9;
  expect_kind(mut, TensorIoError::Kind::RankOutOfRange);
  mut = seed;
  mut[6] = 1;
  expect_kind(mut, TensorIoError::Kind::BadReserved);
  mut = seed;
  mut[8] = 0;
  expect_kind(mut, TensorIoError::Kind::BadDims);
  mut = seed;
  mut.pop_back();
  expect_kind(mut, TensorIoError::Kind::TruncatedPayload);
  mut = seed;
  mut.push_back(0xAA);
  expect_kind(mut, TensorIoError::Kind::TruncatedPayload);
  expect_kind({seed.begin(), seed.begin() + 10}, TensorIoError::Kind::TruncatedPayload);
  expect_kind({seed.begin(), seed.begin() + 5}, TensorIoError::Kind::BadMagic);

  try {
    (void)read_tensor("./acc_definitely_missing.fpt");
    ++bad;
  } catch (const TensorIoError& e) {
    if (e.kind() != TensorIoError::Kind::Io) ++bad;
  }

  std::remove(path.c_str());
  line(11, "container round trip and validation", bad == 0,
       bad == 0 ? "bit-exact round trips; 11 malformed fixtures rejected by kind"
                : sfmt("%d violations", bad));
}

}  // namespace

int main() {
  c1_extremal_magnitudes();
  c2_census();
  c3_reclaimed_binade();
  c4_oracle_equivalence();
  c5_order_and_roundtrip();
  c6_stochastic_unbiased();
  c7_bias_emulation();
  c8_sweep_interior_optimum();
  c9_calibration_methods();
  c10_scaling_benefit();
  c11_container();
  std::printf("%d of 11 criteria hold\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
