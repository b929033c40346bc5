// SPDX-License-Identifier: Apache-2.0
//
// Fake quantization: push a binary32 tensor through scale -> FP8 cast ->
// decode -> unscale and report the damage. Statistics accumulate in double
// in element order, so results are deterministic; stochastic rounding is
// keyed on (seed, element index) and independent of any partitioning.

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "fp8/calibrate.hpp"

namespace fp8 {

struct ScaleSource {
  enum class Kind : std::uint8_t { None, Explicit, Auto, AutoBest };
  Kind kind = Kind::None;
  ScaleSet scales;                         // Explicit
  CalibrationMethod method;                // Auto
  std::vector<CalibrationMethod> methods;  // AutoBest
  Granularity granularity;                 // Auto / AutoBest

  static ScaleSource none() { return {}; }
  static ScaleSource explicit_scales(ScaleSet s) {
    ScaleSource src;
    src.kind = Kind::Explicit;
    src.scales = std::move(s);
    return src;
  }
  static ScaleSource auto_calibrated(CalibrationMethod m, Granularity g) {
    ScaleSource src;
    src.kind = Kind::Auto;
    src.method = m;
    src.granularity = g;
    return src;
  }
  static ScaleSource best_of(std::vector<CalibrationMethod> ms, Granularity g) {
    ScaleSource src;
    src.kind = Kind::AutoBest;
    src.methods = std::move(ms);
    src.granularity = g;
    return src;
  }
};

struct QuantConfig {
  Fp8Format format = Fp8Format::e4m3();
  RoundingMode round = RoundingMode::NearestEven;
  OverflowMode overflow = OverflowMode::Saturate;
  std::uint64_t seed = 0;
  ScaleSource scale_source;
};

struct QuantReport {
  // Error statistics cover finite inputs whose round trip stayed finite;
  // NaN/Inf inputs only show up in special_in_count.
  double mse = 0.0;
  double max_abs_err = 0.0;
  // +infinity when the quantization error is exactly zero.
  double sqnr_db = std::numeric_limits<double>::infinity();
  // Finite elements whose scaled magnitude reached the round-to-nearest
  // saturation threshold.
  std::int64_t overflow_count = 0;
  // Nonzero finite elements quantized to zero.
  std::int64_t underflow_to_zero_count = 0;
  std::int64_t special_in_count = 0;
  ScaleSet scale_set_used;
};

std::pair<Tensor, QuantReport> fake_quantize(const Tensor& t, const QuantConfig& cfg);

// Same pipeline, returning the raw FP8 patterns instead of the dequantized
// tensor.
std::pair<Fp8Tensor, QuantReport> quantize_tensor(const Tensor& t, const QuantConfig& cfg);

enum class TensorRole : std::uint8_t { Weight, Activation, Gradient };

// Weights: E4M3, max calibration per output channel (axis 0).
// Activations: E4M3, best of max/percentile/MSE per tensor.
// Gradients: E5M2, max calibration per tensor.
QuantConfig default_config(TensorRole role);

struct GemmIoQuantResult {
  Tensor weights;
  Tensor activations;
  QuantReport weight_report;
  QuantReport activation_report;
};

// Fake-quantize a GEMM input pair with the role defaults above (or caller
// overrides).
GemmIoQuantResult quantize_pair_gemm_io(const Tensor& weights, const Tensor& activations,
                                        std::optional<QuantConfig> weight_cfg = {},
                                        std::optional<QuantConfig> activation_cfg = {});

enum class SweepMetric : std::uint8_t { Mse, MaxAbsErr };

struct BiasSweepPoint {
  int bias;
  double value;
};

// Error of emulate_bias_cast over finite elements for each bias in
// [bias_lo, bias_hi] (round-to-nearest-even, saturating).
std::vector<BiasSweepPoint> bias_sweep(const Tensor& t, const Fp8Format& f,
                                       int bias_lo, int bias_hi, SweepMetric metric);

}  // namespace fp8
