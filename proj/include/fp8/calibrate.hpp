// SPDX-License-Identifier: Apache-2.0
//
// Scale calibration from tensor statistics: plain max, interpolated
// percentile of magnitudes, and a grid search minimizing quantization MSE.
// NaN/Inf elements never contribute to statistics.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fp8/scaling.hpp"
#include "fp8/tensor.hpp"

namespace fp8 {

struct CalibrationMethod {
  enum class Kind : std::uint8_t { Max, Percentile, Mse };
  Kind kind = Kind::Max;
  double percentile = 100.0;  // Percentile only; valid range (0, 100]

  static CalibrationMethod max() { return {Kind::Max, 100.0}; }
  static CalibrationMethod percentile_of(double p) { return {Kind::Percentile, p}; }
  static CalibrationMethod mse() { return {Kind::Mse, 100.0}; }
};

// A channel slice (or the whole tensor) held no finite element.
class EmptySliceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TracePoint {
  float scale;
  double objective;  // sum of squared error at that candidate scale
};

struct CalibrationResult {
  ScaleSet scale_set;
  // Fraction of finite elements whose scaled magnitude exceeds max_normal
  // under the chosen scales.
  double clipped_fraction = 0.0;
  CalibrationMethod method;
  // Mse only: every (candidate scale, objective) pair visited, slices in
  // order.
  std::optional<std::vector<TracePoint>> search_trace;
};

CalibrationResult calibrate(const Tensor& t, const Fp8Format& f,
                            CalibrationMethod method, Granularity g);

// Runs every method and keeps the one whose scales give the smallest
// tensor-level quantization MSE; ties keep the earliest method.
CalibrationResult calibrate_best_of(const Tensor& t, const Fp8Format& f,
                                    std::span<const CalibrationMethod> methods,
                                    Granularity g);

// Sum of squared quantize/dequantize error over finite elements under
// round-to-nearest-even with saturation, accumulated in double in element
// order.
double quantization_sse(const Tensor& t, const ScaleSet& scales, const Fp8Format& f);

// Linear interpolation between order statistics; `sorted` ascending,
// p in (0, 100]. p == 100 returns the last element unchanged.
double interpolated_percentile(std::span<const float> sorted, double p);

}  // namespace fp8
