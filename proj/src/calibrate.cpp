// SPDX-License-Identifier: Apache-2.0

#include "fp8/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fp8 {

namespace {

void check_tensor(const Tensor& t) {
  if (!shape_valid(t.shape) ||
      element_count(t.shape) != std::int64_t(t.data.size())) {
    throw std::invalid_argument("calibrate: malformed tensor");
  }
}

// Finite elements grouped by slice; one slice for PerTensor, extent(axis)
// slices for PerChannel. Throws EmptySliceError when any slice has no
// finite element.
std::vector<std::vector<float>> gather_finite_slices(const Tensor& t, Granularity g) {
  std::int64_t nslices = 1;
  std::int64_t stride = 1, extent = 1;
  if (g.kind == ScaleGranularity::PerChannel) {
    if (g.axis < 0 || std::size_t(g.axis) >= t.shape.size()) {
      throw std::invalid_argument("calibrate: channel axis out of range");
    }
    extent = t.shape[std::size_t(g.axis)];
    stride = stride_of_axis(t.shape, g.axis);
    nslices = extent;
  }
  std::vector<std::vector<float>> slices(static_cast<std::size_t>(nslices));
  for (std::int64_t i = 0; i < std::int64_t(t.data.size()); ++i) {
    const float x = t.data[std::size_t(i)];
    if (!std::isfinite(x)) continue;
    const std::int64_t s = nslices == 1 ? 0 : (i / stride) % extent;
    slices[std::size_t(s)].push_back(x);
  }
  for (std::size_t s = 0; s < slices.size(); ++s) {
    if (slices[s].empty()) {
      throw EmptySliceError("calibrate: slice " + std::to_string(s) +
                            " has no finite element");
    }
  }
  return slices;
}

float slice_amax(const std::vector<float>& xs) {
  float amax = 0.0f;
  for (const float x : xs) amax = std::max(amax, std::fabs(x));
  return amax;
}

double slice_sse(const std::vector<float>& xs, float scale, const Fp8Format& f) {
  const ScaleFactor s{scale, ScaleConstraint::Free};
  const float recip = 1.0f / scale;
  double sse = 0.0;
  for (const float x : xs) {
    const Fp8Value v = quantize_scaled(x, s, f);
    const float q = decode(v) * recip;
    const double e = double(x) - double(q);
    sse += e * e;
  }
  return sse;
}

}  // namespace

double interpolated_percentile(std::span<const float> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty span");
  if (!(p > 0.0) || p > 100.0) {
    throw std::invalid_argument("percentile must be in (0, 100]");
  }
  const std::size_t n = sorted.size();
  const double rank = (p / 100.0) * double(n - 1);
  const auto lo = std::size_t(std::floor(rank));
  if (lo + 1 >= n) return double(sorted[n - 1]);
  const double w = rank - double(lo);
  return double(sorted[lo]) + w * (double(sorted[lo + 1]) - double(sorted[lo]));
}

double quantization_sse(const Tensor& t, const ScaleSet& scales, const Fp8Format& f) {
  check_tensor(t);
  const bool per_channel = scales.granularity.kind == ScaleGranularity::PerChannel;
  const std::int64_t stride =
      per_channel ? stride_of_axis(t.shape, scales.granularity.axis) : 1;
  const std::int64_t extent =
      per_channel ? t.shape[std::size_t(scales.granularity.axis)] : 1;

  std::vector<float> recips(scales.scales.size());
  for (std::size_t i = 0; i < recips.size(); ++i) {
    recips[i] = 1.0f / scales.scales[i].value;
  }

  double sse = 0.0;
  for (std::int64_t i = 0; i < std::int64_t(t.data.size()); ++i) {
    const float x = t.data[std::size_t(i)];
    if (!std::isfinite(x)) continue;
    const std::size_t c = per_channel ? std::size_t((i / stride) % extent) : 0;
    const Fp8Value v = quantize_scaled(x, scales.scales[c], f);
    const float q = decode(v) * recips[c];
    const double e = double(x) - double(q);
    sse += e * e;
  }
  return sse;
}

CalibrationResult calibrate(const Tensor& t, const Fp8Format& f,
                            CalibrationMethod method, Granularity g) {
  check_tensor(t);
  if (method.kind == CalibrationMethod::Kind::Percentile &&
      (!(method.percentile > 0.0) || method.percentile > 100.0)) {
    throw std::invalid_argument("calibrate: percentile must be in (0, 100]");
  }

  const auto slices = gather_finite_slices(t, g);

  CalibrationResult res;
  res.method = method;
  res.scale_set.granularity = g;
  if (method.kind == CalibrationMethod::Kind::Mse) {
    res.search_trace.emplace();
  }

  for (const auto& xs : slices) {
    switch (method.kind) {
      case CalibrationMethod::Kind::Max: {
        res.scale_set.scales.push_back(
            scale_for_amax(slice_amax(xs), f, ScaleConstraint::Free));
        break;
      }
      case CalibrationMethod::Kind::Percentile: {
        std::vector<float> mags(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) mags[i] = std::fabs(xs[i]);
        std::sort(mags.begin(), mags.end());
        const double v = interpolated_percentile(mags, method.percentile);
        res.scale_set.scales.push_back(
            scale_for_amax(float(v), f, ScaleConstraint::Free));
        break;
      }
      case CalibrationMethod::Kind::Mse: {
        // Quarter-binade grid upward from the max-calibrated scale: the
        // search trades clipping of the largest magnitudes against
        // resolution for the rest. Ties keep the larger scale.
        const ScaleFactor base = scale_for_amax(slice_amax(xs), f, ScaleConstraint::Free);
        float best_scale = base.value;
        double best_obj = 0.0;
        for (int k = 0; k <= 24; ++k) {
          const float cand = float(double(base.value) * std::exp2(double(k) / 4.0));
          const double obj = slice_sse(xs, cand, f);
          res.search_trace->push_back(TracePoint{cand, obj});
          if (k == 0 || obj <= best_obj) {
            best_obj = obj;
            best_scale = cand;
          }
        }
        res.scale_set.scales.push_back(ScaleFactor{best_scale, ScaleConstraint::Free});
        break;
      }
    }
  }

  // Clipped fraction under the chosen scales (exact products in double).
  const bool per_channel = g.kind == ScaleGranularity::PerChannel;
  const std::int64_t stride = per_channel ? stride_of_axis(t.shape, g.axis) : 1;
  const std::int64_t extent = per_channel ? t.shape[std::size_t(g.axis)] : 1;
  std::int64_t finite = 0, clipped = 0;
  for (std::int64_t i = 0; i < std::int64_t(t.data.size()); ++i) {
    const float x = t.data[std::size_t(i)];
    if (!std::isfinite(x)) continue;
    ++finite;
    const std::size_t c = per_channel ? std::size_t((i / stride) % extent) : 0;
    if (std::fabs(double(x) * double(res.scale_set.scales[c].value)) >
        double(f.max_normal())) {
      ++clipped;
    }
  }
  res.clipped_fraction = finite > 0 ? double(clipped) / double(finite) : 0.0;
  return res;
}

CalibrationResult calibrate_best_of(const Tensor& t, const Fp8Format& f,
                                    std::span<const CalibrationMethod> methods,
                                    Granularity g) {
  if (methods.empty()) {
    throw std::invalid_argument("calibrate_best_of: no methods given");
  }
  CalibrationResult best;
  double best_sse = 0.0;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    CalibrationResult res = calibrate(t, f, methods[i], g);
    const double sse = quantization_sse(t, res.scale_set, f);
    if (i == 0 || sse < best_sse) {
      best_sse = sse;
      best = std::move(res);
    }
  }
  return best;
}

}  // namespace fp8
