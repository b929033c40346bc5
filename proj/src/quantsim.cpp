// SPDX-License-Identifier: Apache-2.0

#include "fp8/quantsim.hpp"

#include <cmath>
#include <stdexcept>

namespace fp8 {

namespace {

void check_tensor(const Tensor& t) {
  if (!shape_valid(t.shape) ||
      element_count(t.shape) != std::int64_t(t.data.size())) {
    throw std::invalid_argument("quantize: malformed tensor");
  }
}

ScaleSet resolve_scales(const Tensor& t, const QuantConfig& cfg) {
  switch (cfg.scale_source.kind) {
    case ScaleSource::Kind::None: {
      ScaleSet ss;
      ss.granularity = Granularity::per_tensor();
      ss.scales = {ScaleFactor{1.0f, ScaleConstraint::Free}};
      return ss;
    }
    case ScaleSource::Kind::Explicit: {
      const ScaleSet& ss = cfg.scale_source.scales;
      std::size_t want = 1;
      if (ss.granularity.kind == ScaleGranularity::PerChannel) {
        if (ss.granularity.axis < 0 ||
            std::size_t(ss.granularity.axis) >= t.shape.size()) {
          throw std::invalid_argument("quantize: scale axis out of range");
        }
        want = std::size_t(t.shape[std::size_t(ss.granularity.axis)]);
      }
      if (ss.scales.size() != want) {
        throw std::invalid_argument("quantize: scale count does not match shape");
      }
      for (const auto& s : ss.scales) {
        if (!(s.value > 0.0f) || !std::isfinite(s.value)) {
          throw std::invalid_argument("quantize: scales must be positive and finite");
        }
      }
      return ss;
    }
    case ScaleSource::Kind::Auto:
      return calibrate(t, cfg.format, cfg.scale_source.method,
                       cfg.scale_source.granularity)
          .scale_set;
    case ScaleSource::Kind::AutoBest:
      return calibrate_best_of(t, cfg.format, cfg.scale_source.methods,
                               cfg.scale_source.granularity)
          .scale_set;
  }
  throw std::logic_error("quantize: bad scale source");
}

struct PipelineOut {
  std::vector<std::uint8_t> bits;
  std::vector<float> dequant;
  QuantReport report;
};

PipelineOut run_pipeline(const Tensor& t, const QuantConfig& cfg) {
  check_tensor(t);
  PipelineOut out;
  out.report.scale_set_used = resolve_scales(t, cfg);
  const ScaleSet& ss = out.report.scale_set_used;

  const bool per_channel = ss.granularity.kind == ScaleGranularity::PerChannel;
  const std::int64_t stride = per_channel ? stride_of_axis(t.shape, ss.granularity.axis) : 1;
  const std::int64_t extent = per_channel ? t.shape[std::size_t(ss.granularity.axis)] : 1;

  std::vector<float> recips(ss.scales.size());
  for (std::size_t i = 0; i < recips.size(); ++i) {
    recips[i] = 1.0f / ss.scales[i].value;
  }

  const std::int64_t n = std::int64_t(t.data.size());
  out.bits.resize(std::size_t(n));
  out.dequant.resize(std::size_t(n));

  const double sat = double(cfg.format.saturation_threshold());
  double sum_err2 = 0.0, sum_sig2 = 0.0, max_abs_err = 0.0;
  std::int64_t accumulated = 0;

  for (std::int64_t i = 0; i < n; ++i) {
    const float x = t.data[std::size_t(i)];
    const std::size_t c = per_channel ? std::size_t((i / stride) % extent) : 0;
    const float scaled = x * ss.scales[c].value;
    const Fp8Value v = convert_to_fp8(scaled, cfg.format, cfg.round, cfg.overflow,
                                      cfg.seed, std::uint64_t(i));
    const float d = decode(v);
    const float q = d * recips[c];
    out.bits[std::size_t(i)] = v.bits;
    out.dequant[std::size_t(i)] = q;

    if (!std::isfinite(x)) {
      ++out.report.special_in_count;
      continue;
    }
    if (std::fabs(scaled) >= sat) ++out.report.overflow_count;
    if (x != 0.0f && d == 0.0f) ++out.report.underflow_to_zero_count;
    if (!std::isfinite(q)) continue;  // scaled product left binary32 range
    const double e = double(x) - double(q);
    sum_err2 += e * e;
    sum_sig2 += double(x) * double(x);
    max_abs_err = std::max(max_abs_err, std::fabs(e));
    ++accumulated;
  }

  out.report.mse = accumulated > 0 ? sum_err2 / double(accumulated) : 0.0;
  out.report.max_abs_err = max_abs_err;
  out.report.sqnr_db = sum_err2 > 0.0
                           ? 10.0 * std::log10(sum_sig2 / sum_err2)
                           : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

std::pair<Tensor, QuantReport> fake_quantize(const Tensor& t, const QuantConfig& cfg) {
  PipelineOut out = run_pipeline(t, cfg);
  return {Tensor{t.shape, std::move(out.dequant)}, std::move(out.report)};
}

std::pair<Fp8Tensor, QuantReport> quantize_tensor(const Tensor& t, const QuantConfig& cfg) {
  PipelineOut out = run_pipeline(t, cfg);
  return {Fp8Tensor{t.shape, std::move(out.bits), cfg.format}, std::move(out.report)};
}

QuantConfig default_config(TensorRole role) {
  QuantConfig cfg;
  switch (role) {
    case TensorRole::Weight:
      cfg.format = Fp8Format::e4m3();
      cfg.scale_source = ScaleSource::auto_calibrated(CalibrationMethod::max(),
                                                      Granularity::per_channel(0));
      break;
    case TensorRole::Activation:
      cfg.format = Fp8Format::e4m3();
      cfg.scale_source = ScaleSource::best_of(
          {CalibrationMethod::max(), CalibrationMethod::percentile_of(99.99),
           CalibrationMethod::mse()},
          Granularity::per_tensor());
      break;
    case TensorRole::Gradient:
      cfg.format = Fp8Format::e5m2();
      cfg.scale_source = ScaleSource::auto_calibrated(CalibrationMethod::max(),
                                                      Granularity::per_tensor());
      break;
  }
  return cfg;
}

GemmIoQuantResult quantize_pair_gemm_io(const Tensor& weights, const Tensor& activations,
                                        std::optional<QuantConfig> weight_cfg,
                                        std::optional<QuantConfig> activation_cfg) {
  const QuantConfig wc = weight_cfg ? *weight_cfg : default_config(TensorRole::Weight);
  const QuantConfig ac =
      activation_cfg ? *activation_cfg : default_config(TensorRole::Activation);
  auto [wt, wr] = fake_quantize(weights, wc);
  auto [at, ar] = fake_quantize(activations, ac);
  return {std::move(wt), std::move(at), std::move(wr), std::move(ar)};
}

std::vector<BiasSweepPoint> bias_sweep(const Tensor& t, const Fp8Format& f,
                                       int bias_lo, int bias_hi, SweepMetric metric) {
  check_tensor(t);
  if (bias_lo > bias_hi) {
    throw std::invalid_argument("bias_sweep: empty bias range");
  }
  std::vector<BiasSweepPoint> points;
  points.reserve(std::size_t(bias_hi - bias_lo + 1));
  for (int b = bias_lo; b <= bias_hi; ++b) {
    double sum_err2 = 0.0, max_abs_err = 0.0;
    std::int64_t finite = 0;
    for (const float x : t.data) {
      if (!std::isfinite(x)) continue;
      const float q = emulate_bias_cast(x, f, b);
      const double e = double(x) - double(q);
      sum_err2 += e * e;
      max_abs_err = std::max(max_abs_err, std::fabs(e));
      ++finite;
    }
    const double value = metric == SweepMetric::Mse
                             ? (finite > 0 ? sum_err2 / double(finite) : 0.0)
                             : max_abs_err;
    points.push_back(BiasSweepPoint{b, value});
  }
  return points;
}

}  // namespace fp8
