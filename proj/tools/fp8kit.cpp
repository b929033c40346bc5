// SPDX-License-Identifier: Apache-2.0
//
// fp8kit: FP8 format tables, scalar conversion, tensor quantization,
// calibration, bias sweeps, and tensor statistics. JSON on stdout,
// diagnostics on stderr. Exit codes: 0 success, 1 data error, 2 usage.

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fp8/calibrate.hpp"
#include "fp8/convert.hpp"
#include "fp8/format.hpp"
#include "fp8/quantsim.hpp"
#include "fp8/tensorio.hpp"

using nlohmann::ordered_json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string hex_bits(std::uint8_t b) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "0x%02X", unsigned(b));
  return buf;
}

ordered_json value_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

fp8::Fp8Format parse_format(const std::string& s) {
  const auto f = fp8::format_from_string(s);
  if (!f) throw UsageError("unknown format '" + s + "' (expected e4m3 or e5m2)");
  return *f;
}

fp8::RoundingMode parse_round(const std::string& s) {
  if (s == "rne") return fp8::RoundingMode::NearestEven;
  if (s == "stochastic") return fp8::RoundingMode::Stochastic;
  if (s == "toward-zero") return fp8::RoundingMode::TowardZero;
  throw UsageError("unknown rounding mode '" + s + "'");
}

fp8::OverflowMode parse_overflow(const std::string& s) {
  if (s == "saturate") return fp8::OverflowMode::Saturate;
  if (s == "nonsat") return fp8::OverflowMode::NonSaturating;
  throw UsageError("unknown overflow mode '" + s + "'");
}

fp8::Granularity parse_granularity(const std::string& s) {
  if (s == "tensor") return fp8::Granularity::per_tensor();
  if (s.rfind("channel:", 0) == 0) {
    const std::string axis = s.substr(8);
    char* end = nullptr;
    const long v = std::strtol(axis.c_str(), &end, 10);
    if (axis.empty() || *end != '\0' || v < 0) {
      throw UsageError("bad channel axis in '" + s + "'");
    }
    return fp8::Granularity::per_channel(int(v));
  }
  throw UsageError("unknown granularity '" + s + "' (expected tensor or channel:<axis>)");
}

float parse_float(const std::string& s) {
  char* end = nullptr;
  const float v = std::strtof(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw UsageError("cannot parse number '" + s + "'");
  return v;
}

void check_percentile(double p) {
  if (!(p > 0.0) || p > 100.0) {
    throw UsageError("percentile must be in (0, 100]");
  }
}

fp8::ScaleSource parse_scale_source(const std::string& spec, const fp8::Granularity& g,
                                    double percentile) {
  if (spec == "none") return fp8::ScaleSource::none();
  if (spec == "auto:max") {
    return fp8::ScaleSource::auto_calibrated(fp8::CalibrationMethod::max(), g);
  }
  if (spec == "auto:percentile") {
    check_percentile(percentile);
    return fp8::ScaleSource::auto_calibrated(
        fp8::CalibrationMethod::percentile_of(percentile), g);
  }
  if (spec == "auto:mse") {
    return fp8::ScaleSource::auto_calibrated(fp8::CalibrationMethod::mse(), g);
  }
  if (spec == "auto:best") {
    check_percentile(percentile);
    return fp8::ScaleSource::best_of(
        {fp8::CalibrationMethod::max(), fp8::CalibrationMethod::percentile_of(percentile),
         fp8::CalibrationMethod::mse()},
        g);
  }
  if (spec.rfind("fixed:", 0) == 0) {
    const float v = parse_float(spec.substr(6));
    if (!(v > 0.0f) || !std::isfinite(v)) {
      throw UsageError("fixed scale must be positive and finite");
    }
    if (g.kind != fp8::ScaleGranularity::PerTensor) {
      throw UsageError("fixed:<f> requires per-tensor granularity");
    }
    fp8::ScaleSet ss;
    ss.granularity = g;
    ss.scales = {fp8::ScaleFactor{v, fp8::ScaleConstraint::Free}};
    return fp8::ScaleSource::explicit_scales(ss);
  }
  throw UsageError("unknown scale spec '" + spec +
                   "' (expected auto:max, auto:percentile, auto:mse, auto:best, "
                   "fixed:<f>, or none)");
}

ordered_json scale_set_json(const fp8::ScaleSet& ss) {
  ordered_json j;
  if (ss.granularity.kind == fp8::ScaleGranularity::PerTensor) {
    j["granularity"] = "tensor";
    j["scale"] = double(ss.scales.at(0).value);
  } else {
    j["granularity"] = "channel";
    j["axis"] = ss.granularity.axis;
    auto arr = ordered_json::array();
    for (const auto& s : ss.scales) arr.push_back(double(s.value));
    j["per_channel_scales"] = std::move(arr);
  }
  return j;
}

ordered_json report_json(const fp8::QuantReport& r) {
  ordered_json j;
  j["mse"] = r.mse;
  j["max_abs_err"] = r.max_abs_err;
  j["sqnr_db"] = std::isinf(r.sqnr_db) ? ordered_json("inf") : ordered_json(r.sqnr_db);
  j["overflow_count"] = r.overflow_count;
  j["underflow_to_zero_count"] = r.underflow_to_zero_count;
  j["special_in_count"] = r.special_in_count;
  j["scale"] = scale_set_json(r.scale_set_used);
  return j;
}

fp8::Tensor load_binary32(const std::string& path) {
  auto loaded = fp8::read_tensor(path);
  if (std::holds_alternative<fp8::Tensor>(loaded)) {
    return std::get<fp8::Tensor>(std::move(loaded));
  }
  return fp8::decode_tensor(std::get<fp8::Fp8Tensor>(loaded));
}

void print_json(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_table(const std::string& format) {
  const fp8::Fp8Format f = parse_format(format);
  ordered_json j;
  j["format"] = fp8::to_string(f.name);
  ordered_json limits;
  limits["max_normal"] = double(f.max_normal());
  limits["min_normal"] = double(f.min_normal());
  limits["max_subnormal"] = double(f.max_subnormal());
  limits["min_subnormal"] = double(f.min_subnormal());
  limits["exponent_bias"] = f.exponent_bias;
  j["limits"] = std::move(limits);
  auto entries = ordered_json::array();
  for (const auto& e : fp8::enumerate(f)) {
    ordered_json row;
    row["bits"] = hex_bits(e.bits);
    row["class"] = fp8::to_string(e.cls.cls);
    row["sign"] = e.cls.sign == fp8::Sign::Neg ? "-" : "+";
    row["value"] = value_json(double(e.value));
    entries.push_back(std::move(row));
  }
  j["entries"] = std::move(entries);
  print_json(j);
  return 0;
}

int cmd_convert(const std::string& value, const std::string& format,
                const std::string& round, const std::string& overflow,
                std::uint64_t seed) {
  const fp8::Fp8Format f = parse_format(format);
  const float x = parse_float(value);
  const fp8::Fp8Value v =
      fp8::convert_to_fp8(x, f, parse_round(round), parse_overflow(overflow), seed, 0);
  const float back = fp8::decode(v);
  const auto cls = fp8::classify(v);
  ordered_json j;
  j["format"] = fp8::to_string(f.name);
  j["input"] = value_json(double(x));
  j["bits"] = hex_bits(v.bits);
  j["decoded"] = value_json(double(back));
  j["class"] = fp8::to_string(cls.cls);
  j["sign"] = cls.sign == fp8::Sign::Neg ? "-" : "+";
  j["exact"] = !std::isnan(x) && std::bit_cast<std::uint32_t>(back) ==
                                     std::bit_cast<std::uint32_t>(x);
  print_json(j);
  return 0;
}

int cmd_quantize(const std::string& in_path, const std::string& out_path,
                 const std::string& format, const std::string& round,
                 const std::string& overflow, std::uint64_t seed,
                 const std::string& scale_spec, const std::string& granularity,
                 double percentile, bool emit_fp8) {
  fp8::QuantConfig cfg;
  cfg.format = parse_format(format);
  cfg.round = parse_round(round);
  cfg.overflow = parse_overflow(overflow);
  cfg.seed = seed;
  cfg.scale_source =
      parse_scale_source(scale_spec, parse_granularity(granularity), percentile);

  const fp8::Tensor t = load_binary32(in_path);
  ordered_json j;
  if (emit_fp8) {
    auto [qt, report] = fp8::quantize_tensor(t, cfg);
    fp8::write_tensor(out_path, qt);
    fp8::write_sidecar(out_path, cfg.format, report.scale_set_used);
    j = report_json(report);
    j["output"] = out_path;
    j["output_dtype"] = fp8::to_string(cfg.format.name);
    j["sidecar"] = out_path + ".meta.json";
  } else {
    auto [qt, report] = fp8::fake_quantize(t, cfg);
    fp8::write_tensor(out_path, qt);
    j = report_json(report);
    j["output"] = out_path;
    j["output_dtype"] = "binary32";
  }
  print_json(j);
  return 0;
}

int cmd_calibrate(const std::string& in_path, const std::string& format,
                  const std::string& method, const std::string& granularity,
                  double percentile, bool trace) {
  const fp8::Fp8Format f = parse_format(format);
  const fp8::Granularity g = parse_granularity(granularity);
  if (method == "percentile" || method == "best") check_percentile(percentile);
  const fp8::Tensor t = load_binary32(in_path);

  fp8::CalibrationResult res;
  if (method == "max") {
    res = fp8::calibrate(t, f, fp8::CalibrationMethod::max(), g);
  } else if (method == "percentile") {
    res = fp8::calibrate(t, f, fp8::CalibrationMethod::percentile_of(percentile), g);
  } else if (method == "mse") {
    res = fp8::calibrate(t, f, fp8::CalibrationMethod::mse(), g);
  } else if (method == "best") {
    const fp8::CalibrationMethod methods[] = {
        fp8::CalibrationMethod::max(), fp8::CalibrationMethod::percentile_of(percentile),
        fp8::CalibrationMethod::mse()};
    res = fp8::calibrate_best_of(t, f, methods, g);
  } else {
    throw UsageError("unknown method '" + method +
                     "' (expected max, percentile, mse, or best)");
  }

  ordered_json j;
  j["format"] = fp8::to_string(f.name);
  switch (res.method.kind) {
    case fp8::CalibrationMethod::Kind::Max: j["method"] = "max"; break;
    case fp8::CalibrationMethod::Kind::Percentile:
      j["method"] = "percentile";
      j["percentile"] = res.method.percentile;
      break;
    case fp8::CalibrationMethod::Kind::Mse: j["method"] = "mse"; break;
  }
  j["scale"] = scale_set_json(res.scale_set);
  j["clipped_fraction"] = res.clipped_fraction;
  if (trace && res.search_trace) {
    auto arr = ordered_json::array();
    for (const auto& p : *res.search_trace) {
      ordered_json row;
      row["scale"] = double(p.scale);
      row["objective"] = p.objective;
      arr.push_back(std::move(row));
    }
    j["trace"] = std::move(arr);
  }
  print_json(j);
  return 0;
}

int cmd_sweep_bias(const std::string& in_path, const std::string& format, int lo, int hi,
                   const std::string& metric, const std::string& csv_path) {
  const fp8::Fp8Format f = parse_format(format);
  if (lo > hi) throw UsageError("--lo must not exceed --hi");
  if (lo < -8 || hi > 31) throw UsageError("bias range must sit inside [-8, 31]");
  fp8::SweepMetric m;
  if (metric == "mse") {
    m = fp8::SweepMetric::Mse;
  } else if (metric == "maxabserr") {
    m = fp8::SweepMetric::MaxAbsErr;
  } else {
    throw UsageError("unknown metric '" + metric + "' (expected mse or maxabserr)");
  }
  const fp8::Tensor t = load_binary32(in_path);
  const auto points = fp8::bias_sweep(t, f, lo, hi, m);

  ordered_json j;
  j["format"] = fp8::to_string(f.name);
  j["metric"] = metric;
  auto arr = ordered_json::array();
  for (const auto& p : points) {
    ordered_json row;
    row["bias"] = p.bias;
    row["value"] = p.value;
    arr.push_back(std::move(row));
  }
  j["points"] = std::move(arr);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) {
      throw fp8::TensorIoError(fp8::TensorIoError::Kind::Io, "cannot open " + csv_path);
    }
    out << "bias,value\n";
    for (const auto& p : points) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%d,%.17g\n", p.bias, p.value);
      out << buf;
    }
    j["csv"] = csv_path;
  }
  print_json(j);
  return 0;
}

int cmd_stats(const std::string& in_path) {
  auto loaded = fp8::read_tensor(in_path);
  std::string dtype = "binary32";
  if (std::holds_alternative<fp8::Fp8Tensor>(loaded)) {
    dtype = fp8::to_string(std::get<fp8::Fp8Tensor>(loaded).format.name);
  }
  const fp8::Tensor t = std::holds_alternative<fp8::Tensor>(loaded)
                            ? std::get<fp8::Tensor>(std::move(loaded))
                            : fp8::decode_tensor(std::get<fp8::Fp8Tensor>(loaded));

  std::vector<float> mags;
  mags.reserve(t.data.size());
  std::int64_t nans = 0, infs = 0, zeros = 0;
  std::map<int, std::int64_t> log2_hist;
  float amax = 0.0f;
  for (const float x : t.data) {
    if (std::isnan(x)) {
      ++nans;
      continue;
    }
    if (std::isinf(x)) {
      ++infs;
      continue;
    }
    const float a = std::fabs(x);
    mags.push_back(a);
    amax = std::max(amax, a);
    if (x == 0.0f) {
      ++zeros;
    } else {
      ++log2_hist[std::ilogb(a)];
    }
  }
  std::sort(mags.begin(), mags.end());

  ordered_json j;
  j["dtype"] = dtype;
  auto shape = ordered_json::array();
  for (const auto d : t.shape) shape.push_back(d);
  j["shape"] = std::move(shape);
  j["count"] = std::int64_t(t.data.size());
  j["amax"] = value_json(double(amax));
  ordered_json pct;
  for (const double p : {50.0, 90.0, 99.0, 99.9, 99.99, 100.0}) {
    char key[16];
    std::snprintf(key, sizeof key, "p%g", p);
    pct[key] = mags.empty() ? ordered_json(nullptr)
                            : ordered_json(fp8::interpolated_percentile(mags, p));
  }
  j["abs_percentiles"] = std::move(pct);
  auto hist = ordered_json::array();
  for (const auto& [e, c] : log2_hist) {
    ordered_json row;
    row["exponent"] = e;
    row["count"] = c;
    hist.push_back(std::move(row));
  }
  j["log2_histogram"] = std::move(hist);
  ordered_json specials;
  specials["nan"] = nans;
  specials["inf"] = infs;
  j["specials"] = std::move(specials);
  j["zeros"] = zeros;
  print_json(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FP8 interchange format toolkit"};
  app.require_subcommand(1);

  std::string format = "e4m3";
  std::string round = "rne";
  std::string overflow = "saturate";
  std::string scale_spec = "auto:max";
  std::string granularity = "tensor";
  std::string method = "max";
  std::string metric = "mse";
  std::string value, in_path, out_path, csv_path;
  std::uint64_t seed = 0;
  double percentile = 99.99;
  int lo = 0, hi = 15;
  bool emit_fp8 = false, trace = false;

  auto* table = app.add_subcommand("table", "Dump all 256 patterns of a format");
  table->add_option("--format", format, "e4m3 or e5m2");

  auto* convert = app.add_subcommand("convert", "Convert one binary32 value");
  convert->add_option("value", value, "decimal or hex-float literal")->required();
  convert->add_option("--format", format, "e4m3 or e5m2");
  convert->add_option("--round", round, "rne, stochastic, or toward-zero");
  convert->add_option("--overflow", overflow, "saturate or nonsat");
  convert->add_option("--seed", seed, "stochastic rounding seed");

  auto* quantize = app.add_subcommand("quantize", "Quantize an FPT1 tensor");
  quantize->add_option("input", in_path, "input .fpt file")->required();
  quantize->add_option("-o,--out", out_path, "output .fpt file")->required();
  quantize->add_option("--format", format, "e4m3 or e5m2");
  quantize->add_option("--round", round, "rne, stochastic, or toward-zero");
  quantize->add_option("--overflow", overflow, "saturate or nonsat");
  quantize->add_option("--seed", seed, "stochastic rounding seed");
  quantize->add_option("--scale", scale_spec,
                       "auto:max, auto:percentile, auto:mse, auto:best, fixed:<f>, none");
  quantize->add_option("--granularity", granularity, "tensor or channel:<axis>");
  quantize->add_option("--percentile", percentile, "percentile for auto:percentile");
  quantize->add_flag("--emit-fp8", emit_fp8, "write raw fp8 payload plus sidecar");

  auto* calibrate = app.add_subcommand("calibrate", "Choose scales for a tensor");
  calibrate->add_option("input", in_path, "input .fpt file")->required();
  calibrate->add_option("--format", format, "e4m3 or e5m2");
  calibrate->add_option("--method", method, "max, percentile, mse, or best");
  calibrate->add_option("--granularity", granularity, "tensor or channel:<axis>");
  calibrate->add_option("--percentile", percentile, "percentile for --method percentile");
  calibrate->add_flag("--trace", trace, "include the MSE search trace");

  auto* sweep = app.add_subcommand("sweep-bias", "Exponent bias sweep");
  sweep->add_option("input", in_path, "input .fpt file")->required();
  sweep->add_option("--format", format, "e4m3 or e5m2");
  sweep->add_option("--lo", lo, "first bias");
  sweep->add_option("--hi", hi, "last bias");
  sweep->add_option("--metric", metric, "mse or maxabserr");
  sweep->add_option("--csv", csv_path, "also write bias,value rows to this file");

  auto* stats = app.add_subcommand("stats", "Magnitude statistics of a tensor");
  stats->add_option("input", in_path, "input .fpt file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (table->parsed()) return cmd_table(format);
    if (convert->parsed()) return cmd_convert(value, format, round, overflow, seed);
    if (quantize->parsed()) {
      return cmd_quantize(in_path, out_path, format, round, overflow, seed, scale_spec,
                          granularity, percentile, emit_fp8);
    }
    if (calibrate->parsed()) {
      return cmd_calibrate(in_path, format, method, granularity, percentile, trace);
    }
    if (sweep->parsed()) return cmd_sweep_bias(in_path, format, lo, hi, metric, csv_path);
    if (stats->parsed()) return cmd_stats(in_path);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
