#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <utility>

#include <json.hpp>

#include "shadowup/curve.hpp"
#include "shadowup/decomposition.hpp"
#include "shadowup/error.hpp"
#include "shadowup/image.hpp"
#include "shadowup/noise_model.hpp"

namespace shadowup {

enum class Method { Proposed, AgcwdPlain };

// Which layer the local-contrast gate is measured on. Histogram bins always
// come from the illumination.
enum class ContrastSource { Value, Illumination };

struct EnhanceConfig {
  double percentile = 75.0;
  double alpha = 0.5;
  double sigma = 3.0;
  SolverConfig solver{};
  NoiseLevelFunction noise{};
  Method method = Method::Proposed;
  ContrastSource contrast_source = ContrastSource::Value;
  unsigned threads = 0;

  void validate() const {
    if (!(percentile > 0.0 && percentile < 100.0)) throw InvalidParameter("percentile must be in (0,100)");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("alpha must be in [0,1]");
    if (!(sigma > 0.0)) throw InvalidParameter("sigma must be > 0");
    solver.validate();
    noise.validate();
  }
};

struct StageTimings {
  double decompose = 0.0;
  double histogram = 0.0;
  double curve = 0.0;
  double apply = 0.0;
  double total = 0.0;
};

struct EnhanceReport {
  ThresholdReport threshold{};
  std::size_t s_count = 0;
  double residual = 0.0;
  std::size_t iterations = 0;
  StageTimings timings_ms{};
};

struct EnhanceResult {
  PlanarImage image;          // RGB output
  EnhanceReport report;
  PlanarImage input_hsv;
  PlanarImage output_hsv;     // input_hsv with V replaced
  PlanarImage illumination;
  PlanarImage reflectance;
  PlanarImage enhanced_illumination;
  NoiseAwareHistogram histogram;
  MappingCurve curve;
};

// Decomposition failed to converge; carries the report gathered so far.
class EnhanceAborted : public ConvergenceError {
public:
  EnhanceAborted(const ConvergenceError& cause, EnhanceReport report)
      : ConvergenceError(cause.residual(), cause.iterations()), report_(std::move(report)) {}
  const EnhanceReport& report() const noexcept { return report_; }

private:
  EnhanceReport report_;
};

inline nlohmann::json report_to_json(const EnhanceReport& r) {
  return {
      {"threshold_bin", r.threshold.threshold_bin},
      {"percentile_value", r.threshold.percentile_value},
      {"s_count", r.s_count},
      {"residual", r.residual},
      {"timings_ms",
       {{"decompose", r.timings_ms.decompose},
        {"histogram", r.timings_ms.histogram},
        {"curve", r.timings_ms.curve},
        {"apply", r.timings_ms.apply},
        {"total", r.timings_ms.total}}},
  };
}

namespace detail {

class StageClock {
public:
  using clock = std::chrono::steady_clock;
  double lap() {
    const auto now = clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }
  double since_start() const { return std::chrono::duration<double, std::milli>(clock::now() - start_).count(); }

private:
  clock::time_point start_ = clock::now();
  clock::time_point last_ = start_;
};

inline PlanarImage with_value(const PlanarImage& hsv, const PlanarImage& value) {
  PlanarImage out = hsv;
  auto dst = out.plane(2);
  const auto src = value.plane(0);
  std::copy(src.begin(), src.end(), dst.begin());
  return out;
}

inline EnhanceResult enhance_plain_agcwd(const PlanarImage& img, const EnhanceConfig& cfg) {
  StageClock clock;
  EnhanceResult res;
  res.input_hsv = rgb_to_hsv(img);
  const PlanarImage value = res.input_hsv.channel(2);
  res.illumination = value;
  res.reflectance = PlanarImage(img.width(), img.height(), ColorSpace::GRAY, 1.0);
  res.report.timings_ms.decompose = clock.lap();

  res.report.threshold.threshold_bin = kBins - 1;
  res.histogram = plain_histogram(value, kBins - 1);
  res.report.s_count = res.histogram.s_count;
  res.report.timings_ms.histogram = clock.lap();

  res.curve = design_agcwd(res.histogram, cfg.alpha, kBins - 1);
  res.report.timings_ms.curve = clock.lap();

  res.enhanced_illumination = apply_curve(value, res.curve, cfg.threads);
  res.output_hsv = with_value(res.input_hsv, res.enhanced_illumination);
  res.image = hsv_to_rgb(res.output_hsv);
  res.report.timings_ms.apply = clock.lap();
  res.report.timings_ms.total = clock.since_start();
  return res;
}

}  // namespace detail

// Full enhancement of an RGB image:
//   1. HSV conversion
//   2. value -> illumination * reflectance
//   3. adaptive threshold from the illumination
//   4. noise-aware histogram (contrast gate against the noise model)
//   5. AGCWD curve below the threshold, identity above
//   6. curve applied to the illumination
//   7. V' = I' * R, clamped to [0,1]
//   8. back to RGB with hue and saturation untouched
// With cfg.method == AgcwdPlain the curve is instead designed from the
// full-range plain histogram of V and applied to V directly.
inline EnhanceResult enhance(const PlanarImage& img, const EnhanceConfig& cfg = {}) {
  require_space(img, ColorSpace::RGB, "enhance");
  img.validate();
  cfg.validate();
  if (img.empty()) throw InvalidInput("enhance: empty image");
  if (cfg.method == Method::AgcwdPlain) return detail::enhance_plain_agcwd(img, cfg);

  detail::StageClock clock;
  EnhanceResult res;
  res.input_hsv = rgb_to_hsv(img);
  const PlanarImage value = res.input_hsv.channel(2);

  SolverConfig solver = cfg.solver;
  solver.threads = cfg.threads;
  try {
    auto d = decompose(value, solver);
    res.illumination = std::move(d.illumination);
    res.reflectance = std::move(d.reflectance);
    res.report.residual = d.residual;
    res.report.iterations = d.iterations;
  } catch (const ConvergenceError& e) {
    res.report.residual = e.residual();
    res.report.iterations = e.iterations();
    res.report.timings_ms.decompose = clock.lap();
    res.report.timings_ms.total = clock.since_start();
    throw EnhanceAborted(e, res.report);
  }
  res.report.timings_ms.decompose = clock.lap();

  res.report.threshold = compute_threshold(res.illumination, cfg.percentile);
  const int threshold_bin = res.report.threshold.threshold_bin;
  const PlanarImage& gate_source = cfg.contrast_source == ContrastSource::Value ? value : res.illumination;
  const auto contrast = local_contrast(gate_source, cfg.sigma, cfg.threads);
  res.histogram = noise_aware_histogram(res.illumination, contrast, cfg.noise, threshold_bin);
  res.report.s_count = res.histogram.s_count;
  res.report.timings_ms.histogram = clock.lap();

  res.curve = design_agcwd(res.histogram, cfg.alpha, threshold_bin);
  res.report.timings_ms.curve = clock.lap();

  res.enhanced_illumination = apply_curve(res.illumination, res.curve, cfg.threads);
  const auto lit = res.enhanced_illumination.plane(0);
  const auto refl = res.reflectance.plane(0);
  std::vector<double> recombined(lit.size());
  for (std::size_t i = 0; i < lit.size(); ++i) recombined[i] = clamp01(lit[i] * refl[i]);
  res.output_hsv = detail::with_value(res.input_hsv,
                                      PlanarImage::gray(img.width(), img.height(), std::move(recombined)));
  res.image = hsv_to_rgb(res.output_hsv);
  res.report.timings_ms.apply = clock.lap();
  res.report.timings_ms.total = clock.since_start();
  return res;
}

// Comparison baseline: plain AGCWD over the full range of V, no
// decomposition, no noise gate, threshold fixed at 255.
inline PlanarImage enhance_baseline_agcwd(const PlanarImage& img, const EnhanceConfig& cfg = {}) {
  EnhanceConfig plain = cfg;
  plain.method = Method::AgcwdPlain;
  return enhance(img, plain).image;
}

}  // namespace shadowup
