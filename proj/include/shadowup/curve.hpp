#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "shadowup/error.hpp"
#include "shadowup/image.hpp"
#include "shadowup/image_io.hpp"
#include "shadowup/noise_model.hpp"

namespace shadowup {

struct ThresholdReport {
  double percentile_value = 0.0;  // th-percentile of the illumination, 0-255 scale
  std::size_t h_count = 0;        // pixels strictly between the percentile and the maximum
  int threshold_bin = kBins - 1;
};

// Adaptive upper limit of the nonlinear curve segment.
//
// With P the requested percentile of the illumination (8-bit scale, linear
// interpolation between order statistics) and H the pixels with
// P < 255 l < 255 l_max, the threshold is 255 - mean_H(255 l), rounded.
// Brighter tails give smaller thresholds. An empty H yields 255; the result
// is kept inside [1, 255].
inline ThresholdReport compute_threshold(const PlanarImage& illum, double percentile) {
  require_space(illum, ColorSpace::GRAY, "compute_threshold");
  if (!(percentile > 0.0 && percentile < 100.0))
    throw InvalidParameter("percentile must be in (0,100), got " + std::to_string(percentile));
  if (illum.empty()) throw InvalidInput("compute_threshold: empty image");

  const auto src = illum.plane(0);
  std::vector<double> codes(src.size());
  std::transform(src.begin(), src.end(), codes.begin(), [](double v) { return v * 255.0; });
  std::vector<double> sorted = codes;
  std::sort(sorted.begin(), sorted.end());

  const double rank = percentile / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);

  ThresholdReport report;
  report.percentile_value = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  const double max_code = sorted.back();

  double sum = 0.0;
  for (double c : codes)
    if (c > report.percentile_value && c < max_code) {
      sum += c;
      ++report.h_count;
    }
  if (report.h_count == 0) {
    report.threshold_bin = kBins - 1;
  } else {
    const double threshold = 255.0 - sum / static_cast<double>(report.h_count);
    report.threshold_bin = std::clamp(static_cast<int>(std::lround(threshold)), 1, kBins - 1);
  }
  return report;
}

// 256-entry lookup table on the normalized scale. Entries at and above
// threshold_bin are the identity i/255.
struct MappingCurve {
  std::array<double, kBins> lut{};
  int threshold_bin = 0;
  double alpha = 0.0;

  static MappingCurve identity() {
    MappingCurve c;
    for (int i = 0; i < kBins; ++i) c.lut[static_cast<std::size_t>(i)] = i / 255.0;
    return c;
  }

  bool is_monotone() const {
    return std::is_sorted(lut.begin(), lut.end());
  }
};

// AGCWD curve restricted to bins below threshold_bin and rescaled so it meets
// the identity branch at the threshold:
//   pdf_w(I) = pdf_max ((pdf(I) - pdf_min) / (pdf_max - pdf_min))^alpha
//   cdf_w(I) = sum_{k<I} pdf_w(k) / sum_{k<t} pdf_w(k)
//   T(I)     = (t/255) (I/t)^(1 - cdf_w(I))
// When pdf_max == pdf_min the cdf falls back to the linear ramp I/t.
inline MappingCurve design_agcwd(const NoiseAwareHistogram& hist, double alpha, int threshold_bin) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("alpha must be in [0,1], got " + std::to_string(alpha));
  if (threshold_bin <= 0 || threshold_bin > kBins - 1)
    throw InvalidParameter("threshold_bin must be in (0, 255], got " + std::to_string(threshold_bin));

  const auto t = static_cast<std::size_t>(threshold_bin);
  const auto first = hist.p.begin();
  const auto [min_it, max_it] = std::minmax_element(first, first + static_cast<std::ptrdiff_t>(t));
  const double pdf_min = *min_it, pdf_max = *max_it;

  std::vector<double> cdf(t, 0.0);
  if (pdf_max > pdf_min) {
    std::vector<double> weighted(t);
    for (std::size_t i = 0; i < t; ++i)
      weighted[i] = pdf_max * std::pow((hist.p[i] - pdf_min) / (pdf_max - pdf_min), alpha);
    double total = 0.0;
    for (double w : weighted) total += w;
    double running = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      cdf[i] = running / total;
      running += weighted[i];
    }
  } else {
    for (std::size_t i = 0; i < t; ++i) cdf[i] = static_cast<double>(i) / static_cast<double>(t);
  }

  MappingCurve curve;
  curve.threshold_bin = threshold_bin;
  curve.alpha = alpha;
  const double top = static_cast<double>(t) / 255.0;
  for (std::size_t i = 0; i < t; ++i)
    curve.lut[i] = top * std::pow(static_cast<double>(i) / static_cast<double>(t), 1.0 - cdf[i]);
  for (std::size_t i = t; i < kBins; ++i) curve.lut[i] = static_cast<double>(i) / 255.0;
  for (std::size_t i = 1; i < kBins; ++i) curve.lut[i] = std::max(curve.lut[i], curve.lut[i - 1]);
  return curve;
}

// Maps one sample: identity when floor(255 v) >= threshold_bin, otherwise
// linear interpolation between neighbouring lut entries.
inline double map_sample(const MappingCurve& curve, double v) {
  const double x = clamp01(v) * 255.0;
  const auto i = static_cast<int>(std::floor(x));
  if (i >= curve.threshold_bin || i >= kBins - 1) return v;
  const double f = x - i;
  const auto u = static_cast<std::size_t>(i);
  return curve.lut[u] * (1.0 - f) + curve.lut[u + 1] * f;
}

inline PlanarImage apply_curve(const PlanarImage& img, const MappingCurve& curve, unsigned threads = 0) {
  require_space(img, ColorSpace::GRAY, "apply_curve");
  PlanarImage out = img;
  auto dst = out.plane(0);
  const auto src = img.plane(0);
  const std::size_t w = img.width();
  parallel_for(img.height(), threads, [&](std::size_t y) {
    for (std::size_t x = 0; x < w; ++x) dst[y * w + x] = clamp01(map_sample(curve, src[y * w + x]));
  });
  return out;
}

// 256 lines "input,output" on the 0-255 scale.
inline std::string curve_to_csv(const MappingCurve& curve) {
  std::string out;
  char line[64];
  for (int i = 0; i < kBins; ++i) {
    std::snprintf(line, sizeof line, "%d,%.10g\n", i, curve.lut[static_cast<std::size_t>(i)] * 255.0);
    out += line;
  }
  return out;
}

inline void export_curve(const MappingCurve& curve, const std::string& path) {
  detail::write_file(path, curve_to_csv(curve));
}

// Reads a curve CSV back as normalized lut values.
inline std::array<double, kBins> parse_curve_csv(const std::string& text) {
  std::array<double, kBins> lut{};
  std::istringstream in(text);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidInput("curve CSV row without comma: " + line);
    const int idx = std::stoi(line.substr(0, comma));
    if (idx < 0 || idx >= kBins) throw InvalidInput("curve CSV index out of range: " + line);
    lut[static_cast<std::size_t>(idx)] = std::stod(line.substr(comma + 1)) / 255.0;
    ++rows;
  }
  if (rows != kBins) throw InvalidInput("curve CSV must have 256 rows, got " + std::to_string(rows));
  return lut;
}

}  // namespace shadowup
