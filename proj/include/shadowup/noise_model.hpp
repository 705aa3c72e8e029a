#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "shadowup/error.hpp"
#include "shadowup/image.hpp"

namespace shadowup {

// Noise standard deviation as a function of normalized intensity,
// n(I) = sqrt(a I + b).
struct NoiseLevelFunction {
  double a = 0.01;
  double b = 0.0004;

  double operator()(double intensity) const { return std::sqrt(a * intensity + b); }

  void validate() const {
    if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
      throw InvalidParameter("noise level coefficients must be finite and >= 0");
  }
};

struct NoiseAwareHistogram {
  std::array<double, kBins> p{};
  std::size_t s_count = 0;         // pixels below threshold whose contrast beats the noise level
  int threshold_bin = kBins - 1;
  std::size_t excluded_count = 0;  // pixels below threshold rejected by the contrast gate
  bool fallback = false;           // s_count was 0, p is the plain sub-threshold histogram
};

// Gaussian-weighted local standard deviation:
// sqrt(max(0, G*(l^2) - (G*l)^2)).
inline PlanarImage local_contrast(const PlanarImage& img, double sigma, unsigned threads = 0) {
  require_space(img, ColorSpace::GRAY, "local_contrast");
  const auto k = gaussian_kernel(sigma);
  const auto src = img.plane(0);
  std::vector<double> sq(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) sq[i] = src[i] * src[i];

  const auto mean = detail::blur_plane(src, img.width(), img.height(), k, threads);
  const auto mean_sq = detail::blur_plane(sq, img.width(), img.height(), k, threads);
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i)
    out[i] = clamp01(std::sqrt(std::max(0.0, mean_sq[i] - mean[i] * mean[i])));
  return PlanarImage::gray(img.width(), img.height(), std::move(out));
}

// Histogram over pixels whose local contrast exceeds the modeled noise level
// at their illumination and whose illumination bin is below threshold_bin:
//   S   = {(x,y) : c > n(l), bin(l) < threshold_bin}
//   B_I = {(x,y) in S : bin(l) = I}
//   p(I) = |B_I| / |S|
// If S is empty the plain histogram of sub-threshold pixels is used instead.
inline NoiseAwareHistogram noise_aware_histogram(const PlanarImage& illum, const PlanarImage& contrast,
                                                 const NoiseLevelFunction& nlf, int threshold_bin) {
  require_space(illum, ColorSpace::GRAY, "noise_aware_histogram");
  require_space(contrast, ColorSpace::GRAY, "noise_aware_histogram");
  if (!illum.same_size(contrast)) throw InvalidInput("noise_aware_histogram: illumination and contrast differ in size");
  if (threshold_bin <= 0 || threshold_bin > kBins - 1)
    throw InvalidParameter("threshold_bin must be in (0, 255], got " + std::to_string(threshold_bin));
  nlf.validate();

  NoiseAwareHistogram hist;
  hist.threshold_bin = threshold_bin;
  std::array<std::size_t, kBins> gated{}, plain{};
  std::size_t below = 0;
  const auto l = illum.plane(0);
  const auto c = contrast.plane(0);
  for (std::size_t i = 0; i < l.size(); ++i) {
    const int b = bin_of(l[i]);
    if (b >= threshold_bin) continue;
    ++plain[static_cast<std::size_t>(b)];
    ++below;
    if (c[i] > nlf(l[i])) {
      ++gated[static_cast<std::size_t>(b)];
      ++hist.s_count;
    }
  }
  hist.excluded_count = below - hist.s_count;

  const auto& counts = hist.s_count > 0 ? gated : plain;
  const std::size_t total = hist.s_count > 0 ? hist.s_count : below;
  hist.fallback = hist.s_count == 0;
  if (total > 0)
    for (std::size_t i = 0; i < kBins; ++i) hist.p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return hist;
}

// Plain normalized histogram of bins below threshold_bin, no contrast gate.
inline NoiseAwareHistogram plain_histogram(const PlanarImage& img, int threshold_bin) {
  require_space(img, ColorSpace::GRAY, "plain_histogram");
  if (threshold_bin <= 0 || threshold_bin > kBins - 1)
    throw InvalidParameter("threshold_bin must be in (0, 255], got " + std::to_string(threshold_bin));
  NoiseAwareHistogram hist;
  hist.threshold_bin = threshold_bin;
  std::array<std::size_t, kBins> counts{};
  for (double v : img.plane(0)) {
    const int b = bin_of(v);
    if (b < threshold_bin) {
      ++counts[static_cast<std::size_t>(b)];
      ++hist.s_count;
    }
  }
  if (hist.s_count > 0)
    for (std::size_t i = 0; i < kBins; ++i)
      hist.p[i] = static_cast<double>(counts[i]) / static_cast<double>(hist.s_count);
  return hist;
}

}  // namespace shadowup
