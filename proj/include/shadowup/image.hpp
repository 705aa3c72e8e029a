#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shadowup/error.hpp"
#include "shadowup/parallel.hpp"

namespace shadowup {

enum class ColorSpace { RGB, HSV, GRAY };

inline const char* to_string(ColorSpace s) {
  switch (s) {
    case ColorSpace::RGB: return "RGB";
    case ColorSpace::HSV: return "HSV";
    case ColorSpace::GRAY: return "GRAY";
  }
  return "?";
}

inline std::size_t channels_of(ColorSpace s) { return s == ColorSpace::GRAY ? 1 : 3; }

// Number of histogram bins over the [0,1] intensity range.
inline constexpr int kBins = 256;

// Histogram bin of a normalized intensity: min(floor(v * 256), 255).
inline int bin_of(double v) {
  const double scaled = std::floor(v * kBins);
  if (scaled <= 0.0) return 0;
  return scaled >= kBins - 1 ? kBins - 1 : static_cast<int>(scaled);
}

// Channel-planar image with samples in [0,1]. The channel count is implied
// by the color space (GRAY has one plane, RGB and HSV three).
class PlanarImage {
public:
  PlanarImage() = default;

  PlanarImage(std::size_t width, std::size_t height, ColorSpace space, double fill = 0.0)
      : width_(width), height_(height), space_(space),
        planes_(channels_of(space), std::vector<double>(width * height, fill)) {}

  PlanarImage(std::size_t width, std::size_t height, ColorSpace space,
              std::vector<std::vector<double>> planes)
      : width_(width), height_(height), space_(space), planes_(std::move(planes)) {
    if (planes_.size() != channels_of(space_))
      throw InvalidInput(std::string("plane count does not match color space ") + to_string(space_));
    for (const auto& p : planes_)
      if (p.size() != width_ * height_) throw InvalidInput("plane length differs from width*height");
  }

  static PlanarImage gray(std::size_t width, std::size_t height, std::vector<double> data) {
    std::vector<std::vector<double>> planes;
    planes.push_back(std::move(data));
    return PlanarImage(width, height, ColorSpace::GRAY, std::move(planes));
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t channels() const noexcept { return planes_.size(); }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  ColorSpace space() const noexcept { return space_; }
  bool empty() const noexcept { return pixel_count() == 0; }

  std::span<double> plane(std::size_t c) { return planes_.at(c); }
  std::span<const double> plane(std::size_t c) const { return planes_.at(c); }

  double& at(std::size_t c, std::size_t x, std::size_t y) { return planes_[c][y * width_ + x]; }
  double at(std::size_t c, std::size_t x, std::size_t y) const { return planes_[c][y * width_ + x]; }

  // Single channel copied out as a GRAY image.
  PlanarImage channel(std::size_t c) const {
    return gray(width_, height_, planes_.at(c));
  }

  bool same_size(const PlanarImage& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  // Throws InvalidInput unless every sample is finite and inside [0,1].
  void validate() const {
    if (planes_.size() != channels_of(space_)) throw InvalidInput("plane count does not match color space");
    for (const auto& p : planes_) {
      if (p.size() != width_ * height_) throw InvalidInput("plane length differs from width*height");
      for (double v : p)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
          throw InvalidInput("sample outside [0,1] or not finite: " + std::to_string(v));
    }
  }

  friend bool operator==(const PlanarImage&, const PlanarImage&) = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  ColorSpace space_ = ColorSpace::GRAY;
  std::vector<std::vector<double>> planes_;
};

inline void require_space(const PlanarImage& img, ColorSpace expected, const char* op) {
  if (img.space() != expected)
    throw InvalidInput(std::string(op) + ": expected " + to_string(expected) + " image, got " +
                       to_string(img.space()));
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Hexcone HSV with hue scaled to [0,1).
inline PlanarImage rgb_to_hsv(const PlanarImage& img) {
  require_space(img, ColorSpace::RGB, "rgb_to_hsv");
  if (img.channels() != 3) throw InvalidInput("rgb_to_hsv: expected 3 channels");

  PlanarImage out(img.width(), img.height(), ColorSpace::HSV);
  const auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  auto h = out.plane(0), s = out.plane(1), v = out.plane(2);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double mx = std::max({r[i], g[i], b[i]});
    const double mn = std::min({r[i], g[i], b[i]});
    const double chroma = mx - mn;
    v[i] = mx;
    s[i] = mx > 0.0 ? chroma / mx : 0.0;
    if (chroma <= 0.0) {
      h[i] = 0.0;
      continue;
    }
    double sector;
    if (mx == r[i]) {
      sector = (g[i] - b[i]) / chroma;
      if (sector < 0.0) sector += 6.0;
    } else if (mx == g[i]) {
      sector = (b[i] - r[i]) / chroma + 2.0;
    } else {
      sector = (r[i] - g[i]) / chroma + 4.0;
    }
    h[i] = sector / 6.0;
    if (h[i] >= 1.0) h[i] -= 1.0;
  }
  return out;
}

inline PlanarImage hsv_to_rgb(const PlanarImage& img) {
  require_space(img, ColorSpace::HSV, "hsv_to_rgb");

  PlanarImage out(img.width(), img.height(), ColorSpace::RGB);
  const auto h = img.plane(0), s = img.plane(1), v = img.plane(2);
  auto r = out.plane(0), g = out.plane(1), b = out.plane(2);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double sector = h[i] * 6.0;
    const double fl = std::floor(sector);
    const double f = sector - fl;
    const double p = v[i] * (1.0 - s[i]);
    const double q = v[i] * (1.0 - s[i] * f);
    const double t = v[i] * (1.0 - s[i] * (1.0 - f));
    double rr, gg, bb;
    switch (static_cast<int>(fl) % 6) {
      case 0: rr = v[i]; gg = t; bb = p; break;
      case 1: rr = q; gg = v[i]; bb = p; break;
      case 2: rr = p; gg = v[i]; bb = t; break;
      case 3: rr = p; gg = q; bb = v[i]; break;
      case 4: rr = t; gg = p; bb = v[i]; break;
      default: rr = v[i]; gg = p; bb = q; break;
    }
    r[i] = clamp01(rr);
    g[i] = clamp01(gg);
    b[i] = clamp01(bb);
  }
  return out;
}

// Normalized 1-D Gaussian taps for offsets -radius..radius, radius = ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InvalidParameter("gaussian sigma must be > 0, got " + std::to_string(sigma));
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

// Half-sample symmetric reflection (abc|cba), periodic with period 2n so any
// offset is valid. This extension keeps the filter mass-preserving.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

namespace detail {

// Separable Gaussian on a raw plane; no clamping, no validation.
inline std::vector<double> blur_plane(std::span<const double> src, std::size_t w, std::size_t h,
                                      const std::vector<double>& k, unsigned threads) {
  const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
  std::vector<double> tmp(w * h), out(w * h);
  parallel_for(h, threads, [&](std::size_t y) {
    const double* row = src.data() + y * w;
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t j = -radius; j <= radius; ++j)
        acc += k[static_cast<std::size_t>(j + radius)] *
               row[reflect_index(static_cast<std::ptrdiff_t>(x) + j, w)];
      tmp[y * w + x] = acc;
    }
  });
  parallel_for(h, threads, [&](std::size_t y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t j = -radius; j <= radius; ++j)
        acc += k[static_cast<std::size_t>(j + radius)] *
               tmp[reflect_index(static_cast<std::ptrdiff_t>(y) + j, h) * w + x];
      out[y * w + x] = acc;
    }
  });
  return out;
}

}  // namespace detail

inline PlanarImage gaussian_filter(const PlanarImage& img, double sigma, unsigned threads = 0) {
  require_space(img, ColorSpace::GRAY, "gaussian_filter");
  const auto k = gaussian_kernel(sigma);
  auto out = detail::blur_plane(img.plane(0), img.width(), img.height(), k, threads);
  for (double& v : out) v = clamp01(v);
  return PlanarImage::gray(img.width(), img.height(), std::move(out));
}

}  // namespace shadowup
