#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "shadowup/curve.hpp"
#include "test_support.hpp"

using namespace shadowup;

namespace {

// 100 pixels: 79 at `low`, ten at each of `a` and `b`, one at `peak`
// (the maximum, excluded from H). The 75th percentile is `low`, so H holds
// the twenty pixels at `a` and `b`.
PlanarImage tail_image(int low, int a, int b, int peak) {
  std::vector<double> v;
  v.insert(v.end(), 79, low / 255.0);
  v.insert(v.end(), 10, a / 255.0);
  v.insert(v.end(), 10, b / 255.0);
  v.push_back(peak / 255.0);
  return PlanarImage::gray(10, 10, std::move(v));
}

NoiseAwareHistogram uniform_hist(int tb) {
  NoiseAwareHistogram h;
  h.threshold_bin = tb;
  for (int i = 0; i < tb; ++i) h.p[static_cast<std::size_t>(i)] = 1.0 / tb;
  h.s_count = static_cast<std::size_t>(tb);
  return h;
}

NoiseAwareHistogram random_hist(std::mt19937_64& rng, int tb) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NoiseAwareHistogram h;
  h.threshold_bin = tb;
  double sum = 0.0;
  for (int i = 0; i < tb; ++i) {
    // Sparse, spiky mass like real histograms.
    const double r = u(rng);
    h.p[static_cast<std::size_t>(i)] = r < 0.5 ? 0.0 : std::pow(r, 8.0);
    sum += h.p[static_cast<std::size_t>(i)];
  }
  if (sum > 0)
    for (int i = 0; i < tb; ++i) h.p[static_cast<std::size_t>(i)] /= sum;
  return h;
}

}  // namespace

TEST(ComputeThreshold, BrightTailGivesSmallThreshold) {
  const auto r = compute_threshold(tail_image(40, 190, 210, 250), 75.0);
  EXPECT_DOUBLE_EQ(r.percentile_value, 40.0);
  EXPECT_EQ(r.h_count, 20u);
  EXPECT_EQ(r.threshold_bin, 55);  // 255 - (190 + 210) / 2
}

TEST(ComputeThreshold, DarkTailGivesLargeThreshold) {
  const auto r = compute_threshold(tail_image(10, 54, 74, 100), 75.0);
  EXPECT_EQ(r.h_count, 20u);
  EXPECT_EQ(r.threshold_bin, 191);  // 255 - (54 + 74) / 2
}

TEST(ComputeThreshold, EmptyTailFallsBackTo255) {
  const PlanarImage white(6, 6, ColorSpace::GRAY, 1.0);
  const auto r = compute_threshold(white, 75.0);
  EXPECT_EQ(r.h_count, 0u);
  EXPECT_EQ(r.threshold_bin, 255);
}

TEST(ComputeThreshold, PixelsAtMaximumAreExcluded) {
  // 75th percentile of {0.., 200, 200} with the 200s at the max: H is empty.
  std::vector<double> v(8, 20 / 255.0);
  v[6] = v[7] = 200 / 255.0;
  const auto r = compute_threshold(PlanarImage::gray(4, 2, v), 75.0);
  EXPECT_EQ(r.h_count, 0u);
  EXPECT_EQ(r.threshold_bin, 255);
}

TEST(ComputeThreshold, RejectsPercentileOutOfRange) {
  const PlanarImage img(2, 2, ColorSpace::GRAY, 0.5);
  EXPECT_THROW(compute_threshold(img, 0.0), InvalidParameter);
  EXPECT_THROW(compute_threshold(img, 100.0), InvalidParameter);
  EXPECT_THROW(compute_threshold(img, -5.0), InvalidParameter);
}

TEST(ComputeThreshold, AntitoneInTailMean) {
  std::mt19937_64 rng(1);
  std::vector<std::pair<double, int>> points;
  for (int trial = 0; trial < 50; ++trial) {
    const auto img = oracle::random_gray(12, 12, rng, 0.0, 0.2 + 0.8 * (trial / 49.0));
    const auto r = compute_threshold(img, 75.0);
    ASSERT_GT(r.h_count, 0u);
    double mean = 0.0;
    double mx = 0.0;
    for (double v : img.plane(0)) mx = std::max(mx, v * 255.0);
    for (double v : img.plane(0))
      if (v * 255.0 > r.percentile_value && v * 255.0 < mx) mean += v * 255.0;
    mean /= static_cast<double>(r.h_count);
    points.emplace_back(mean, r.threshold_bin);
  }
  std::sort(points.begin(), points.end());
  for (std::size_t i = 1; i < points.size(); ++i) EXPECT_LE(points[i].second, points[i - 1].second);
}

TEST(DesignAgcwd, UniformHistogramMatchesClosedForm) {
  for (int tb : {55, 128, 191, 255}) {
    const auto curve = design_agcwd(uniform_hist(tb), 1.0, tb);
    for (int i = 0; i < tb; ++i)
      EXPECT_NEAR(curve.lut[static_cast<std::size_t>(i)], oracle::uniform_agcwd(tb, i), 1e-12) << tb << " " << i;
  }
}

TEST(DesignAgcwd, IdentityAtAndAboveThreshold) {
  std::mt19937_64 rng(2);
  for (int tb : {1, 30, 128, 254, 255}) {
    const auto curve = design_agcwd(random_hist(rng, tb), 0.5, tb);
    for (int i = tb; i < kBins; ++i) EXPECT_EQ(curve.lut[static_cast<std::size_t>(i)], i / 255.0);
    EXPECT_LE(curve.lut[static_cast<std::size_t>(tb - 1)], tb / 255.0);
  }
}

TEST(DesignAgcwd, NeverDarkensBelowIdentity) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int tb = 1 + trial * 254 / 99;
    const auto curve = design_agcwd(random_hist(rng, tb), trial / 99.0, tb);
    for (int i = 0; i < tb; ++i) ASSERT_GE(curve.lut[static_cast<std::size_t>(i)], i / 255.0 - 1e-15);
  }
}

TEST(DesignAgcwd, MonotoneForRandomHistogramsAndAlpha) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int tb = 1 + static_cast<int>(u(rng) * 254.0);
    const auto curve = design_agcwd(random_hist(rng, tb), u(rng), tb);
    ASSERT_TRUE(curve.is_monotone()) << "trial " << trial;
    for (double v : curve.lut) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(DesignAgcwd, DegenerateHistogramUsesLinearCdf) {
  NoiseAwareHistogram empty;  // all zeros: pdf_max == pdf_min
  const auto curve = design_agcwd(empty, 0.5, 100);
  for (int i = 0; i < 100; ++i)
    EXPECT_NEAR(curve.lut[static_cast<std::size_t>(i)], oracle::uniform_agcwd(100, i), 1e-12);
}

TEST(DesignAgcwd, SingleSpikeIsIdentityUpToTheSpike) {
  NoiseAwareHistogram h;
  h.p[40] = 1.0;
  const auto curve = design_agcwd(h, 0.5, 255);
  for (int i = 0; i <= 40; ++i) EXPECT_NEAR(curve.lut[static_cast<std::size_t>(i)], i / 255.0, 1e-15);
}

TEST(DesignAgcwd, ErrorPaths) {
  EXPECT_THROW(design_agcwd({}, -0.1, 100), InvalidParameter);
  EXPECT_THROW(design_agcwd({}, 1.1, 100), InvalidParameter);
  EXPECT_THROW(design_agcwd({}, 0.5, 0), InvalidParameter);
  EXPECT_THROW(design_agcwd({}, 0.5, 256), InvalidParameter);
}

TEST(ApplyCurve, IdentityLutIsExact) {
  std::mt19937_64 rng(5);
  const auto img = oracle::random_gray(17, 11, rng);
  EXPECT_EQ(apply_curve(img, MappingCurve::identity()), img);
}

TEST(ApplyCurve, AboveThresholdUnchanged) {
  const auto curve = design_agcwd(uniform_hist(180), 0.5, 180);
  const auto out = apply_curve(PlanarImage::gray(1, 1, {0.9}), curve);
  EXPECT_EQ(out.plane(0)[0], 0.9);
}

TEST(ApplyCurve, BinSixtyFourMatchesClosedForm) {
  const auto curve = design_agcwd(uniform_hist(128), 1.0, 128);
  const auto out = apply_curve(PlanarImage::gray(1, 1, {64 / 255.0}), curve);
  EXPECT_NEAR(out.plane(0)[0], oracle::uniform_agcwd(128, 64), 1e-12);
}

TEST(ApplyCurve, InterpolatesBetweenEntries) {
  const auto curve = design_agcwd(uniform_hist(128), 1.0, 128);
  const double v = 10.25 / 255.0;
  const double expected = 0.75 * oracle::uniform_agcwd(128, 10) + 0.25 * oracle::uniform_agcwd(128, 11);
  EXPECT_NEAR(map_sample(curve, v), expected, 1e-12);
}

TEST(ApplyCurve, HistogramBinAtThresholdMovesAtMostOneCode) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int tb = 1 + static_cast<int>(u(rng) * 254.0);
    const auto curve = design_agcwd(random_hist(rng, tb), u(rng), tb);
    for (int k = 0; k < 50; ++k) {
      const double v = u(rng);
      if (bin_of(v) >= tb) {
        ASSERT_LE(std::abs(map_sample(curve, v) - v), 1.0 / 255.0 + 1e-12);
      }
    }
  }
}

TEST(ExportCurve, IdentityRowsAndRoundTrip) {
  const auto id_csv = curve_to_csv(MappingCurve::identity());
  std::istringstream in(id_csv);
  std::string line;
  int i = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line, std::to_string(i) + "," + std::to_string(i));
    ++i;
  }
  EXPECT_EQ(i, 256);

  std::mt19937_64 rng(7);
  const auto curve = design_agcwd(random_hist(rng, 150), 0.5, 150);
  const auto path = (std::filesystem::temp_directory_path() / ("curve_" + std::to_string(::getpid()) + ".csv")).string();
  export_curve(curve, path);
  std::ifstream f(path);
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::filesystem::remove(path);
  const auto lut = parse_curve_csv(text);
  for (std::size_t k = 0; k < kBins; ++k) EXPECT_NEAR(lut[k], curve.lut[k], 1e-6);
}

TEST(ExportCurve, UniformRowSixtyFour) {
  const auto lut = parse_curve_csv(curve_to_csv(design_agcwd(uniform_hist(128), 1.0, 128)));
  EXPECT_NEAR(lut[64], oracle::uniform_agcwd(128, 64), 1e-9);
}

TEST(ExportCurve, UnwritablePath) {
  EXPECT_THROW(export_curve(MappingCurve::identity(), "/nonexistent-dir/x.csv"), IoError);
}

TEST(NoiseAwareness, GatedNoiseBandGetsNoSteeperSlope) {
  // Illumination: a dark band of pure noise (bins 20..40, contrast 0, gated
  // out), a textured region (bins 45..120, high contrast), and a bright region
  // above the threshold.
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> noise_bin(20, 40), tex_bin(45, 120), bright_bin(200, 250);
  const std::size_t n = 48;
  std::vector<double> l(n * n), c(n * n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t i = y * n + x;
      if (y < n / 2) {
        l[i] = (noise_bin(rng) + 0.5) / 256.0;
        c[i] = 0.0;
      } else if (y < 3 * n / 4) {
        l[i] = (tex_bin(rng) + 0.5) / 256.0;
        c[i] = 0.3;
      } else {
        l[i] = (bright_bin(rng) + 0.5) / 256.0;
        c[i] = 0.3;
      }
    }
  const auto illum = PlanarImage::gray(n, n, l);
  const auto contrast = PlanarImage::gray(n, n, c);
  const int tb = 140;
  for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto aware = design_agcwd(noise_aware_histogram(illum, contrast, {0.01, 0.0004}, tb), alpha, tb);
    const auto plain = design_agcwd(plain_histogram(illum, tb), alpha, tb);
    const double aware_slope = aware.lut[40] - aware.lut[20];
    const double plain_slope = plain.lut[40] - plain.lut[20];
    EXPECT_LE(aware_slope, plain_slope) << "alpha " << alpha;
  }
}
