#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shadowup/error.hpp"
#include "shadowup/image.hpp"
#include "shadowup/parallel.hpp"

namespace shadowup {

// Offset inside the log used for edge weights, keeps log finite at black.
inline constexpr double kLogOffset = 1e-3;
// Lower bound on the illumination so reflectance = v / illumination is defined.
inline constexpr double kIlluminationFloor = 1e-4;

struct SolverConfig {
  double lambda = 0.5;     // smoothness weight
  double epsilon = 1e-3;   // floor added to gradient magnitude in the edge weight
  std::size_t max_iters = 500;
  double tolerance = 1e-5;  // relative residual ||Ax - b|| / ||b||
  unsigned threads = 0;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidParameter("lambda must be >= 0");
    if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be > 0");
    if (max_iters == 0) throw InvalidParameter("max_iters must be > 0");
    if (!(tolerance > 0.0 && tolerance < 1.0)) throw InvalidParameter("tolerance must be in (0,1)");
  }
};

// Matrix-free A = Id + lambda * D^T W D on a width x height grid, where D
// takes forward differences to the right and downward neighbours (no edges
// leave the image) and W holds one weight per edge.
class WeightedLaplacianSystem {
public:
  WeightedLaplacianSystem(std::size_t width, std::size_t height, double lambda,
                          std::vector<double> horizontal, std::vector<double> vertical,
                          std::vector<double> rhs)
      : width_(width), height_(height), lambda_(lambda), horizontal_(std::move(horizontal)),
        vertical_(std::move(vertical)), rhs_(std::move(rhs)) {
    if (horizontal_.size() != (width_ ? (width_ - 1) * height_ : 0) ||
        vertical_.size() != (height_ ? (height_ - 1) * width_ : 0) || rhs_.size() != width_ * height_)
      throw InvalidInput("edge weight or rhs size does not match the grid");
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return width_ * height_; }
  double lambda() const noexcept { return lambda_; }

  // Weight of the edge (x,y)-(x+1,y).
  double horizontal_weight(std::size_t x, std::size_t y) const { return horizontal_[y * (width_ - 1) + x]; }
  // Weight of the edge (x,y)-(x,y+1).
  double vertical_weight(std::size_t x, std::size_t y) const { return vertical_[y * width_ + x]; }

  std::span<const double> rhs() const noexcept { return rhs_; }

  void apply(std::span<const double> in, std::span<double> out, unsigned threads = 1) const {
    const std::size_t w = width_, h = height_;
    parallel_for(h, threads, [&](std::size_t y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t p = y * w + x;
        const double xp = in[p];
        double acc = 0.0;
        if (x > 0) acc += horizontal_[y * (w - 1) + x - 1] * (xp - in[p - 1]);
        if (x + 1 < w) acc += horizontal_[y * (w - 1) + x] * (xp - in[p + 1]);
        if (y > 0) acc += vertical_[(y - 1) * w + x] * (xp - in[p - w]);
        if (y + 1 < h) acc += vertical_[y * w + x] * (xp - in[p + w]);
        out[p] = xp + lambda_ * acc;
      }
    });
  }

private:
  std::size_t width_, height_;
  double lambda_;
  std::vector<double> horizontal_, vertical_, rhs_;
};

// Builds the smoothing system for a value channel. Edge weights are
// 1 / (|log(v_q + 1e-3) - log(v_p + 1e-3)| + epsilon); the right-hand side is v.
inline WeightedLaplacianSystem assemble_system(const PlanarImage& v, const SolverConfig& cfg) {
  require_space(v, ColorSpace::GRAY, "assemble_system");
  cfg.validate();
  const std::size_t w = v.width(), h = v.height();
  const auto src = v.plane(0);

  std::vector<double> logv(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) logv[i] = std::log(src[i] + kLogOffset);

  std::vector<double> horizontal(w ? (w - 1) * h : 0), vertical(h ? (h - 1) * w : 0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x + 1 < w; ++x)
      horizontal[y * (w - 1) + x] = 1.0 / (std::abs(logv[y * w + x + 1] - logv[y * w + x]) + cfg.epsilon);
  for (std::size_t y = 0; y + 1 < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      vertical[y * w + x] = 1.0 / (std::abs(logv[(y + 1) * w + x] - logv[y * w + x]) + cfg.epsilon);

  return {w, h, cfg.lambda, std::move(horizontal), std::move(vertical),
          std::vector<double>(src.begin(), src.end())};
}

struct SolveResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  double residual = 0.0;                // final ||Ax - b|| / ||b||
  std::vector<double> residual_history;  // relative residual before each iteration and at exit
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// Conjugate residual iteration, the member of the CG family that minimizes
// ||b - Ax|| over each Krylov space, so the residual history never increases.
// Op needs size() and apply(in, out, threads). Starts from x = 0; dot
// products are summed serially, so results do not depend on cfg.threads.
// Throws ConvergenceError when max_iters is reached above tolerance.
template <typename Op>
SolveResult solve_cg(const Op& op, std::span<const double> rhs, const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t n = op.size();
  if (rhs.size() != n) throw InvalidInput("solve_cg: rhs size does not match operator");

  SolveResult out;
  out.x.assign(n, 0.0);
  const double bnorm = std::sqrt(detail::dot(rhs, rhs));
  if (bnorm == 0.0) {
    out.residual_history.push_back(0.0);
    return out;
  }

  std::vector<double> r(rhs.begin(), rhs.end()), p = r, ar(n), ap(n);
  op.apply(r, ar, cfg.threads);
  ap = ar;
  double rar = detail::dot(r, ar);
  double rel = 1.0;
  out.residual_history.push_back(rel);

  while (out.iterations < cfg.max_iters) {
    const double apap = detail::dot(ap, ap);
    if (apap == 0.0) break;
    const double alpha = rar / apap;
    for (std::size_t i = 0; i < n; ++i) {
      out.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    ++out.iterations;
    rel = std::sqrt(detail::dot(r, r)) / bnorm;
    out.residual_history.push_back(rel);
    if (rel <= cfg.tolerance) break;

    op.apply(r, ar, cfg.threads);
    const double rar_next = detail::dot(r, ar);
    const double beta = rar_next / rar;
    rar = rar_next;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = r[i] + beta * p[i];
      ap[i] = ar[i] + beta * ap[i];
    }
  }
  out.residual = rel;
  if (rel > cfg.tolerance) throw ConvergenceError(rel, out.iterations);
  return out;
}

struct Decomposition {
  PlanarImage illumination;
  PlanarImage reflectance;
  double residual = 0.0;
  std::size_t iterations = 0;
};

// Splits a value channel into a smooth illumination layer and a reflectance
// layer with v = illumination * reflectance.
//
// The illumination is the solution of (Id + lambda D^T W D) l = v, raised to
// at least max(v, 1e-4) so that reflectance = v / l stays inside [0,1].
inline Decomposition decompose(const PlanarImage& v, const SolverConfig& cfg) {
  require_space(v, ColorSpace::GRAY, "decompose");
  v.validate();
  const auto system = assemble_system(v, cfg);
  auto solved = solve_cg(system, system.rhs(), cfg);

  const auto src = v.plane(0);
  std::vector<double> illum(src.size()), refl(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double l = std::min(1.0, std::max({solved.x[i], src[i], kIlluminationFloor}));
    illum[i] = l;
    refl[i] = clamp01(src[i] / l);
  }
  return {PlanarImage::gray(v.width(), v.height(), std::move(illum)),
          PlanarImage::gray(v.width(), v.height(), std::move(refl)), solved.residual, solved.iterations};
}

// Anisotropic total variation: sum of absolute forward differences.
inline double total_variation(const PlanarImage& img, std::size_t c = 0) {
  const auto p = img.plane(c);
  const std::size_t w = img.width(), h = img.height();
  double tv = 0.0;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (x + 1 < w) tv += std::abs(p[y * w + x + 1] - p[y * w + x]);
      if (y + 1 < h) tv += std::abs(p[(y + 1) * w + x] - p[y * w + x]);
    }
  return tv;
}

}  // namespace shadowup
