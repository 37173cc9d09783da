// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

// Distance-aware fidelity terms: a far-field pixel mask from a depth map, the
// masked L1 over that mask, D-SSIM, and the weighted training objective.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gsrobust/error.hpp"
#include "gsrobust/format.hpp"
#include "gsrobust/io/raster.hpp"

namespace gsrobust {

enum class FarMaskMode {
  quantile,  // the round(tau * H * W) deepest pixels
  literal,   // pixels with depth > tau * D_max
};

constexpr std::string_view to_string(FarMaskMode m) noexcept {
  return m == FarMaskMode::quantile ? "quantile" : "literal";
}

struct FarMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<bool> bits;  // row-major, true = far field
  double tau = 0.0;
  double threshold_value = 0.0;
  FarMaskMode mode = FarMaskMode::quantile;
  std::vector<std::string> warnings;

  std::size_t count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true)); }
};

inline std::size_t far_quota(double tau, std::size_t pixels) {
  const auto q = static_cast<std::size_t>(std::llround(tau * static_cast<double>(pixels)));
  return std::clamp<std::size_t>(q, 1, pixels);
}

inline FarMask far_mask(const DepthMap& depth, double tau, FarMaskMode mode = FarMaskMode::quantile) {
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorKind::contract, "far_mask: tau must lie in (0,1)");
  const std::size_t n = depth.pixel_count();
  if (n == 0 || depth.values.size() != n) fail(ErrorKind::contract, "far_mask: depth map is empty or malformed");

  FarMask m;
  m.width = depth.width;
  m.height = depth.height;
  m.tau = tau;
  m.mode = mode;
  m.bits.assign(n, false);

  const auto [lo, hi] = std::minmax_element(depth.values.begin(), depth.values.end());
  if (*lo == *hi) m.warnings.push_back("depth map is constant; the far-field mask carries no depth information");

  if (mode == FarMaskMode::literal) {
    m.threshold_value = tau * depth.max_value();
    for (std::size_t i = 0; i < n; ++i) m.bits[i] = depth.values[i] > m.threshold_value;
    if (m.count() == 0) m.warnings.push_back("literal threshold selects no pixels");
    return m;
  }

  // Farthest first, ties by row-major index.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t quota = far_quota(tau, n);
  const auto& v = depth.values;
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(quota), order.end(),
                    [&](std::size_t a, std::size_t b) { return v[a] > v[b] || (v[a] == v[b] && a < b); });
  for (std::size_t r = 0; r < quota; ++r) m.bits[order[r]] = true;
  m.threshold_value = v[order[quota - 1]];
  return m;
}

struct LossWeights {
  double lambda_ssim = 0.2;
  double lambda_dafe = 1.0;
};

inline void validate_loss_weights(const LossWeights& w) {
  if (!(std::isfinite(w.lambda_ssim) && w.lambda_ssim >= 0.0 && std::isfinite(w.lambda_dafe) && w.lambda_dafe >= 0.0))
    fail(ErrorKind::contract, "loss weights must be finite and nonnegative");
}

struct LossBreakdown {
  double l1 = 0.0;
  double dssim = 0.0;
  double dafe = 0.0;
  double total = 0.0;
};

namespace dafe_detail {

inline void require_same_shape(const ImagePlane& a, const ImagePlane& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    fail(ErrorKind::contract, "image dimensions differ (" + std::to_string(a.width) + "x" + std::to_string(a.height) +
                                  "x" + std::to_string(a.channels) + " vs " + std::to_string(b.width) + "x" +
                                  std::to_string(b.height) + "x" + std::to_string(b.channels) + ")");
  if (a.values.size() != a.pixel_count() * a.channels || b.values.size() != b.pixel_count() * b.channels)
    fail(ErrorKind::contract, "image buffer size does not match its dimensions");
  if (a.channels == 0 || a.pixel_count() == 0) fail(ErrorKind::contract, "image is empty");
}

inline double pixel_abs_mean(const ImagePlane& a, const ImagePlane& b, std::size_t pixel) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.channels; ++c) s += std::abs(a.at(pixel, c) - b.at(pixel, c));
  return s / static_cast<double>(a.channels);
}

inline constexpr int kWindow = 11;
inline constexpr double kSigma = 1.5;
inline constexpr double kC1 = 0.01 * 0.01;
inline constexpr double kC2 = 0.03 * 0.03;

inline std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> g{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    g[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
    sum += g[i];
  }
  for (double& x : g) x /= sum;
  return g;
}

// Separable "valid" filter: output is (w - 10) x (h - 10).
inline std::vector<double> filter_valid(const std::vector<double>& in, std::size_t w, std::size_t h,
                                        const std::array<double, kWindow>& g) {
  const std::size_t ow = w - kWindow + 1, oh = h - kWindow + 1;
  std::vector<double> rows(ow * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * in[y * w + x + k];
      rows[y * ow + x] = s;
    }
  std::vector<double> out(ow * oh);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace dafe_detail

/// Mean over masked pixels of the channel-averaged |rendered - truth|.
inline double dafe_loss(const ImagePlane& rendered, const ImagePlane& truth, const FarMask& mask) {
  dafe_detail::require_same_shape(rendered, truth);
  if (mask.width != rendered.width || mask.height != rendered.height || mask.bits.size() != rendered.pixel_count())
    fail(ErrorKind::contract, "far mask dimensions differ from the images");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < mask.bits.size(); ++p) {
    if (!mask.bits[p]) continue;
    sum += dafe_detail::pixel_abs_mean(rendered, truth, p);
    ++count;
  }
  if (count == 0) fail(ErrorKind::contract, "dafe_loss: far mask selects no pixels");
  return sum / static_cast<double>(count);
}

/// Global mean absolute difference.
inline double l1_loss(const ImagePlane& rendered, const ImagePlane& truth) {
  dafe_detail::require_same_shape(rendered, truth);
  double sum = 0.0;
  for (std::size_t p = 0; p < rendered.pixel_count(); ++p) sum += dafe_detail::pixel_abs_mean(rendered, truth, p);
  return sum / static_cast<double>(rendered.pixel_count());
}

/// (1 - SSIM) / 2 over valid 11x11 Gaussian windows, averaged over channels.
inline double dssim(const ImagePlane& rendered, const ImagePlane& truth) {
  using namespace dafe_detail;
  require_same_shape(rendered, truth);
  if (rendered.width < static_cast<std::size_t>(kWindow) || rendered.height < static_cast<std::size_t>(kWindow))
    fail(ErrorKind::contract, "dssim needs images of at least 11x11 pixels");
  const std::size_t w = rendered.width, h = rendered.height, n = w * h;
  const auto g = gaussian_window();

  double ssim_sum = 0.0;
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t c = 0; c < rendered.channels; ++c) {
    for (std::size_t p = 0; p < n; ++p) {
      x[p] = rendered.at(p, c);
      y[p] = truth.at(p, c);
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    const auto mx = filter_valid(x, w, h, g), my = filter_valid(y, w, h, g);
    const auto sxx = filter_valid(xx, w, h, g), syy = filter_valid(yy, w, h, g), sxy = filter_valid(xy, w, h, g);
    double channel = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      // Every term is written symmetrically in (x, y) so swapping arguments is exact.
      const double mxy = mx[i] * my[i];
      const double msq = mx[i] * mx[i] + my[i] * my[i];
      const double var_sum = (sxx[i] + syy[i]) - msq;
      const double cov = sxy[i] - mxy;
      channel += ((2.0 * mxy + kC1) * (2.0 * cov + kC2)) / ((msq + kC1) * (var_sum + kC2));
    }
    ssim_sum += channel / static_cast<double>(mx.size());
  }
  const double ssim = ssim_sum / static_cast<double>(rendered.channels);
  return std::clamp((1.0 - ssim) / 2.0, 0.0, 1.0);
}

inline LossBreakdown total_loss(const ImagePlane& rendered, const ImagePlane& truth, const FarMask& mask,
                                const LossWeights& weights = {}) {
  validate_loss_weights(weights);
  LossBreakdown b;
  b.l1 = l1_loss(rendered, truth);
  b.dssim = dssim(rendered, truth);
  b.dafe = dafe_loss(rendered, truth, mask);
  b.total = b.l1 + weights.lambda_ssim * b.dssim + weights.lambda_dafe * b.dafe;
  return b;
}

/// Header line plus one data row: l1,dssim,dafe,total,tau,lambda_ssim,lambda_dafe.
inline std::string format_loss_csv(const LossBreakdown& b, double tau, const LossWeights& weights,
                                   const std::vector<std::string>& header_comments = {}) {
  std::ostringstream os;
  for (const auto& c : header_comments) os << "# " << c << "\n";
  os << "l1,dssim,dafe,total,tau,lambda_ssim,lambda_dafe\n"
     << format_number(b.l1) << "," << format_number(b.dssim) << "," << format_number(b.dafe) << ","
     << format_number(b.total) << "," << format_number(tau) << "," << format_number(weights.lambda_ssim) << ","
     << format_number(weights.lambda_dafe) << "\n";
  return os.str();
}

}  // namespace gsrobust
