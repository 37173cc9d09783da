// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

// Per-Gaussian geometric quantities: covariances, camera depths and tertile
// layers, kNN densities, and min-max normalization.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gsrobust/cloud.hpp"
#include "gsrobust/error.hpp"
#include "gsrobust/io/camera.hpp"

namespace gsrobust {

using Covariance3 = Mat3;

/// Rotation matrix of a unit (w, x, y, z) quaternion.
inline Mat3 rotation_matrix(const Quaternion& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

/// R diag(scale)^2 R^T + floor * I.
inline Covariance3 covariance_from_primitive(const Vec3& scale, const Quaternion& rotation, double floor) {
  if (std::abs(quaternion_norm(rotation) - 1.0) > kQuaternionUnitTolerance)
    fail(ErrorKind::contract, "covariance_from_primitive: rotation quaternion is not unit-norm");
  if (!(scale.array() > 0.0).all()) fail(ErrorKind::contract, "covariance_from_primitive: scale must be positive");
  if (!(floor >= 0.0)) fail(ErrorKind::contract, "covariance_from_primitive: floor must be nonnegative");
  const Mat3 r = rotation_matrix(rotation);
  const Vec3 s2 = scale.array().square();
  Mat3 cov = r * s2.asDiagonal() * r.transpose();
  cov = 0.5 * (cov + cov.transpose());
  cov.diagonal().array() += floor;
  return cov;
}

/// 1e-10 * (median scale component)^2 over the whole cloud.
inline double default_covariance_floor(const GaussianCloud& cloud) {
  std::vector<double> s;
  s.reserve(cloud.size() * 3);
  for (const auto& p : cloud.primitives)
    for (int k = 0; k < 3; ++k) s.push_back(p.scale[k]);
  if (s.empty()) return 0.0;
  auto mid = s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2);
  std::nth_element(s.begin(), mid, s.end());
  return 1e-10 * (*mid) * (*mid);
}

// ---------------------------------------------------------------------------
// Depths and tertile layers

struct DepthStats {
  std::vector<double> depths;
  double d_near = 0.0;
  double d_middle = 0.0;
  double min = 0.0;
  double max = 0.0;
};

enum class DepthLayer { near, middle, far };

/// Nearest-rank empirical quantile at num/den (rank = ceil(n * num / den)).
inline double nearest_rank_quantile(std::vector<double> values, std::size_t num, std::size_t den) {
  require(!values.empty(), ErrorKind::contract, "quantile of an empty list");
  const std::size_t n = values.size();
  std::size_t rank = (n * num + den - 1) / den;
  rank = std::clamp<std::size_t>(rank, 1, n);
  auto it = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), it, values.end());
  return *it;
}

inline DepthStats depth_stats(std::vector<double> depths) {
  require(!depths.empty(), ErrorKind::contract, "depth statistics need at least one depth");
  DepthStats st;
  st.d_near = nearest_rank_quantile(depths, 1, 3);
  st.d_middle = nearest_rank_quantile(depths, 2, 3);
  const auto [lo, hi] = std::minmax_element(depths.begin(), depths.end());
  st.min = *lo;
  st.max = *hi;
  st.depths = std::move(depths);
  return st;
}

inline DepthStats camera_depths(const GaussianCloud& cloud, const CameraDescriptor& camera) {
  require(!cloud.empty(), ErrorKind::contract, "camera_depths: empty cloud");
  std::vector<double> d;
  d.reserve(cloud.size());
  for (const auto& p : cloud.primitives) d.push_back((p.position - camera.position).norm());
  return depth_stats(std::move(d));
}

inline DepthLayer layer_of(double depth, const DepthStats& stats) {
  if (depth <= stats.d_near) return DepthLayer::near;
  if (depth <= stats.d_middle) return DepthLayer::middle;
  return DepthLayer::far;
}

// ---------------------------------------------------------------------------
// kNN density

enum class KnnMethod { automatic, brute_force, grid };

inline constexpr std::size_t kBruteForceKnnLimit = 50'000;
inline constexpr double kDefaultDensityEpsilon = 1e-8;

namespace knn_detail {

using Neighbor = std::pair<double, std::size_t>;  // (squared distance, index)

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

// Keeps the k smallest (d2, index) pairs as a max-heap.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  void offer(double d2, std::size_t idx) {
    const Neighbor n{d2, idx};
    if (heap_.size() < k_) {
      heap_.push_back(n);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (n < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = n;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  bool full() const noexcept { return heap_.size() == k_; }
  double worst() const { return heap_.front().first; }

  /// Mean Euclidean distance, summed in (d2, index) order.
  double mean_distance() {
    std::sort(heap_.begin(), heap_.end());
    double sum = 0.0;
    for (const auto& n : heap_) sum += std::sqrt(n.first);
    return sum / static_cast<double>(heap_.size());
  }

 private:
  std::size_t k_;
  std::vector<Neighbor> heap_;
};

inline std::vector<double> mean_knn_brute(std::span<const Vec3> pts, std::size_t k) {
  std::vector<double> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    TopK top(k);
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) top.offer(squared_distance(pts[i], pts[j]), j);
    out[i] = top.mean_distance();
  }
  return out;
}

inline std::vector<double> mean_knn_grid(std::span<const Vec3> pts, std::size_t k) {
  const std::size_t n = pts.size();
  Vec3 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = hi - lo;
  const double max_extent = extent.maxCoeff();

  // Cell edge targeting roughly 2k points per occupied cell.
  double cell = 1.0;
  if (max_extent > 0.0) {
    double volume = 1.0;
    int dims = 0;
    for (int a = 0; a < 3; ++a) {
      if (extent[a] > 1e-12 * max_extent) {
        volume *= extent[a];
        ++dims;
      }
    }
    cell = std::pow(volume * 2.0 * static_cast<double>(k) / static_cast<double>(n), 1.0 / dims);
    cell = std::max(cell, max_extent / 1.0e6);
  }

  using Cell = std::array<std::int64_t, 3>;
  auto cell_of = [&](const Vec3& p) {
    Cell c;
    for (int a = 0; a < 3; ++a) c[a] = static_cast<std::int64_t>(std::floor((p[a] - lo[a]) / cell));
    return c;
  };
  auto key_of = [](const Cell& c) {
    return (static_cast<std::uint64_t>(c[0]) << 42) | (static_cast<std::uint64_t>(c[1]) << 21) |
           static_cast<std::uint64_t>(c[2]);
  };

  Cell max_cell{0, 0, 0};
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Cell c = cell_of(pts[i]);
    for (int a = 0; a < 3; ++a) max_cell[a] = std::max(max_cell[a], c[a]);
    keyed[i] = {key_of(c), i};
  }
  std::sort(keyed.begin(), keyed.end());
  std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> buckets;
  buckets.reserve(n);
  for (std::size_t b = 0; b < n;) {
    std::size_t e = b;
    while (e < n && keyed[e].first == keyed[b].first) ++e;
    buckets.emplace(keyed[b].first, std::make_pair(b, e));
    b = e;
  }
  const std::int64_t max_ring = std::max({max_cell[0], max_cell[1], max_cell[2]});

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Cell c = cell_of(pts[i]);
    TopK top(k);
    for (std::int64_t r = 0; r <= max_ring; ++r) {
      for (std::int64_t dx = -r; dx <= r; ++dx) {
        for (std::int64_t dy = -r; dy <= r; ++dy) {
          for (std::int64_t dz = -r; dz <= r; ++dz) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
            const Cell q{c[0] + dx, c[1] + dy, c[2] + dz};
            bool inside = true;
            for (int a = 0; a < 3; ++a) inside = inside && q[a] >= 0 && q[a] <= max_cell[a];
            if (!inside) continue;
            const auto it = buckets.find(key_of(q));
            if (it == buckets.end()) continue;
            for (std::size_t s = it->second.first; s < it->second.second; ++s) {
              const std::size_t j = keyed[s].second;
              if (j != i) top.offer(squared_distance(pts[i], pts[j]), j);
            }
          }
        }
      }
      // Anything in ring r+1 or beyond is at least r cells away. The bound is
      // strict (and shaved) so equal-distance, lower-index candidates are never skipped.
      if (top.full()) {
        const double reach = static_cast<double>(r) * cell * (1.0 - 1e-9);
        if (top.worst() < reach * reach) break;
      }
    }
    out[i] = top.mean_distance();
  }
  return out;
}

}  // namespace knn_detail

/// Mean Euclidean distance from each point to its k nearest other points.
/// Ties are broken toward the lower index, so both search paths agree exactly.
inline std::vector<double> mean_knn_distance(std::span<const Vec3> points, std::size_t k,
                                             KnnMethod method = KnnMethod::automatic) {
  if (k < 1 || points.size() <= k)
    fail(ErrorKind::contract, "kNN needs 1 <= k < point count (k = " + std::to_string(k) +
                                  ", points = " + std::to_string(points.size()) + ")");
  if (method == KnnMethod::automatic)
    method = points.size() <= kBruteForceKnnLimit ? KnnMethod::brute_force : KnnMethod::grid;
  return method == KnnMethod::brute_force ? knn_detail::mean_knn_brute(points, k)
                                          : knn_detail::mean_knn_grid(points, k);
}

/// rho_i = 1 / (mean kNN distance + epsilon).
inline std::vector<double> knn_density(const GaussianCloud& cloud, std::size_t k,
                                       double epsilon = kDefaultDensityEpsilon,
                                       KnnMethod method = KnnMethod::automatic) {
  if (!(epsilon > 0.0)) fail(ErrorKind::contract, "knn_density: epsilon must be positive");
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const auto& p : cloud.primitives) pts.push_back(p.position);
  auto mean = mean_knn_distance(pts, k, method);
  for (double& m : mean) m = 1.0 / (m + epsilon);
  return mean;
}

/// (v - min) / (max - min); a constant input maps to all zeros.
inline std::vector<double> min_max_normalize(std::span<const double> values) {
  require(!values.empty(), ErrorKind::contract, "min_max_normalize: empty input");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo, range = *hi - *lo;
  std::vector<double> out(values.size(), 0.0);
  if (range > 0.0)
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::clamp((values[i] - min) / range, 0.0, 1.0);
  return out;
}

}  // namespace gsrobust
