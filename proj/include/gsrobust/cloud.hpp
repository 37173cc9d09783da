// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gsrobust/error.hpp"

namespace gsrobust {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rotation quaternion stored as (w, x, y, z).
using Quaternion = std::array<double, 4>;

inline double quaternion_norm(const Quaternion& q) {
  return std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
}

/// One splat exactly as stored on disk, before activations.
struct RawSplatRecord {
  Vec3 position = Vec3::Zero();
  double raw_opacity = 0.0;          // logit
  Vec3 raw_scale = Vec3::Zero();     // log scale
  Quaternion raw_rotation{1.0, 0.0, 0.0, 0.0};
  std::array<double, 3> dc_color{};
  std::vector<float> rest_color;
};

/// One splat in physical units: opacity in (0,1), positive scales, unit quaternion.
struct GaussianPrimitive {
  Vec3 position = Vec3::Zero();
  double opacity = 0.5;
  Vec3 scale = Vec3::Ones();
  Quaternion rotation{1.0, 0.0, 0.0, 0.0};
  std::array<double, 3> dc_color{};
  std::vector<float> rest_color;  // carried through, never used in any computation
};

struct GaussianCloud {
  std::vector<GaussianPrimitive> primitives;
  std::string source_path;

  std::size_t size() const noexcept { return primitives.size(); }
  bool empty() const noexcept { return primitives.empty(); }
};

inline constexpr double kQuaternionUnitTolerance = 1e-6;

/// Throws ErrorKind::invariant naming the first offending primitive.
inline void validate_cloud(const GaussianCloud& cloud) {
  if (cloud.primitives.empty()) fail(ErrorKind::invariant, "Gaussian cloud must contain at least one primitive");
  for (std::size_t i = 0; i < cloud.primitives.size(); ++i) {
    const auto& p = cloud.primitives[i];
    const std::string where = "primitive " + std::to_string(i);
    if (!p.position.allFinite()) fail(ErrorKind::invariant, where + ": non-finite position");
    if (!(p.opacity > 0.0 && p.opacity < 1.0)) fail(ErrorKind::invariant, where + ": opacity outside (0,1)");
    if (!(p.scale.array() > 0.0).all() || !p.scale.allFinite())
      fail(ErrorKind::invariant, where + ": scale must be finite and strictly positive");
    if (std::abs(quaternion_norm(p.rotation) - 1.0) > kQuaternionUnitTolerance)
      fail(ErrorKind::invariant, where + ": rotation quaternion is not unit-norm");
  }
}

}  // namespace gsrobust
