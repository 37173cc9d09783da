// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

// Squared 2-Wasserstein distances between 3D Gaussians: the closed form
// (Bures shape term) and its first-order Taylor approximation around Sigma_2.

#pragma once

#include <algorithm>
#include <cmath>
#include <string_view>

#include <Eigen/Eigenvalues>

#include "gsrobust/cloud.hpp"
#include "gsrobust/error.hpp"
#include "gsrobust/geometry.hpp"

namespace gsrobust {

struct GaussianComponent {
  Vec3 mean = Vec3::Zero();
  Covariance3 covariance = Covariance3::Identity();
};

/// Which pairwise cost feeds the transport problem.
enum class CostKind { taylor_sym, taylor_asym, exact };

constexpr std::string_view to_string(CostKind kind) noexcept {
  switch (kind) {
    case CostKind::taylor_sym: return "taylor-sym";
    case CostKind::taylor_asym: return "taylor";
    case CostKind::exact: return "exact";
  }
  return "?";
}

inline constexpr double kMaxTaylorCondition = 1e12;

/// A component with its covariance eigendecomposition cached, so batched cost
/// evaluation does one decomposition per component instead of per pair.
struct PreparedGaussian {
  Vec3 mean = Vec3::Zero();
  Covariance3 covariance = Covariance3::Identity();
  Vec3 eigenvalues = Vec3::Ones();  // ascending
  Mat3 eigenvectors = Mat3::Identity();
  Mat3 sqrt = Mat3::Identity();
  double condition = 1.0;
};

inline PreparedGaussian prepare(const GaussianComponent& g) {
  const Mat3& c = g.covariance;
  if (!c.allFinite()) fail(ErrorKind::contract, "covariance has non-finite entries");
  const double scale = std::max(c.cwiseAbs().maxCoeff(), 1e-300);
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    fail(ErrorKind::contract, "covariance is not symmetric");

  Eigen::SelfAdjointEigenSolver<Mat3> eig(c);
  if (eig.info() != Eigen::Success) fail(ErrorKind::numeric, "covariance eigendecomposition failed");
  PreparedGaussian p;
  p.mean = g.mean;
  p.covariance = c;
  p.eigenvalues = eig.eigenvalues();
  p.eigenvectors = eig.eigenvectors();
  if (!(p.eigenvalues[0] > 0.0)) fail(ErrorKind::contract, "covariance is not positive definite");
  p.condition = p.eigenvalues[2] / p.eigenvalues[0];
  p.sqrt = p.eigenvectors * p.eigenvalues.cwiseSqrt().asDiagonal() * p.eigenvectors.transpose();
  return p;
}

inline double w2_exact(const PreparedGaussian& a, const PreparedGaussian& b) {
  const double mean_term = (a.mean - b.mean).squaredNorm();
  Mat3 cross = b.sqrt * a.covariance * b.sqrt;
  cross = 0.5 * (cross + cross.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cross, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) fail(ErrorKind::numeric, "Bures cross-term eigendecomposition failed");
  double root_trace = 0.0;
  for (int k = 0; k < 3; ++k) root_trace += std::sqrt(std::max(0.0, eig.eigenvalues()[k]));
  const double trace_sum = a.covariance.trace() + b.covariance.trace();
  const double value = mean_term + trace_sum - 2.0 * root_trace;
  if (value < 0.0) {
    // Round-off slack, proportional to the magnitudes that cancelled.
    if (value < -1e-9 * std::max(1.0, trace_sum + mean_term))
      fail(ErrorKind::numeric, "closed-form W2 evaluated to a significantly negative value");
    return 0.0;
  }
  return value;
}

/// ||m1 - m2||^2 + 1/4 tr((S1 - S2) S2^-1 (S1 - S2)), expanded about b.
inline double w2_taylor(const PreparedGaussian& a, const PreparedGaussian& b) {
  if (b.condition > kMaxTaylorCondition)
    fail(ErrorKind::numeric, "Taylor W2: reference covariance is near-singular (condition number " +
                                 std::to_string(b.condition) + ")");
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const Mat3 delta = a.covariance - b.covariance;
  // tr(D S^-1 D) = sum_k |D v_k|^2 / lambda_k with S = V diag(lambda) V^T.
  const Mat3 dv = delta * b.eigenvectors;
  double shape = 0.0;
  for (int k = 0; k < 3; ++k) shape += dv.col(k).squaredNorm() / b.eigenvalues[k];
  return mean_term + 0.25 * shape;
}

inline double w2_taylor_sym(const PreparedGaussian& a, const PreparedGaussian& b) {
  return 0.5 * (w2_taylor(a, b) + w2_taylor(b, a));
}

inline double w2_exact(const GaussianComponent& a, const GaussianComponent& b) {
  return w2_exact(prepare(a), prepare(b));
}

inline double w2_taylor(const GaussianComponent& a, const GaussianComponent& b) {
  // Only b is inverted; a still has to be a valid covariance.
  return w2_taylor(prepare(a), prepare(b));
}

inline double w2_taylor_sym(const GaussianComponent& a, const GaussianComponent& b) {
  return w2_taylor_sym(prepare(a), prepare(b));
}

inline double pair_cost(CostKind kind, const PreparedGaussian& a, const PreparedGaussian& b) {
  switch (kind) {
    case CostKind::taylor_sym: return w2_taylor_sym(a, b);
    case CostKind::taylor_asym: return w2_taylor(a, b);
    case CostKind::exact: return w2_exact(a, b);
  }
  return 0.0;
}

}  // namespace gsrobust
