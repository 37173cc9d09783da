// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

// Depth-and-density guided dropout: per-Gaussian scores, tertile-layer
// attenuation, the linear rate schedule, and exact-count drop masks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "gsrobust/cloud.hpp"
#include "gsrobust/error.hpp"
#include "gsrobust/geometry.hpp"
#include "gsrobust/format.hpp"
#include "gsrobust/sampling.hpp"

namespace gsrobust {

struct DropConfig {
  double w_depth = 0.5;
  double w_density = 0.5;
  double lambda_middle = 0.7;
  double lambda_far = 0.3;
  double r_min = 0.05;
  double r_max = 0.3;
  std::size_t total_steps = 10'000;
  std::size_t k = 6;
  double density_epsilon = kDefaultDensityEpsilon;
  KnnMethod knn_method = KnnMethod::automatic;
};

inline void validate_drop_config(const DropConfig& c) {
  if (!(c.w_depth >= 0.0 && c.w_depth <= 1.0 && c.w_density >= 0.0 && c.w_density <= 1.0) ||
      std::abs(c.w_depth + c.w_density - 1.0) > 1e-9)
    fail(ErrorKind::contract, "w_depth and w_density must lie in [0,1] and sum to 1");
  if (!(0.0 < c.lambda_far && c.lambda_far < c.lambda_middle && c.lambda_middle < 1.0))
    fail(ErrorKind::contract, "attenuation factors must satisfy 0 < lambda_far < lambda_middle < 1");
  if (!(0.0 <= c.r_min && c.r_min <= c.r_max && c.r_max < 1.0))
    fail(ErrorKind::contract, "rates must satisfy 0 <= r_min <= r_max < 1");
  if (c.total_steps == 0) fail(ErrorKind::contract, "total_steps must be positive");
  if (c.k == 0) fail(ErrorKind::contract, "k must be at least 1");
}

/// Inputs behind the score, kept for reporting.
struct DropScores {
  DepthStats depth;
  std::vector<double> density;
  std::vector<double> scores;
};

inline DropScores compute_drop_scores(const GaussianCloud& cloud, const CameraDescriptor& camera,
                                      const DropConfig& config) {
  validate_drop_config(config);
  if (cloud.size() <= config.k)
    fail(ErrorKind::contract, "drop scores need more primitives than k (" + std::to_string(config.k) + ")");
  DropScores out;
  out.depth = camera_depths(cloud, camera);
  out.density = knn_density(cloud, config.k, config.density_epsilon, config.knn_method);
  const auto depth_n = min_max_normalize(out.depth.depths);
  const auto density_n = min_max_normalize(out.density);
  out.scores.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    out.scores[i] = std::clamp(config.w_depth * depth_n[i] + config.w_density * density_n[i], 0.0, 1.0);
  return out;
}

/// S_i = w_depth * normalized depth + w_density * normalized density.
inline std::vector<double> drop_scores(const GaussianCloud& cloud, const CameraDescriptor& camera,
                                       const DropConfig& config) {
  return compute_drop_scores(cloud, camera, config).scores;
}

/// Near layer keeps S_i; middle and far layers are attenuated.
inline std::vector<double> layered_probabilities(std::span<const double> scores, const DepthStats& depths,
                                                 const DropConfig& config) {
  if (scores.size() != depths.depths.size())
    fail(ErrorKind::contract, "layered_probabilities: score and depth lengths differ");
  std::vector<double> p(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    switch (layer_of(depths.depths[i], depths)) {
      case DepthLayer::near: p[i] = scores[i]; break;
      case DepthLayer::middle: p[i] = config.lambda_middle * scores[i]; break;
      case DepthLayer::far: p[i] = config.lambda_far * scores[i]; break;
    }
  }
  return p;
}

/// r(t) = r_min + (r_max - r_min) * min(t, T) / T.
inline double schedule_rate(std::size_t step, const DropConfig& config) {
  if (config.total_steps == 0) fail(ErrorKind::contract, "schedule_rate: total_steps must be positive");
  if (step >= config.total_steps) return config.r_max;
  return config.r_min + (config.r_max - config.r_min) * static_cast<double>(step) /
                            static_cast<double>(config.total_steps);
}

inline constexpr double kDropWeightFloor = 1e-12;

inline std::size_t drop_count(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
}

/// Drops exactly round(rate * N) primitives, drawn without replacement with
/// weights P_i + 1e-12. `true` marks a dropped primitive.
inline std::vector<bool> sample_mask(std::span<const double> probabilities, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) fail(ErrorKind::contract, "sample_mask: rate must lie in [0,1)");
  for (double p : probabilities)
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::contract, "sample_mask: probabilities must lie in [0,1]");
  const std::size_t n = probabilities.size();
  const std::size_t count = drop_count(rate, n);
  if (n > 0 && count >= n) fail(ErrorKind::contract, "sample_mask: rate would drop every primitive");
  std::vector<bool> mask(n, false);
  if (count == 0) return mask;
  std::vector<double> w(probabilities.begin(), probabilities.end());
  for (double& x : w) x += kDropWeightFloor;
  Rng rng(seed);
  for (std::size_t idx : weighted_sample_without_replacement(w, count, rng)) mask[idx] = true;
  return mask;
}

struct DropPlan {
  std::vector<double> depths;
  std::vector<double> densities;
  std::vector<double> scores;
  std::vector<double> probabilities;
  double rate = 0.0;
  std::vector<bool> mask;
  std::size_t step = 0;
  std::uint64_t seed = 0;

  std::size_t dropped() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true)); }
};

inline DropPlan make_drop_plan(const GaussianCloud& cloud, const CameraDescriptor& camera, const DropConfig& config,
                               std::size_t step, std::uint64_t seed) {
  DropScores s = compute_drop_scores(cloud, camera, config);
  DropPlan plan;
  plan.probabilities = layered_probabilities(s.scores, s.depth, config);
  plan.rate = schedule_rate(step, config);
  plan.mask = sample_mask(plan.probabilities, plan.rate, seed);
  plan.step = step;
  plan.seed = seed;
  plan.depths = std::move(s.depth.depths);
  plan.densities = std::move(s.density);
  plan.scores = std::move(s.scores);
  return plan;
}

/// CSV: `#` header (caller comments, then rate/step/seed), then one row per primitive.
inline std::string format_drop_plan_csv(const DropPlan& plan, const std::vector<std::string>& header_comments = {}) {
  std::ostringstream os;
  for (const auto& c : header_comments) os << "# " << c << "\n";
  os << "# rate = " << format_number(plan.rate) << "\n"
     << "# step = " << plan.step << "\n"
     << "# seed = " << plan.seed << "\n"
     << "index,depth,density,score,probability,dropped\n";
  for (std::size_t i = 0; i < plan.scores.size(); ++i) {
    os << i << "," << format_number(plan.depths[i]) << "," << format_number(plan.densities[i]) << ","
       << format_number(plan.scores[i]) << "," << format_number(plan.probabilities[i]) << ","
       << (plan.mask[i] ? 1 : 0) << "\n";
  }
  return os.str();
}

}  // namespace gsrobust
