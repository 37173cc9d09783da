// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

// Inter-model robustness: each splat model is reduced to an opacity-weighted
// Gaussian mixture (depth-stratified subsample), mixtures are compared with an
// entropic mixture-Wasserstein distance, and the pairwise distances S_ij are
// aggregated as ln(sum S_ij^2 / sum S_ij).

#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gsrobust/bures.hpp"
#include "gsrobust/cloud.hpp"
#include "gsrobust/error.hpp"
#include "gsrobust/format.hpp"
#include "gsrobust/geometry.hpp"
#include "gsrobust/sampling.hpp"
#include "gsrobust/transport.hpp"

namespace gsrobust {

struct SamplingConfig {
  std::size_t target_count = 10'000;
  std::array<double, 3> strata_fractions{0.2, 0.3, 0.5};  // near, middle, far
  std::uint64_t seed = 0;
};

inline void validate_sampling_config(const SamplingConfig& c) {
  if (c.target_count < 3) fail(ErrorKind::contract, "sampling target_count must be at least 3");
  double sum = 0.0;
  for (double f : c.strata_fractions) {
    if (!(f >= 0.0)) fail(ErrorKind::contract, "strata fractions must be nonnegative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorKind::contract, "strata fractions must sum to 1");
}

struct MixtureModel {
  std::vector<GaussianComponent> components;
  DiscreteMeasure weights;
  std::uint64_t sample_seed = 0;
  std::string source;
  std::vector<std::size_t> selected;        // indices into the source cloud, ascending
  std::array<std::size_t, 3> stratum_counts{};
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return components.size(); }
};

/// Builds the mixture from a depth-stratified, opacity-weighted subsample.
/// Quotas follow strata_fractions * min(target, size); a stratum that cannot
/// fill its quota hands the remainder to the others. `covariance_floor` < 0
/// selects default_covariance_floor(cloud).
inline MixtureModel abstract_mixture(const GaussianCloud& cloud, const CameraDescriptor& camera,
                                     const SamplingConfig& config, double covariance_floor = -1.0) {
  validate_sampling_config(config);
  if (cloud.size() < 3) fail(ErrorKind::contract, "abstract_mixture needs at least 3 primitives");
  double opacity_total = 0.0;
  for (const auto& p : cloud.primitives) opacity_total += p.opacity;
  if (!(opacity_total > 0.0)) fail(ErrorKind::data, "all opacities are zero; mixture weights are undefined");

  const DepthStats stats = camera_depths(cloud, camera);
  std::array<std::vector<std::size_t>, 3> members;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    members[static_cast<int>(layer_of(stats.depths[i], stats))].push_back(i);

  MixtureModel model;
  model.sample_seed = config.seed;
  model.source = cloud.source_path;

  const std::size_t total = std::min(config.target_count, cloud.size());
  std::vector<std::size_t> quota = apportion(total, config.strata_fractions);

  // Redistribute overflow in proportion to the fractions of strata with spare capacity.
  for (int round = 0; round < 3; ++round) {
    std::size_t overflow = 0;
    for (int s = 0; s < 3; ++s) {
      if (quota[s] > members[s].size()) {
        overflow += quota[s] - members[s].size();
        model.warnings.push_back("stratum " + std::to_string(s) + " has " + std::to_string(members[s].size()) +
                                 " primitives for a quota of " + std::to_string(quota[s]) + "; overflow redistributed");
        quota[s] = members[s].size();
      }
    }
    if (overflow == 0) break;
    std::array<double, 3> share{};
    double share_sum = 0.0;
    for (int s = 0; s < 3; ++s) {
      if (quota[s] < members[s].size()) {
        share[s] = config.strata_fractions[s] > 0.0 ? config.strata_fractions[s] : 1e-12;
        share_sum += share[s];
      }
    }
    if (share_sum == 0.0) break;
    for (double& x : share) x /= share_sum;
    const auto extra = apportion(overflow, share);
    for (int s = 0; s < 3; ++s) quota[s] += extra[s];
  }

  // One key per primitive, drawn in index order, keeps the draw reproducible.
  Rng rng(config.seed);
  std::vector<double> keys(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) keys[i] = weighted_key(cloud.primitives[i].opacity, rng);

  for (int s = 0; s < 3; ++s) {
    std::vector<double> stratum_keys;
    stratum_keys.reserve(members[s].size());
    for (std::size_t idx : members[s]) stratum_keys.push_back(keys[idx]);
    for (std::size_t pos : top_keys(stratum_keys, quota[s])) model.selected.push_back(members[s][pos]);
    model.stratum_counts[s] = quota[s];
  }
  std::sort(model.selected.begin(), model.selected.end());

  const double floor = covariance_floor < 0.0 ? default_covariance_floor(cloud) : covariance_floor;
  std::vector<double> masses;
  masses.reserve(model.selected.size());
  model.components.reserve(model.selected.size());
  for (std::size_t idx : model.selected) {
    const auto& p = cloud.primitives[idx];
    model.components.push_back({p.position, covariance_from_primitive(p.scale, p.rotation, floor)});
    masses.push_back(p.opacity);
  }
  model.weights = make_measure(std::move(masses));
  return model;
}

// ---------------------------------------------------------------------------
// Mixture distance

struct MixtureDistanceOptions {
  double epsilon = 0.0;  // <= 0: default_epsilon of each cost matrix
  CostKind cost_kind = CostKind::taylor_sym;
  double tolerance = 1e-6;
  std::size_t max_iter = 10'000;
  /// Bitwise-identical mixtures have MW2 = 0; skip the solver (and its entropic bias).
  bool shortcut_identical = true;
};

struct MixtureDistance {
  double value = 0.0;
  double epsilon = 0.0;
  double bias_bound = 0.0;  // epsilon * ln(K)
  std::size_t iterations = 0;
  double marginal_error = 0.0;
  bool identical = false;
};

inline bool identical_mixtures(const MixtureModel& a, const MixtureModel& b) {
  if (a.size() != b.size() || a.weights.weights != b.weights.weights) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.components[i].mean != b.components[i].mean || a.components[i].covariance != b.components[i].covariance)
      return false;
  return true;
}

inline CostMatrix mixture_cost_matrix(const MixtureModel& a, const MixtureModel& b, CostKind kind) {
  std::vector<PreparedGaussian> pa, pb;
  pa.reserve(a.size());
  pb.reserve(b.size());
  for (const auto& c : a.components) pa.push_back(prepare(c));
  for (const auto& c : b.components) pb.push_back(prepare(c));
  CostMatrix cost(a.size(), b.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t j = 0; j < pb.size(); ++j) cost(i, j) = pair_cost(kind, pa[i], pb[j]);
  return cost;
}

inline MixtureDistance mixture_distance_detailed(const MixtureModel& a, const MixtureModel& b,
                                                 const MixtureDistanceOptions& options = {}) {
  if (a.size() == 0 || b.size() == 0) fail(ErrorKind::contract, "mixture_distance: empty mixture");
  MixtureDistance out;
  const double log_k = std::log(static_cast<double>(std::max(a.size(), b.size())));
  const CostMatrix cost = mixture_cost_matrix(a, b, options.cost_kind);
  SinkhornOptions so;
  so.epsilon = options.epsilon > 0.0 ? options.epsilon : default_epsilon(cost);
  if (options.shortcut_identical && identical_mixtures(a, b)) {
    out.identical = true;
    out.epsilon = so.epsilon;
    out.bias_bound = so.epsilon * log_k;
    return out;
  }
  so.tolerance = options.tolerance;
  so.max_iter = options.max_iter;
  so.keep_coupling = false;
  const TransportPlan plan = sinkhorn(cost, a.weights, b.weights, so);
  out.value = std::max(0.0, plan.cost);
  out.epsilon = so.epsilon;
  out.bias_bound = so.epsilon * log_k;
  out.iterations = plan.iterations;
  out.marginal_error = plan.marginal_error;
  return out;
}

inline double mixture_distance(const MixtureModel& a, const MixtureModel& b, double epsilon = 0.0,
                               CostKind kind = CostKind::taylor_sym) {
  MixtureDistanceOptions o;
  o.epsilon = epsilon;
  o.cost_kind = kind;
  return mixture_distance_detailed(a, b, o).value;
}

// ---------------------------------------------------------------------------
// IMR aggregate

struct RobustnessReport {
  std::size_t model_count = 0;
  std::vector<double> pairwise;          // N x N, symmetric, zero diagonal
  std::vector<double> pair_epsilon;      // N x N, epsilon each pair was solved with
  double imr = 0.0;
  bool degenerate = false;               // every S_ij = 0: imr is -inf
  std::size_t sample_size = 0;
  double epsilon_used = 0.0;             // fixed epsilon, or the largest adaptive one
  bool epsilon_adaptive = true;
  double bias_bound = 0.0;               // largest epsilon * ln(K) over pairs
  CostKind cost_kind = CostKind::taylor_sym;
  std::optional<double> sampling_noise;  // relative S_01 change under a second seed

  double at(std::size_t i, std::size_t j) const { return pairwise[i * model_count + j]; }
};

/// ln(sum S^2 / sum S) over the given distances; nullopt when the sum is zero.
inline std::optional<double> imr_from_distances(std::span<const double> distances) {
  double s1 = 0.0, s2 = 0.0;
  for (double s : distances) {
    if (!(s >= 0.0)) fail(ErrorKind::contract, "pairwise distances must be nonnegative");
    s1 += s;
    s2 += s * s;
  }
  if (s1 == 0.0) return std::nullopt;
  return std::log(s2 / s1);
}

inline RobustnessReport imr_score(const std::vector<MixtureModel>& models, const MixtureDistanceOptions& options = {},
                                  unsigned threads = 1) {
  const std::size_t n = models.size();
  if (n < 2) fail(ErrorKind::contract, "IMR needs at least two models");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<MixtureDistance> results(pairs.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t p; (p = next.fetch_add(1)) < pairs.size();) {
      try {
        results[p] = mixture_distance_detailed(models[pairs[p].first], models[pairs[p].second], options);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = pairs.size();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(pairs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  RobustnessReport report;
  report.model_count = n;
  report.pairwise.assign(n * n, 0.0);
  report.pair_epsilon.assign(n * n, 0.0);
  report.cost_kind = options.cost_kind;
  report.epsilon_adaptive = !(options.epsilon > 0.0);
  report.sample_size = 0;
  for (const auto& m : models) report.sample_size = std::max(report.sample_size, m.size());
  std::vector<double> upper;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    report.pairwise[i * n + j] = report.pairwise[j * n + i] = results[p].value;
    report.pair_epsilon[i * n + j] = report.pair_epsilon[j * n + i] = results[p].epsilon;
    report.epsilon_used = std::max(report.epsilon_used, results[p].epsilon);
    report.bias_bound = std::max(report.bias_bound, results[p].bias_bound);
    upper.push_back(results[p].value);
  }
  const auto imr = imr_from_distances(upper);
  report.degenerate = !imr.has_value();
  report.imr = imr.value_or(-std::numeric_limits<double>::infinity());
  return report;
}

/// Relative change of S between two clouds when the sampling seed changes.
inline double sampling_noise(const GaussianCloud& a, const GaussianCloud& b, const CameraDescriptor& camera,
                             SamplingConfig config, std::uint64_t alternate_seed,
                             const MixtureDistanceOptions& options = {}) {
  const double s1 = mixture_distance_detailed(abstract_mixture(a, camera, config),
                                              abstract_mixture(b, camera, config), options).value;
  config.seed = alternate_seed;
  const double s2 = mixture_distance_detailed(abstract_mixture(a, camera, config),
                                              abstract_mixture(b, camera, config), options).value;
  const double mean = 0.5 * (s1 + s2);
  return mean > 0.0 ? std::abs(s1 - s2) / mean : 0.0;
}

// ---------------------------------------------------------------------------
// Serialization

/// Summary block lines: `key = value`.
inline std::vector<std::string> report_summary(const RobustnessReport& r) {
  std::vector<std::string> lines;
  lines.push_back("imr = " + format_number(r.imr));
  if (r.degenerate) lines.push_back("imr_degenerate = true (all pairwise distances are zero; models are identical)");
  lines.push_back("epsilon = " + format_number(r.epsilon_used) +
                  (r.epsilon_adaptive ? " (adaptive: 0.05 x median cost, largest over pairs)" : ""));
  lines.push_back("cost = " + std::string(to_string(r.cost_kind)));
  lines.push_back("samples = " + std::to_string(r.sample_size));
  lines.push_back("entropic_bias_bound = " + format_number(r.bias_bound));
  lines.push_back("distance_includes_entropy = false");
  if (r.sampling_noise) lines.push_back("sampling_noise = " + format_number(*r.sampling_noise));
  return lines;
}

/// Pairwise matrix as CSV followed by the summary block as `#` lines.
inline std::string format_report_csv(const RobustnessReport& r, const std::vector<std::string>& labels,
                                     const std::vector<std::string>& header_comments = {}) {
  require(labels.size() == r.model_count, ErrorKind::contract, "one label per model required");
  std::ostringstream os;
  for (const auto& c : header_comments) os << "# " << c << "\n";
  os << "model";
  for (const auto& l : labels) os << "," << l;
  os << "\n";
  for (std::size_t i = 0; i < r.model_count; ++i) {
    os << labels[i];
    for (std::size_t j = 0; j < r.model_count; ++j) os << "," << format_number(r.at(i, j));
    os << "\n";
  }
  for (const auto& line : report_summary(r)) os << "# " << line << "\n";
  return os.str();
}

}  // namespace gsrobust
