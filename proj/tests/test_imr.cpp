// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

using namespace gsrobust;

namespace {

// Cloud along the viewing axis so strata are known by construction.
GaussianCloud axis_cloud(gst::Gen& g, std::size_t n) {
  GaussianCloud c = gst::random_cloud(g, n);
  for (std::size_t i = 0; i < n; ++i) c.primitives[i].position = Vec3(0.01 * gst::normal(g), 0.0, 1.0 + double(i));
  return c;
}

MixtureModel hand_mixture(const std::vector<Vec3>& means, const std::vector<double>& w, double var = 0.01) {
  MixtureModel m;
  for (const auto& mu : means) m.components.push_back({mu, var * Mat3::Identity()});
  m.weights = make_measure(w);
  return m;
}

}  // namespace

TEST(ImrAggregate, Identities) {
  EXPECT_NEAR(*imr_from_distances(std::vector<double>{2.5}), std::log(2.5), 1e-15);
  EXPECT_NEAR(*imr_from_distances(std::vector<double>{0.7, 0.7, 0.7}), std::log(0.7), 1e-12);
  EXPECT_NEAR(*imr_from_distances(std::vector<double>{1, 2, 3}), std::log(14.0 / 6.0), 1e-12);
  EXPECT_FALSE(imr_from_distances(std::vector<double>{0, 0, 0}).has_value());
}

// d/dS_k of sum S^2 / sum S has the sign of 2 S_k sum S - sum S^2, so raising
// a small distance can lower the score.
TEST(ImrAggregate, BoundedScaleEquivariantAndDerivativeSign) {
  gst::Gen g(1);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> s(1 + g() % 10);
    for (double& x : s) x = gst::uniform(g, 0.01, 10.0);
    const double v = *imr_from_distances(s);
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    EXPECT_GE(v, std::log(*lo) - 1e-12);
    EXPECT_LE(v, std::log(*hi) + 1e-12);
    const double c = gst::uniform(g, 0.1, 10.0);
    auto scaled = s;
    for (double& x : scaled) x *= c;
    EXPECT_NEAR(*imr_from_distances(scaled), v + std::log(c), 1e-12);

    const std::size_t k = g() % s.size();
    double sum = 0.0, sum2 = 0.0;
    for (double x : s) sum += x, sum2 += x * x;
    const double slope = 2.0 * s[k] * sum - sum2;
    if (std::abs(slope) < 1e-3 * sum2) continue;
    auto bumped = s;
    bumped[k] += 1e-6 * s[k];
    EXPECT_EQ(*imr_from_distances(bumped) > v, slope > 0.0);
  }
  EXPECT_LT(*imr_from_distances(std::vector<double>{2, 10}), *imr_from_distances(std::vector<double>{1, 10}));
}

TEST(AbstractMixture, ExhaustiveSamplingUsesOpacityWeights) {
  gst::Gen g(2);
  const auto cloud = axis_cloud(g, 9);
  SamplingConfig cfg;
  cfg.target_count = 9;
  cfg.strata_fractions = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto m = abstract_mixture(cloud, CameraDescriptor{}, cfg);
  ASSERT_EQ(m.size(), 9u);
  double total = 0.0;
  for (const auto& p : cloud.primitives) total += p.opacity;
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(m.selected[i], i);
    EXPECT_NEAR(m.weights.weights[i], cloud.primitives[i].opacity / total, 1e-15);
    EXPECT_EQ(m.components[i].mean, cloud.primitives[i].position);
  }
}

TEST(AbstractMixture, StratumQuotasCountedFromOutput) {
  gst::Gen g(3);
  const auto cloud = axis_cloud(g, 30000);
  SamplingConfig cfg;
  const auto m = abstract_mixture(cloud, CameraDescriptor{}, cfg);
  const auto stats = camera_depths(cloud, CameraDescriptor{});
  std::array<std::size_t, 3> counts{};
  for (std::size_t idx : m.selected) ++counts[static_cast<int>(layer_of(stats.depths[idx], stats))];
  EXPECT_EQ(counts[0], 2000u);
  EXPECT_EQ(counts[1], 3000u);
  EXPECT_EQ(counts[2], 5000u);
  EXPECT_TRUE(m.warnings.empty());
}

TEST(AbstractMixture, OverflowIsRedistributedWithWarning) {
  gst::Gen g(4);
  const auto cloud = axis_cloud(g, 30);  // 10 per stratum
  SamplingConfig cfg;
  cfg.target_count = 25;
  cfg.strata_fractions = {0.1, 0.1, 0.8};  // far quota 20 > 10
  const auto m = abstract_mixture(cloud, CameraDescriptor{}, cfg);
  EXPECT_EQ(m.size(), 25u);
  EXPECT_EQ(m.stratum_counts[2], 10u);
  EXPECT_FALSE(m.warnings.empty());
  EXPECT_EQ(std::set<std::size_t>(m.selected.begin(), m.selected.end()).size(), 25u);
}

TEST(AbstractMixture, DeterministicGivenSeedAndSeedMatters) {
  gst::Gen g(5);
  const auto cloud = gst::random_cloud(g, 500);
  SamplingConfig cfg;
  cfg.target_count = 100;
  cfg.seed = 9;
  const auto a = abstract_mixture(cloud, CameraDescriptor{}, cfg);
  const auto b = abstract_mixture(cloud, CameraDescriptor{}, cfg);
  EXPECT_TRUE(identical_mixtures(a, b));
  EXPECT_EQ(a.selected, b.selected);
  cfg.seed = 10;
  EXPECT_NE(abstract_mixture(cloud, CameraDescriptor{}, cfg).selected, a.selected);
}

TEST(AbstractMixture, HighOpacityPrimitivesAreFavoured) {
  gst::Gen g(6);
  auto cloud = axis_cloud(g, 300);
  for (std::size_t i = 0; i < cloud.size(); ++i) cloud.primitives[i].opacity = (i % 2 == 0) ? 0.9 : 0.05;
  SamplingConfig cfg;
  cfg.target_count = 60;
  const auto m = abstract_mixture(cloud, CameraDescriptor{}, cfg);
  std::size_t even = 0;
  for (std::size_t idx : m.selected) even += (idx % 2 == 0);
  EXPECT_GT(even, 45u);
}

TEST(AbstractMixture, ContractAndDataErrors) {
  gst::Gen g(7);
  EXPECT_THROW(abstract_mixture(gst::random_cloud(g, 2), CameraDescriptor{}, SamplingConfig{}), Error);
  SamplingConfig bad;
  bad.strata_fractions = {0.5, 0.5, 0.5};
  EXPECT_THROW(abstract_mixture(gst::random_cloud(g, 10), CameraDescriptor{}, bad), Error);
}

TEST(MixtureDistance, SingleComponentEqualsPairCost) {
  const auto a = hand_mixture({Vec3(0, 0, 0)}, {1.0}, 1.0);
  auto b = hand_mixture({Vec3(1, 2, 2)}, {1.0}, 4.0);
  for (CostKind k : {CostKind::exact, CostKind::taylor_asym, CostKind::taylor_sym}) {
    const double expect = pair_cost(k, prepare(a.components[0]), prepare(b.components[0]));
    EXPECT_NEAR(mixture_distance(a, b, 0.0, k), expect, 1e-12 * expect);
  }
}

TEST(MixtureDistance, SeparatedClustersMatchExactOracle) {
  const auto a = hand_mixture({Vec3(0, 0, 0), Vec3(10, 0, 0), Vec3(0, 10, 0)}, {0.2, 0.3, 0.5});
  const auto b = hand_mixture({Vec3(0.1, 0, 0), Vec3(10, 0.2, 0), Vec3(0, 10, 0.3)}, {0.2, 0.3, 0.5});
  const auto cost = mixture_cost_matrix(a, b, CostKind::taylor_sym);
  const double oracle = exact_ot(cost, a.weights, b.weights).cost;
  const double matched = 0.2 * 0.01 + 0.3 * 0.04 + 0.5 * 0.09;
  EXPECT_NEAR(oracle, matched, 1e-12);
  EXPECT_NEAR(mixture_distance(a, b), oracle, 0.02 * oracle);
}

TEST(MixtureDistance, SelfDistanceWithinEntropicBias) {
  gst::Gen g(8);
  const auto cloud = gst::random_cloud(g, 400);
  SamplingConfig cfg;
  cfg.target_count = 200;
  const auto m = abstract_mixture(cloud, CameraDescriptor{}, cfg);
  MixtureDistanceOptions o;
  const auto shortcut = mixture_distance_detailed(m, m, o);
  EXPECT_TRUE(shortcut.identical);
  EXPECT_EQ(shortcut.value, 0.0);
  EXPECT_GT(shortcut.epsilon, 0.0);
  o.shortcut_identical = false;
  const auto solved = mixture_distance_detailed(m, m, o);
  EXPECT_FALSE(solved.identical);
  EXPECT_GE(solved.value, 0.0);
  EXPECT_LE(solved.value, solved.bias_bound + 1e-6);
  EXPECT_EQ(solved.epsilon, shortcut.epsilon);
}

TEST(MixtureDistance, RigidMotionInvariant) {
  gst::Gen g(9);
  auto c1 = gst::random_cloud(g, 150), c2 = gst::random_cloud(g, 150);
  SamplingConfig cfg;
  cfg.target_count = 80;
  CameraDescriptor cam;
  const double before = mixture_distance(abstract_mixture(c1, cam, cfg), abstract_mixture(c2, cam, cfg), 0.05);

  const Quaternion q = gst::random_unit_quaternion(g);
  const Mat3 r = rotation_matrix(q);
  const Vec3 t = gst::random_vec(g, 3.0);
  auto move = [&](GaussianCloud& c) {
    for (auto& p : c.primitives) {
      p.position = r * p.position + t;
      // Compose rotations: q * p.rotation.
      const auto& b = p.rotation;
      p.rotation = {q[0] * b[0] - q[1] * b[1] - q[2] * b[2] - q[3] * b[3],
                    q[0] * b[1] + q[1] * b[0] + q[2] * b[3] - q[3] * b[2],
                    q[0] * b[2] - q[1] * b[3] + q[2] * b[0] + q[3] * b[1],
                    q[0] * b[3] + q[1] * b[2] - q[2] * b[1] + q[3] * b[0]};
    }
  };
  move(c1);
  move(c2);
  cam.position = t;
  const double after = mixture_distance(abstract_mixture(c1, cam, cfg), abstract_mixture(c2, cam, cfg), 0.05);
  EXPECT_NEAR(after, before, 1e-6 * std::max(1.0, before));
}

TEST(ImrScore, ReportInvariantsAndThreadIndependence) {
  gst::Gen g(10);
  std::vector<MixtureModel> models;
  SamplingConfig cfg;
  cfg.target_count = 60;
  for (int i = 0; i < 4; ++i) models.push_back(abstract_mixture(gst::random_cloud(g, 100), CameraDescriptor{}, cfg));
  const auto r1 = imr_score(models, {}, 1);
  const auto r4 = imr_score(models, {}, 4);
  EXPECT_EQ(r1.pairwise, r4.pairwise);
  EXPECT_EQ(r1.imr, r4.imr);
  std::vector<double> upper;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r1.at(i, i), 0.0);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(r1.at(i, j), r1.at(j, i));
    for (std::size_t j = i + 1; j < 4; ++j) upper.push_back(r1.at(i, j));
  }
  EXPECT_NEAR(r1.imr, *imr_from_distances(upper), 1e-15);
  EXPECT_FALSE(r1.degenerate);
  EXPECT_EQ(r1.sample_size, 60u);
}

TEST(ImrScore, IdenticalModelsGiveSentinel) {
  gst::Gen g(11);
  SamplingConfig cfg;
  cfg.target_count = 30;
  const auto m = abstract_mixture(gst::random_cloud(g, 50), CameraDescriptor{}, cfg);
  const auto r = imr_score({m, m, m});
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(std::isinf(r.imr) && r.imr < 0);
  const auto csv = format_report_csv(r, {"a", "b", "c"});
  EXPECT_NE(csv.find("# imr = -inf"), std::string::npos);
  EXPECT_NE(csv.find("imr_degenerate = true"), std::string::npos);
  EXPECT_THROW(imr_score({m}), Error);
}

TEST(ImrScore, SamplingNoiseIsFiniteAndRelative) {
  gst::Gen g(12);
  const auto a = gst::random_cloud(g, 300), b = gst::random_cloud(g, 300);
  SamplingConfig cfg;
  cfg.target_count = 100;
  const double noise = sampling_noise(a, b, CameraDescriptor{}, cfg, 77);
  EXPECT_GE(noise, 0.0);
  EXPECT_LT(noise, 2.0);
}
