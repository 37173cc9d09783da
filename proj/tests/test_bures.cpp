// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace gsrobust;

namespace {

GaussianComponent iso(double var, Vec3 mean = Vec3::Zero()) { return {mean, var * Mat3::Identity()}; }

}  // namespace

TEST(W2Exact, HandExamples) {
  EXPECT_NEAR(w2_exact(iso(1.0), iso(1.0, Vec3(1, 2, 2))), 9.0, 1e-12);
  EXPECT_NEAR(w2_exact(iso(4.0), iso(1.0)), 3.0, 1e-12);
  gst::Gen g(1);
  const GaussianComponent a{gst::random_vec(g), gst::random_spd(g)};
  EXPECT_NEAR(w2_exact(a, a), 0.0, 1e-9);
}

TEST(W2Exact, MatchesJacobiOracle) {
  gst::Gen g(2);
  for (int t = 0; t < 500; ++t) {
    const GaussianComponent a{gst::random_vec(g), gst::random_spd(g)};
    const GaussianComponent b{gst::random_vec(g), gst::random_spd(g)};
    const double oracle = gst::oracle_w2_exact(a.mean, a.covariance, b.mean, b.covariance);
    EXPECT_NEAR(w2_exact(a, b), std::max(0.0, oracle), 1e-9 * std::max(1.0, oracle));
  }
}

TEST(W2Exact, DiagonalCaseMatchesPerAxisFormula) {
  gst::Gen g(3);
  for (int t = 0; t < 200; ++t) {
    const Mat3 r = rotation_matrix(gst::random_unit_quaternion(g));
    Vec3 l1, l2;
    for (int k = 0; k < 3; ++k) {
      l1[k] = gst::uniform(g, 0.01, 5);
      l2[k] = gst::uniform(g, 0.01, 5);
    }
    const GaussianComponent a{gst::random_vec(g), r * l1.asDiagonal() * r.transpose()};
    const GaussianComponent b{gst::random_vec(g), r * l2.asDiagonal() * r.transpose()};
    double expect = (a.mean - b.mean).squaredNorm();
    for (int k = 0; k < 3; ++k) expect += std::pow(std::sqrt(l1[k]) - std::sqrt(l2[k]), 2);
    GaussianComponent as = a, bs = b;
    as.covariance = 0.5 * (a.covariance + a.covariance.transpose());
    bs.covariance = 0.5 * (b.covariance + b.covariance.transpose());
    EXPECT_NEAR(w2_exact(as, bs), expect, 1e-9 * std::max(1.0, expect));
  }
}

TEST(W2Exact, RotationEquivariant) {
  gst::Gen g(4);
  for (int t = 0; t < 200; ++t) {
    const GaussianComponent a{gst::random_vec(g), gst::random_spd(g)};
    const GaussianComponent b{gst::random_vec(g), gst::random_spd(g)};
    const Mat3 r = rotation_matrix(gst::random_unit_quaternion(g));
    auto turn = [&](const GaussianComponent& c) {
      Mat3 s = r * c.covariance * r.transpose();
      return GaussianComponent{r * c.mean, 0.5 * (s + s.transpose())};
    };
    const double base = w2_exact(a, b);
    EXPECT_NEAR(w2_exact(turn(a), turn(b)), base, 1e-9 * std::max(1.0, base));
    const double tb = w2_taylor(a, b);
    EXPECT_NEAR(w2_taylor(turn(a), turn(b)), tb, 1e-9 * std::max(1.0, tb));
  }
}

TEST(W2Exact, NonSpdIsContractError) {
  GaussianComponent bad{Vec3::Zero(), Vec3(1, 1, -1).asDiagonal()};
  try {
    w2_exact(bad, iso(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::contract);
  }
}

TEST(W2Taylor, HandExamples) {
  const GaussianComponent a{Vec3(0.3, -1, 2), 2.0 * Mat3::Identity()};
  EXPECT_EQ(w2_taylor(a, a), 0.0);
  EXPECT_NEAR(w2_taylor(iso(1.2), iso(1.0)), 0.03, 1e-15);
  EXPECT_NEAR(w2_taylor(iso(4.0), iso(1.0)), 6.75, 1e-12);
  EXPECT_NEAR(w2_taylor(iso(1.0), iso(4.0)), 1.6875, 1e-12);
  // Symmetrized: the two orderings above average to 4.21875.
  EXPECT_NEAR(w2_taylor_sym(iso(4.0), iso(1.0)), 4.21875, 1e-12);
}

TEST(W2Taylor, MatchesCofactorOracle) {
  gst::Gen g(6);
  for (int t = 0; t < 500; ++t) {
    const GaussianComponent a{gst::random_vec(g), gst::random_spd(g)};
    const GaussianComponent b{gst::random_vec(g), gst::random_spd(g)};
    const double oracle = gst::oracle_w2_taylor(a.mean, a.covariance, b.mean, b.covariance);
    EXPECT_NEAR(w2_taylor(a, b), oracle, 1e-9 * std::max(1.0, oracle));
    EXPECT_GE(w2_taylor(a, b), 0.0);
  }
}

TEST(W2Taylor, SymmetrizedIsSymmetricAndReducesToMeanTerm) {
  gst::Gen g(7);
  for (int t = 0; t < 200; ++t) {
    const GaussianComponent a{gst::random_vec(g), gst::random_spd(g)};
    const GaussianComponent b{gst::random_vec(g), gst::random_spd(g)};
    EXPECT_EQ(w2_taylor_sym(a, b), w2_taylor_sym(b, a));
    const GaussianComponent c{gst::random_vec(g), a.covariance};
    EXPECT_EQ(w2_taylor_sym(a, c), (a.mean - c.mean).squaredNorm());
  }
}

TEST(W2Taylor, NearSingularReferenceIsNumericError) {
  GaussianComponent thin{Vec3::Zero(), Vec3(1, 1, 1e-13).asDiagonal()};
  try {
    w2_taylor(iso(1.0), thin);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
  // Only the reference covariance is inverted.
  EXPECT_NO_THROW(w2_taylor(thin, iso(1.0)));
}

// Delta commuting with Sigma_2: the expansion about the identity is exact to
// third order, so halving the step cuts the error by about 8.
TEST(W2Taylor, RemainderIsCubicWhenDeltaCommutes) {
  gst::Gen g(8);
  int good = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const Mat3 r = rotation_matrix(gst::random_unit_quaternion(g));
    const Vec3 l(gst::uniform(g, 0.5, 2), gst::uniform(g, 0.5, 2), gst::uniform(g, 0.5, 2));
    Vec3 d(gst::normal(g), gst::normal(g), gst::normal(g));
    d /= d.norm();
    const Mat3 s2 = r * l.asDiagonal() * r.transpose();
    const Mat3 d0 = r * d.asDiagonal() * r.transpose();
    auto err = [&](double step) {
      const GaussianComponent a{Vec3::Zero(), 0.5 * (s2 + step * d0 + (s2 + step * d0).transpose())};
      const GaussianComponent b{Vec3::Zero(), 0.5 * (s2 + s2.transpose())};
      return std::abs(w2_taylor(a, b) - w2_exact(a, b));
    };
    const double ratio = err(0.02) / err(0.01);
    if (ratio >= 6.0 && ratio <= 10.0) ++good;
  }
  EXPECT_GE(good, trials * 9 / 10);
}

// With an anisotropic Sigma_2 and a generic Delta the quadratic terms differ
// (the Taylor form weights off-diagonal entries by the arithmetic mean of
// 1/lambda, the exact one by the harmonic mean), so the error halves as ~4.
TEST(W2Taylor, GeneralRemainderIsSecondOrder) {
  gst::Gen g(9);
  std::vector<double> ratios;
  for (int t = 0; t < 200; ++t) {
    const Mat3 s2 = gst::random_spd(g, 0.5, 2.0);
    Mat3 d0 = gst::random_symmetric(g);
    d0 /= d0.norm();
    auto err = [&](double step) {
      const GaussianComponent a{Vec3::Zero(), s2 + step * d0}, b{Vec3::Zero(), s2};
      return std::abs(w2_taylor(a, b) - w2_exact(a, b));
    };
    ratios.push_back(err(0.002) / err(0.001));
  }
  std::nth_element(ratios.begin(), ratios.begin() + 100, ratios.end());
  EXPECT_NEAR(ratios[100], 4.0, 0.5);
}

TEST(CostKindNames, RoundTripText) {
  EXPECT_EQ(to_string(CostKind::taylor_sym), "taylor-sym");
  EXPECT_EQ(to_string(CostKind::taylor_asym), "taylor");
  EXPECT_EQ(to_string(CostKind::exact), "exact");
}
