#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "torus/embedding_set.hpp"
#include "torus/geometry.hpp"
#include "test_util.hpp"

using namespace torus;
using torus::testing::normals;
using torus::testing::uniforms;

namespace {

constexpr double kPi = std::numbers::pi;

void expect_near_vec(std::span<const double> got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "at " << i;
}

double pair_norm(std::span<const double> v, std::size_t p) { return std::hypot(v[2 * p], v[2 * p + 1]); }

}  // namespace

TEST(L2Normalize, Examples) {
  expect_near_vec(l2_normalize(EuclideanVec({3, 4})).coords(), {0.6, 0.8}, 1e-15);
  expect_near_vec(l2_normalize(EuclideanVec({1, 0, 0})).coords(), {1, 0, 0}, 0.0);
  EXPECT_ERRC(l2_normalize(EuclideanVec({0, 0})), Errc::ZeroVector);
  EXPECT_ERRC(l2_normalize(EuclideanVec({1e-13, 0})), Errc::ZeroVector);
}

TEST(CliffordProject, Examples) {
  expect_near_vec(clifford_project(EuclideanVec({0})).coords(), {0, 1}, 0.0);
  const double r = std::sqrt(0.5);
  // scalar trig evaluated independently of the library
  expect_near_vec(clifford_project(EuclideanVec({0, kPi / 2})).coords(),
                  {r * std::sin(0.0), r * std::cos(0.0), r * std::sin(kPi / 2), r * std::cos(kPi / 2)}, 1e-15);
  expect_near_vec(clifford_project(EuclideanVec({2 * kPi})).coords(), {0, 1}, 1e-15);
}

TEST(CliffordProject, PeriodicInEachCoordinate) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    auto v = normals(rng, 5, 3.0);
    const auto base = clifford_project(EuclideanVec(v));
    const std::size_t i = static_cast<std::size_t>(t) % v.size();
    v[i] += 2 * kPi;
    expect_near_vec(clifford_project(EuclideanVec(v)).coords(), std::vector<double>(base.coords().begin(), base.coords().end()),
                    1e-9);
  }
}

TEST(L2pProject, Examples) {
  expect_near_vec(l2p_project(EuclideanVec({3, 4})).coords(), {0.6, 0.8}, 1e-15);
  const double s = std::sqrt(2.0 / 4.0);
  expect_near_vec(l2p_project(EuclideanVec({3, 4, 0, 5})).coords(), {s * 0.6, s * 0.8, 0, s}, 1e-15);
  try {
    (void)l2p_project(EuclideanVec({1, 0, 0, 0}));
    FAIL() << "expected ZeroPair";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroPair);
    ASSERT_TRUE(e.index().has_value());
    EXPECT_EQ(*e.index(), 1u);
  }
  EXPECT_ERRC(l2p_project(EuclideanVec({1, 2, 3})), Errc::DimensionMismatch);
}

TEST(L2pProject, IdentityOnCliffordInputs) {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    const auto c = l2p_project(EuclideanVec(normals(rng, 8)));
    const auto again = l2p_project(EuclideanVec(std::vector<double>(c.coords().begin(), c.coords().end())));
    expect_near_vec(again.coords(), std::vector<double>(c.coords().begin(), c.coords().end()), 1e-9);
  }
}

TEST(FlatClifford, Examples) {
  expect_near_vec(clifford_to_flat(CliffordVec({0, 1})).coords(), {0}, 0.0);
  expect_near_vec(clifford_to_flat(CliffordVec({1, 0})).coords(), {0.25}, 1e-15);
  const auto c = clifford_project(EuclideanVec({0, kPi / 2}));
  expect_near_vec(clifford_to_flat(c).coords(), {0, 0.25}, 1e-12);
  expect_near_vec(flat_to_clifford(FlatTorusVec({0})).coords(), {0, 1}, 0.0);
  expect_near_vec(flat_to_clifford(FlatTorusVec({0.5})).coords(), {0, -1}, 1e-15);
}

TEST(FlatClifford, BranchCutMapsIntoUnitInterval) {
  // atan2 returns pi at (0, -1) and values just below 0 near the cut
  const auto half = clifford_to_flat(CliffordVec({0.0, -1.0}));
  EXPECT_DOUBLE_EQ(half[0], 0.5);
  const auto near_one = clifford_to_flat(CliffordVec({-1e-18, 1.0}));
  EXPECT_GE(near_one[0], 0.0);
  EXPECT_LT(near_one[0], 1.0);
}

TEST(FlatClifford, RoundTrips) {
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    const auto f = uniforms(rng, 6);
    const auto back = clifford_to_flat(flat_to_clifford(FlatTorusVec(f)));
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double d = std::abs(back[i] - f[i]);
      EXPECT_LE(std::min(d, 1.0 - d), 1e-9);
    }
    const auto c = l2p_project(EuclideanVec(normals(rng, 6)));
    const auto c2 = flat_to_clifford(clifford_to_flat(c));
    expect_near_vec(c2.coords(), std::vector<double>(c.coords().begin(), c.coords().end()), 1e-9);
  }
}

TEST(Invariants, ProjectionsSatisfyClifford) {
  Rng rng(9);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t d = 1 + rng.below(12);
    const auto c = clifford_project(EuclideanVec(normals(rng, d, 10.0)));
    ASSERT_EQ(c.pairs(), d);
    ASSERT_EQ(c.dim(), 2 * d);
    double total = 0.0;
    for (std::size_t p = 0; p < c.pairs(); ++p) {
      EXPECT_NEAR(pair_norm(c.coords(), p), std::sqrt(1.0 / static_cast<double>(d)), 1e-9);
      total += c[2 * p] * c[2 * p] + c[2 * p + 1] * c[2 * p + 1];
    }
    EXPECT_NEAR(std::sqrt(total), 1.0, 1e-9);

    const auto n = l2p_project(EuclideanVec(normals(rng, 2 * d)));
    ASSERT_EQ(n.pairs(), d);
    ASSERT_EQ(n.dim(), 2 * d);
    EXPECT_TRUE(is_clifford(n.coords()));
  }
}

TEST(Types, ConstructorsValidate) {
  EXPECT_ERRC(SphereVec({1, 1}), Errc::InvariantViolation);
  EXPECT_ERRC(FlatTorusVec({1.0}), Errc::InvariantViolation);
  EXPECT_ERRC(FlatTorusVec({-0.1}), Errc::InvariantViolation);
  EXPECT_ERRC(CliffordVec({1, 0, 0, 0}), Errc::InvariantViolation);
  EXPECT_ERRC(EuclideanVec({std::nan("")}), Errc::InvariantViolation);
  EXPECT_NO_THROW(CliffordVec({std::sqrt(0.5), 0, 0, std::sqrt(0.5)}));
}

TEST(EmbeddingSetOps, ProjectEnforcesInputGeometry) {
  const EmbeddingSet raw = make_set(Geometry::Euclidean, 2, {3, 4, 1, 0}, std::vector<Label>{0, 1});
  const EmbeddingSet sphere = project_set(raw, Projection::L2);
  EXPECT_EQ(sphere.geometry, Geometry::Hypersphere);
  EXPECT_NEAR(sphere.data[0], 0.6, 1e-15);
  EXPECT_ERRC(project_set(sphere, Projection::L2p), Errc::IncompatibleGeometry);

  const EmbeddingSet cliff = project_set(raw, Projection::Clifford);
  EXPECT_EQ(cliff.dim, 4u);
  const EmbeddingSet flat = project_set(cliff, Projection::ToFlat);
  EXPECT_EQ(flat.dim, 2u);
  EXPECT_EQ(flat.geometry, Geometry::FlatTorus);
  const EmbeddingSet lifted = project_set(flat, Projection::ToClifford);
  for (std::size_t i = 0; i < lifted.data.size(); ++i) EXPECT_NEAR(lifted.data[i], cliff.data[i], 1e-9);
  ASSERT_TRUE(lifted.labels.has_value());
  EXPECT_EQ(*lifted.labels, (std::vector<Label>{0, 1}));
}

TEST(EmbeddingSetOps, ValidateReportsFirstBadRow) {
  EmbeddingSet s{Geometry::Hypersphere, 2, {1, 0, 0, 1, 2, 0}, std::nullopt};
  try {
    s.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvariantViolation);
    EXPECT_EQ(e.index().value_or(99), 2u);
  }
}
