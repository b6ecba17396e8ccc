#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "torus/embedding_set.hpp"
#include "torus/geometry.hpp"
#include "torus/metrics.hpp"
#include "test_util.hpp"

using namespace torus;
using torus::testing::uniforms;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST(Cosine, Examples) {
  const SphereVec a({0.6, 0.8});
  EXPECT_NEAR(cosine_distance(a, a), 0.0, 1e-15);
  EXPECT_NEAR(cosine_distance(a, SphereVec({-0.6, -0.8})), 2.0, 1e-15);
  EXPECT_NEAR(cosine_distance(CliffordVec({0, 1}), CliffordVec({1, 0})), 1.0, 0.0);
  const std::vector<double> x{1, 0}, y{1, 0, 0};
  EXPECT_ERRC(cosine_distance(x, y), Errc::DimensionMismatch);
}

TEST(FlatTorusDistance, Examples) {
  EXPECT_NEAR(flat_torus_distance(FlatTorusVec({0.1}), FlatTorusVec({0.9}), 1), 0.2, 1e-15);
  // both directions per dimension, smallest kept
  const double d0 = std::min(0.5, 1.0 - 0.5);
  EXPECT_NEAR(flat_torus_distance(FlatTorusVec({0.0, 0.0}), FlatTorusVec({0.5, 0.5}), 2), std::sqrt(2 * d0 * d0), 1e-15);
  EXPECT_EQ(flat_torus_distance(FlatTorusVec({0.3, 0.7}), FlatTorusVec({0.3, 0.7}), 1), 0.0);
  const std::vector<double> x{0.1}, y{0.1, 0.2};
  EXPECT_ERRC(flat_torus_distance(x, y, 1), Errc::DimensionMismatch);
}

TEST(FlatTorusDistance, MetricAxioms) {
  Rng rng(21);
  for (int t = 0; t < 2000; ++t) {
    const auto a = uniforms(rng, 4), b = uniforms(rng, 4), c = uniforms(rng, 4);
    for (int p : {1, 2}) {
      const double ab = flat_torus_distance(a, b, p), ba = flat_torus_distance(b, a, p);
      EXPECT_EQ(ab, ba);
      EXPECT_EQ(flat_torus_distance(a, a, p), 0.0);
      EXPECT_GE(ab, 0.0);
      EXPECT_LE(ab, flat_torus_distance(a, c, p) + flat_torus_distance(c, b, p) + 1e-12);
    }
  }
}

TEST(FlatTorusDistance, SquaredMatchesL2) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto a = uniforms(rng, 7), b = uniforms(rng, 7);
    EXPECT_NEAR(flat_torus_distance_squared(a, b), std::pow(flat_torus_distance(a, b, 2), 2), 1e-12);
  }
}

TEST(CcNorm, Examples) {
  EXPECT_EQ(cc_norm(FlatTorusVec({0.0})), 0.0);
  EXPECT_NEAR(cc_norm(FlatTorusVec({0.5, 0.5, 0.5})), 6.0, 1e-12);
  EXPECT_NEAR(cc_norm(FlatTorusVec({0.25})), 1.0, 1e-15);
}

TEST(CcNorm, MatchesCosineDistanceToOrigin) {
  // D - sum cos(2 pi a) against the Clifford cosine distance from the origin;
  // with pair radius sqrt(1/D) the two differ by exactly the factor D
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const FlatTorusVec a(uniforms(rng, 5));
    const FlatTorusVec origin(std::vector<double>(5, 0.0));
    const double direct = 5.0 - [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < 5; ++i) s += std::cos(kTwoPi * a[i]);
      return s;
    }();
    EXPECT_NEAR(cc_norm(a), direct, 1e-12);
    EXPECT_NEAR(cc_norm(a), 5.0 * cosine_distance(flat_to_clifford(a), flat_to_clifford(origin)), 1e-12);
  }
}

TEST(CcNorm, QuadraticNearOrigin) {
  Rng rng(6);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> a(8);
    double quad = 0.0;
    for (auto& x : a) {
      // angle 2 pi a within [-1e-3, 1e-3] radians, folded into [0, 1)
      const double angle = (2.0 * rng.uniform() - 1.0) * 1e-3;
      quad += angle * angle / 2.0;
      x = wrap_unit(angle / kTwoPi);
    }
    if (quad == 0.0) continue;
    const double ratio = cc_norm(a) / quad;
    EXPECT_GE(ratio, 0.999);
    EXPECT_LE(ratio, 1.001);
  }
}

TEST(CcNorm, LinearNearMidpoint) {
  Rng rng(8);
  const std::vector<double> mid(8, 0.25);
  const double base = cc_norm(mid);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> a(mid);
    double linear = 0.0;
    for (auto& x : a) {
      const double delta = (2.0 * rng.uniform() - 1.0) * 1e-3;
      x += delta;
      // d/da (1 - cos 2 pi a) at a = 1/4 is 2 pi
      linear += kTwoPi * delta;
    }
    // the remainder is cubic in delta; draws whose linear terms nearly cancel say nothing
    if (std::abs(linear) < 1e-3) continue;
    const double dev = cc_norm(a) - base;
    const double rel = std::abs(dev - linear) / std::abs(linear);
    EXPECT_LE(rel, 1e-3) << "deviation " << dev << " vs linear " << linear;
  }
}

TEST(CrossModule, CosineEqualsFlatCompositionOverPairs) {
  Rng rng(10);
  for (int t = 0; t < 500; ++t) {
    const std::size_t p = 1 + rng.below(9);
    const auto a = uniforms(rng, p), b = uniforms(rng, p);
    double s = 0.0;
    for (std::size_t i = 0; i < p; ++i) s += 1.0 - std::cos(kTwoPi * (a[i] - b[i]));
    const double cos_d = cosine_distance(flat_to_clifford(FlatTorusVec(a)), flat_to_clifford(FlatTorusVec(b)));
    EXPECT_NEAR(cos_d, s / static_cast<double>(p), 1e-12);
  }
}

TEST(Pairwise, Examples) {
  const auto one = pairwise_distances(make_set(Geometry::FlatTorus, 2, {0.1, 0.2}), DistanceKind::FlatTorusL1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one(0, 0), 0.0);

  const auto same = pairwise_distances(make_set(Geometry::Hypersphere, 2, {0.6, 0.8, 0.6, 0.8}), DistanceKind::CosineClifford);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(same(i, j), 0.0);
  }

  const EmbeddingSet three = make_set(Geometry::FlatTorus, 2, {0.1, 0.9, 0.5, 0.5, 0.95, 0.05});
  const auto m = pairwise_distances(three, DistanceKind::FlatTorusL1);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(m(i, j), flat_torus_distance(three.row(i), three.row(j), 1));
      EXPECT_EQ(m(i, j), m(j, i));
    }
  }
  EXPECT_ERRC(pairwise_distances(three, DistanceKind::CosineClifford), Errc::IncompatibleGeometry);
  EXPECT_ERRC(pairwise_distances(three, DistanceKind::Hamming), Errc::IncompatibleGeometry);
}

TEST(Simulation, OneDimensionalFlatMean) {
  const auto h = distance_distribution_sim(Geometry::FlatTorus, DistanceKind::FlatTorusL1, 1, 20000, 3);
  // per-dimension geodesic of a uniform pair is Uniform(0, 1/2): normalised mean 1/2, std 1/sqrt(12)
  EXPECT_NEAR(h.mean, 0.5, 0.01);
  EXPECT_NEAR(h.stddev, 1.0 / std::sqrt(12.0), 0.01);
  std::uint64_t total = 0;
  for (auto c : h.counts) total += c;
  EXPECT_EQ(total, 20000u);
}

TEST(Simulation, DeterministicSinglePair) {
  for (Geometry g : {Geometry::Hypersphere, Geometry::FlatTorus, Geometry::Clifford}) {
    const DistanceKind k = g == Geometry::FlatTorus ? DistanceKind::FlatTorusL2 : DistanceKind::CosineClifford;
    const auto a = distance_distribution_sim(g, k, 4, 1, 77);
    const auto b = distance_distribution_sim(g, k, 4, 1, 77);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.counts, b.counts);
    std::ostringstream sa, sb;
    write_histogram_csv(sa, a);
    write_histogram_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
  }
}

TEST(Simulation, StdShrinksWithDimension) {
  for (auto [g, k] : {std::pair{Geometry::Hypersphere, DistanceKind::CosineClifford},
                      std::pair{Geometry::FlatTorus, DistanceKind::FlatTorusL2}}) {
    double prev = 1e9;
    for (std::size_t d : {2u, 16u, 128u}) {
      const double s = distance_distribution_sim(g, k, d, 5000, 1).stddev;
      EXPECT_LT(s, prev);
      prev = s;
    }
  }
}

TEST(Simulation, HistogramCsvShape) {
  const auto h = distance_distribution_sim(Geometry::FlatTorus, DistanceKind::FlatTorusL1, 2, 100, 1, 4);
  std::ostringstream os;
  write_histogram_csv(os, h);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "bin_left,bin_right,count");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 4);
}
