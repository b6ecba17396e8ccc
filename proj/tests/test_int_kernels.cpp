#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "torus/int_kernels.hpp"
#include "torus/metrics.hpp"
#include "torus/quantization.hpp"
#include "test_util.hpp"

using namespace torus;

namespace {

GridCode code8(std::vector<std::uint16_t> c) { return {std::move(c), 8}; }

std::vector<std::uint8_t> random_bytes(Rng& rng, std::size_t n) {
  std::vector<std::uint8_t> v(n);
  for (auto& x : v) x = static_cast<std::uint8_t>(rng.below(256));
  return v;
}

// Reference wrapped distance computed with signed arithmetic and explicit modulo.
std::uint64_t reference(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b, int p) {
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int diff = ((int(a[i]) - int(b[i])) % 256 + 256) % 256;
    const std::uint64_t d = static_cast<std::uint64_t>(std::min(diff, 256 - diff));
    acc += p == 1 ? d : d * d;
  }
  return acc;
}

}  // namespace

TEST(IntTorusDistance, Examples) {
  EXPECT_EQ(int_torus_distance(code8({250}), code8({5}), 1), 11u);
  EXPECT_EQ(int_torus_distance(code8({0}), code8({128}), 1), 128u);
  EXPECT_EQ(int_torus_distance(code8({17, 200}), code8({17, 200}), 1), 0u);
  EXPECT_EQ(int_torus_distance(code8({250, 0}), code8({5, 128}), 2), 11u * 11u + 128u * 128u);
}

TEST(IntTorusDistance, Errors) {
  EXPECT_ERRC(int_torus_distance(code8({1, 2}), code8({1}), 1), Errc::DimensionMismatch);
  EXPECT_ERRC(int_torus_distance(code8({1}), GridCode{{1}, 4}, 1), Errc::BitWidthMismatch);
  EXPECT_ERRC(int_torus_distance(code8({1}), code8({1}), 3), Errc::Unsupported);
  const std::vector<std::uint8_t> a(3), b(4);
  EXPECT_ERRC(int_torus_distance_u8(a, b, 1), Errc::DimensionMismatch);
}

TEST(IntTorusDistance, PerDimensionNeverExceedsHalfRange) {
  Rng rng(1);
  for (unsigned bits = 1; bits <= 16; ++bits) {
    const std::uint32_t range = 1u << bits;
    for (int t = 0; t < 200; ++t) {
      const GridCode a{{static_cast<std::uint16_t>(rng.below(range))}, bits};
      const GridCode b{{static_cast<std::uint16_t>(rng.below(range))}, bits};
      EXPECT_LE(int_torus_distance(a, b, 1), range / 2);
    }
  }
}

TEST(IntTorusDistance, MatchesFloatPathForAllWidths) {
  Rng rng(2);
  for (unsigned bits : {1u, 2u, 5u, 8u, 12u, 16u}) {
    const double scale = static_cast<double>(1u << bits);
    for (int t = 0; t < 100; ++t) {
      GridCode a{std::vector<std::uint16_t>(9), bits}, b{std::vector<std::uint16_t>(9), bits};
      for (std::size_t i = 0; i < 9; ++i) {
        a.codes[i] = static_cast<std::uint16_t>(rng.below(1u << bits));
        b.codes[i] = static_cast<std::uint16_t>(rng.below(1u << bits));
      }
      const auto fa = grid_dequantize(a, Geometry::FlatTorus), fb = grid_dequantize(b, Geometry::FlatTorus);
      EXPECT_NEAR(static_cast<double>(int_torus_distance(a, b, 1)) / scale, flat_torus_distance(fa, fb, 1), 1e-12);
      EXPECT_NEAR(static_cast<double>(int_torus_distance(a, b, 2)) / (scale * scale),
                  flat_torus_distance_squared(fa, fb), 1e-12);
    }
  }
}

TEST(U8Kernels, ScalarMatchesReference) {
  Rng rng(3);
  for (std::size_t n : {0u, 1u, 7u, 31u, 32u, 33u, 64u, 100u, 513u}) {
    const auto a = random_bytes(rng, n), b = random_bytes(rng, n);
    EXPECT_EQ(detail::torus_u8_l1_scalar(a.data(), b.data(), n), reference(a, b, 1));
    EXPECT_EQ(detail::torus_u8_l2sq_scalar(a.data(), b.data(), n), reference(a, b, 2));
  }
}

TEST(U8Kernels, SimdMatchesScalar) {
  if (!detail::have_avx2()) GTEST_SKIP() << "AVX2 not available";
  Rng rng(4);
  for (std::size_t n = 0; n < 300; ++n) {
    const auto a = random_bytes(rng, n), b = random_bytes(rng, n);
    EXPECT_EQ(detail::torus_u8_l1_avx2(a.data(), b.data(), n), detail::torus_u8_l1_scalar(a.data(), b.data(), n));
    EXPECT_EQ(detail::torus_u8_l2sq_avx2(a.data(), b.data(), n), detail::torus_u8_l2sq_scalar(a.data(), b.data(), n));
  }
  // worst case: every lane at the antipode
  std::vector<std::uint8_t> zeros(4096, 0), halves(4096, 128);
  EXPECT_EQ(detail::torus_u8_l1_avx2(zeros.data(), halves.data(), 4096), 4096u * 128u);
  EXPECT_EQ(detail::torus_u8_l2sq_avx2(zeros.data(), halves.data(), 4096), 4096u * 128u * 128u);
}

TEST(U8Kernels, DispatchMatchesGeneric) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(200);
    const auto a = random_bytes(rng, n), b = random_bytes(rng, n);
    GridCode ga{std::vector<std::uint16_t>(a.begin(), a.end()), 8}, gb{std::vector<std::uint16_t>(b.begin(), b.end()), 8};
    for (int p : {1, 2}) EXPECT_EQ(int_torus_distance_u8(a, b, p), int_torus_distance(ga, gb, p));
  }
}

TEST(Hamming, PackedPopcount) {
  const GridCode a{{0, 1, 1, 0}, 1}, b{{1, 1, 0, 0}, 1};
  EXPECT_EQ(hamming_distance(a, b), 2u);
  EXPECT_EQ(hamming_distance(a, a), 0u);
  std::vector<std::uint16_t> ones(130, 1), zeros(130, 0);
  EXPECT_EQ(hamming_distance(GridCode{ones, 1}, GridCode{zeros, 1}), 130u);
  EXPECT_ERRC(hamming_distance(GridCode{{0, 1}, 1}, GridCode{{0}, 1}), Errc::DimensionMismatch);
  EXPECT_ERRC(hamming_distance(GridCode{{0}, 8}, GridCode{{0}, 8}), Errc::BitWidthMismatch);
}

TEST(Hamming, OneBitTorusDistanceEqualsHamming) {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    GridCode a{std::vector<std::uint16_t>(70), 1}, b{std::vector<std::uint16_t>(70), 1};
    for (std::size_t i = 0; i < 70; ++i) {
      a.codes[i] = static_cast<std::uint16_t>(rng.below(2));
      b.codes[i] = static_cast<std::uint16_t>(rng.below(2));
    }
    EXPECT_EQ(int_torus_distance(a, b, 1), hamming_distance(a, b));
    EXPECT_EQ(int_torus_distance(a, b, 2), hamming_distance(a, b));
  }
}
