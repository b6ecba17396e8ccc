#pragma once

// Integer distance kernels for quantised vectors.
//
// On the n-bit torus the per-dimension geodesic is min(a - b, b - a) with the
// subtractions wrapping modulo 2^n; for n = 8 this is plain uint8_t arithmetic.

#include <cstdint>
#include <span>

#include "torus/grid_code.hpp"

namespace torus {

/// Sum of per-dimension wrapped distances (p = 1) or of their squares (p = 2).
/// Throws DimensionMismatch, BitWidthMismatch, or Overflow when the 64-bit
/// accumulator could not hold the worst case for this dimension.
std::uint64_t int_torus_distance(const GridCode& a, const GridCode& b, int p);

/// 8-bit fast path over raw bytes. Dispatches to AVX2 when available.
std::uint64_t int_torus_distance_u8(std::span<const std::uint8_t> a,
                                    std::span<const std::uint8_t> b, int p);

/// popcount(a XOR b) over bit-packed words.
std::uint64_t hamming_packed(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

namespace detail {
std::uint64_t torus_u8_l1_scalar(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) noexcept;
std::uint64_t torus_u8_l2sq_scalar(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) noexcept;
bool have_avx2() noexcept;
std::uint64_t torus_u8_l1_avx2(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) noexcept;
std::uint64_t torus_u8_l2sq_avx2(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) noexcept;
}  // namespace detail

}  // namespace torus
