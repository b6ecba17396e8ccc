#include "torus/int_kernels.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <string>

#include "torus/errors.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define TORUS_X86_DISPATCH 1
#include <immintrin.h>
#endif

namespace torus {

void validate(const GridCode& code) {
  if (code.bits < 1 || code.bits > 16) {
    fail(Errc::InvariantViolation, "grid bit width must be in 1..16, got " + std::to_string(code.bits));
  }
  const std::uint32_t limit = 1u << code.bits;
  for (std::size_t i = 0; i < code.codes.size(); ++i) {
    if (code.codes[i] >= limit) {
      fail(Errc::InvariantViolation, "code " + std::to_string(code.codes[i]) + " out of range", i);
    }
  }
}

namespace {

void check_accumulator(std::size_t dims, unsigned bits, int p) {
  const std::uint64_t max_delta = std::uint64_t{1} << (bits - 1);
  const std::uint64_t per_dim = p == 1 ? max_delta : max_delta * max_delta;
  if (dims != 0 && per_dim > std::numeric_limits<std::uint64_t>::max() / dims) {
    fail(Errc::Overflow, "accumulator cannot hold " + std::to_string(dims) + " dims at " +
                             std::to_string(bits) + " bits");
  }
}

void check_p(int p) {
  if (p != 1 && p != 2) fail(Errc::Unsupported, "integer distance supports p = 1 or 2");
}

}  // namespace

std::uint64_t int_torus_distance(const GridCode& a, const GridCode& b, int p) {
  check_p(p);
  require_same_dim(a.dim(), b.dim(), "int_torus_distance");
  if (a.bits != b.bits) fail(Errc::BitWidthMismatch, "grid codes use different bit widths");
  check_accumulator(a.dim(), a.bits, p);
  const std::uint32_t mask = (1u << a.bits) - 1u;
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const std::uint32_t x = a.codes[i];
    const std::uint32_t y = b.codes[i];
    const std::uint64_t d = std::min((x - y) & mask, (y - x) & mask);
    acc += p == 1 ? d : d * d;
  }
  return acc;
}

namespace detail {

std::uint64_t torus_u8_l1_scalar(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) noexcept {
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t ab = static_cast<std::uint8_t>(a[i] - b[i]);
    const std::uint8_t ba = static_cast<std::uint8_t>(b[i] - a[i]);
    acc += std::min(ab, ba);
  }
  return acc;
}

std::uint64_t torus_u8_l2sq_scalar(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) noexcept {
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t ab = static_cast<std::uint8_t>(a[i] - b[i]);
    const std::uint8_t ba = static_cast<std::uint8_t>(b[i] - a[i]);
    const std::uint32_t d = std::min(ab, ba);
    acc += d * d;
  }
  return acc;
}

#ifdef TORUS_X86_DISPATCH

bool have_avx2() noexcept { return __builtin_cpu_supports("avx2"); }

__attribute__((target("avx2"))) std::uint64_t torus_u8_l1_avx2(const std::uint8_t* a,
                                                               const std::uint8_t* b,
                                                               std::size_t n) noexcept {
  const __m256i zero = _mm256_setzero_si256();
  __m256i acc = zero;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    const __m256i d = _mm256_min_epu8(_mm256_sub_epi8(va, vb), _mm256_sub_epi8(vb, va));
    // sad against zero sums each 8-byte group into a 64-bit lane
    acc = _mm256_add_epi64(acc, _mm256_sad_epu8(d, zero));
  }
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3] + torus_u8_l1_scalar(a + i, b + i, n - i);
}

__attribute__((target("avx2"))) std::uint64_t torus_u8_l2sq_avx2(const std::uint8_t* a,
                                                                 const std::uint8_t* b,
                                                                 std::size_t n) noexcept {
  const __m256i zero = _mm256_setzero_si256();
  __m256i acc = zero;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    const __m256i d = _mm256_min_epu8(_mm256_sub_epi8(va, vb), _mm256_sub_epi8(vb, va));
    const __m256i lo = _mm256_unpacklo_epi8(d, zero);
    const __m256i hi = _mm256_unpackhi_epi8(d, zero);
    // each 32-bit lane holds at most 4 * 128^2 = 65536
    const __m256i sq = _mm256_add_epi32(_mm256_madd_epi16(lo, lo), _mm256_madd_epi16(hi, hi));
    acc = _mm256_add_epi64(acc, _mm256_unpacklo_epi32(sq, zero));
    acc = _mm256_add_epi64(acc, _mm256_unpackhi_epi32(sq, zero));
  }
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3] + torus_u8_l2sq_scalar(a + i, b + i, n - i);
}

#else

bool have_avx2() noexcept { return false; }

std::uint64_t torus_u8_l1_avx2(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) noexcept {
  return torus_u8_l1_scalar(a, b, n);
}

std::uint64_t torus_u8_l2sq_avx2(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) noexcept {
  return torus_u8_l2sq_scalar(a, b, n);
}

#endif

}  // namespace detail

std::uint64_t int_torus_distance_u8(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                                    int p) {
  check_p(p);
  require_same_dim(a.size(), b.size(), "int_torus_distance_u8");
  check_accumulator(a.size(), 8, p);
  static const bool avx2 = detail::have_avx2();
  if (p == 1) {
    return avx2 ? detail::torus_u8_l1_avx2(a.data(), b.data(), a.size())
                : detail::torus_u8_l1_scalar(a.data(), b.data(), a.size());
  }
  return avx2 ? detail::torus_u8_l2sq_avx2(a.data(), b.data(), a.size())
              : detail::torus_u8_l2sq_scalar(a.data(), b.data(), a.size());
}

std::uint64_t hamming_packed(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  require_same_dim(a.size(), b.size(), "hamming_packed");
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<std::uint64_t>(std::popcount(a[i] ^ b[i]));
  return acc;
}

}  // namespace torus
