#pragma once

#include <cstdint>
#include <vector>

namespace torus {

/// One grid-quantised vector: d codes, each in [0, 2^bits).
struct GridCode {
  std::vector<std::uint16_t> codes;
  unsigned bits = 8;

  std::size_t dim() const noexcept { return codes.size(); }
  friend bool operator==(const GridCode&, const GridCode&) = default;
};

/// Throws InvariantViolation unless 1 <= bits <= 16 and every code < 2^bits.
void validate(const GridCode& code);

}  // namespace torus
