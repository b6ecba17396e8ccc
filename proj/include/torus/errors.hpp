#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace torus {

enum class Errc {
  ZeroVector,
  ZeroPair,
  DimensionMismatch,
  BitWidthMismatch,
  IncompatibleGeometry,
  InvariantViolation,
  Overflow,
  TooFewPoints,
  IndivisibleDimension,
  BatchTooSmall,
  DuplicatePoints,
  EmptySet,
  KTooLarge,
  MissingLabels,
  InsufficientSupport,
  BadMagic,
  TruncatedFile,
  Unsupported,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

/// Every library failure is reported through this type; `code()` identifies
/// the condition and `index()` carries the offending position when one exists
/// (pair index for ZeroPair, row index for InvariantViolation).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::optional<std::size_t> index = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Errc code_;
  std::optional<std::size_t> index_;
};

[[noreturn]] void fail(Errc code, const std::string& what,
                       std::optional<std::size_t> index = std::nullopt);

inline void require_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    fail(Errc::DimensionMismatch,
         std::string(where) + ": dimension " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace torus
