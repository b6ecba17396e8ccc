#include "torus/errors.hpp"

namespace torus {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::ZeroPair: return "ZeroPair";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::BitWidthMismatch: return "BitWidthMismatch";
    case Errc::IncompatibleGeometry: return "IncompatibleGeometry";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::Overflow: return "Overflow";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::IndivisibleDimension: return "IndivisibleDimension";
    case Errc::BatchTooSmall: return "BatchTooSmall";
    case Errc::DuplicatePoints: return "DuplicatePoints";
    case Errc::EmptySet: return "EmptySet";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::MissingLabels: return "MissingLabels";
    case Errc::InsufficientSupport: return "InsufficientSupport";
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::Unsupported: return "Unsupported";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what, std::optional<std::size_t> index)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), index_(index) {}

void fail(Errc code, const std::string& what, std::optional<std::size_t> index) {
  throw Error(code, what, index);
}

}  // namespace torus
