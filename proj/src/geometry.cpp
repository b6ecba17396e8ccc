#include "torus/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "torus/errors.hpp"

namespace torus {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double norm_of(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void require_out(std::size_t got, std::size_t want, const char* where) {
  if (got != want) {
    fail(Errc::DimensionMismatch, std::string(where) + ": output has " + std::to_string(got) +
                                      " coordinates, expected " + std::to_string(want));
  }
}

}  // namespace

std::string_view geometry_name(Geometry g) noexcept {
  switch (g) {
    case Geometry::Euclidean: return "euclidean";
    case Geometry::Hypersphere: return "hypersphere";
    case Geometry::FlatTorus: return "flat-torus";
    case Geometry::Clifford: return "clifford";
  }
  return "unknown";
}

std::optional<Geometry> parse_geometry(std::string_view name) noexcept {
  if (name == "euclidean") return Geometry::Euclidean;
  if (name == "hypersphere" || name == "sphere") return Geometry::Hypersphere;
  if (name == "flat-torus" || name == "flat") return Geometry::FlatTorus;
  if (name == "clifford") return Geometry::Clifford;
  return std::nullopt;
}

double wrap_unit(double x) noexcept {
  double r = x - std::floor(x);
  // x slightly below an integer can produce exactly 1.0 after subtraction
  return r >= 1.0 ? 0.0 : r;
}

bool is_unit_norm(std::span<const double> v, double tol) noexcept {
  return !v.empty() && std::abs(norm_of(v) - 1.0) <= tol;
}

bool is_clifford(std::span<const double> v, double tol) noexcept {
  if (v.empty() || v.size() % 2 != 0) return false;
  const std::size_t pairs = v.size() / 2;
  const double pair_norm = std::sqrt(1.0 / static_cast<double>(pairs));
  for (std::size_t p = 0; p < pairs; ++p) {
    if (std::abs(std::hypot(v[2 * p], v[2 * p + 1]) - pair_norm) > tol) return false;
  }
  return is_unit_norm(v, tol);
}

bool is_flat_torus(std::span<const double> v) noexcept {
  if (v.empty()) return false;
  for (double x : v) {
    if (!(x >= 0.0 && x < 1.0)) return false;
  }
  return true;
}

bool satisfies(Geometry g, std::span<const double> v, double tol) noexcept {
  switch (g) {
    case Geometry::Euclidean:
      if (v.empty()) return false;
      for (double x : v) {
        if (!std::isfinite(x)) return false;
      }
      return true;
    case Geometry::Hypersphere: return is_unit_norm(v, tol);
    case Geometry::FlatTorus: return is_flat_torus(v);
    case Geometry::Clifford: return is_clifford(v, tol);
  }
  return false;
}

EuclideanVec::EuclideanVec(std::vector<double> coords) : GeometricVec(std::move(coords)) {
  if (!satisfies(Geometry::Euclidean, coords_)) {
    fail(Errc::InvariantViolation, "EuclideanVec needs at least one finite coordinate");
  }
}

SphereVec::SphereVec(std::vector<double> coords, double tol) : GeometricVec(std::move(coords)) {
  if (!is_unit_norm(coords_, tol)) fail(Errc::InvariantViolation, "SphereVec is not unit norm");
}

FlatTorusVec::FlatTorusVec(std::vector<double> coords) : GeometricVec(std::move(coords)) {
  if (!is_flat_torus(coords_)) {
    fail(Errc::InvariantViolation, "FlatTorusVec coordinates must lie in [0, 1)");
  }
}

CliffordVec::CliffordVec(std::vector<double> coords, double tol) : GeometricVec(std::move(coords)) {
  if (!is_clifford(coords_, tol)) {
    fail(Errc::InvariantViolation, "CliffordVec pairs must each have norm sqrt(1/P)");
  }
}

void l2_normalize_into(std::span<const double> in, std::span<double> out) {
  require_out(out.size(), in.size(), "l2_normalize");
  const double n = norm_of(in);
  if (!(n > kDegenerateNorm)) fail(Errc::ZeroVector, "cannot normalise a zero vector");
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] / n;
}

void clifford_project_into(std::span<const double> angles, std::span<double> out) {
  require_out(out.size(), 2 * angles.size(), "clifford_project");
  const double scale = std::sqrt(1.0 / static_cast<double>(angles.size()));
  for (std::size_t d = 0; d < angles.size(); ++d) {
    out[2 * d] = scale * std::sin(angles[d]);
    out[2 * d + 1] = scale * std::cos(angles[d]);
  }
}

void l2p_project_into(std::span<const double> in, std::span<double> out) {
  if (in.empty() || in.size() % 2 != 0) {
    fail(Errc::DimensionMismatch, "l2p_project needs an even, non-zero dimension");
  }
  require_out(out.size(), in.size(), "l2p_project");
  const double scale = std::sqrt(2.0 / static_cast<double>(in.size()));
  for (std::size_t p = 0; p < in.size() / 2; ++p) {
    const double n = std::hypot(in[2 * p], in[2 * p + 1]);
    if (!(n > kDegenerateNorm)) {
      fail(Errc::ZeroPair, "pair " + std::to_string(p) + " has zero norm", p);
    }
    out[2 * p] = scale * in[2 * p] / n;
    out[2 * p + 1] = scale * in[2 * p + 1] / n;
  }
}

void clifford_to_flat_into(std::span<const double> in, std::span<double> out) {
  if (in.size() % 2 != 0) fail(Errc::DimensionMismatch, "Clifford vectors have even dimension");
  require_out(out.size(), in.size() / 2, "clifford_to_flat");
  for (std::size_t p = 0; p < out.size(); ++p) {
    const double theta = std::atan2(in[2 * p], in[2 * p + 1]);
    out[p] = wrap_unit(theta / kTwoPi);
  }
}

void flat_to_clifford_into(std::span<const double> in, std::span<double> out) {
  require_out(out.size(), 2 * in.size(), "flat_to_clifford");
  const double scale = std::sqrt(1.0 / static_cast<double>(in.size()));
  for (std::size_t d = 0; d < in.size(); ++d) {
    const double angle = kTwoPi * in[d];
    out[2 * d] = scale * std::sin(angle);
    out[2 * d + 1] = scale * std::cos(angle);
  }
}

SphereVec l2_normalize(const EuclideanVec& v) {
  std::vector<double> out(v.dim());
  l2_normalize_into(v.coords(), out);
  return SphereVec(std::move(out));
}

CliffordVec clifford_project(const EuclideanVec& angles) {
  std::vector<double> out(2 * angles.dim());
  clifford_project_into(angles.coords(), out);
  return CliffordVec(std::move(out));
}

CliffordVec l2p_project(const EuclideanVec& v) {
  std::vector<double> out(v.dim());
  l2p_project_into(v.coords(), out);
  return CliffordVec(std::move(out));
}

FlatTorusVec clifford_to_flat(const CliffordVec& v) {
  std::vector<double> out(v.pairs());
  clifford_to_flat_into(v.coords(), out);
  return FlatTorusVec(std::move(out));
}

CliffordVec flat_to_clifford(const FlatTorusVec& v) {
  std::vector<double> out(2 * v.dim());
  flat_to_clifford_into(v.coords(), out);
  return CliffordVec(std::move(out));
}

}  // namespace torus
