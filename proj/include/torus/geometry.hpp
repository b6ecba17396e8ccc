#pragma once

// Representation geometries for embeddings and the projections between them.
//
// Layout conventions used throughout the library:
//  * flat-torus coordinates live in [0, 1) per dimension; radians only appear
//    inside trig calls (angle = 2*pi*coordinate);
//  * Clifford vectors are stored interleaved as (sin_1, cos_1, sin_2, cos_2, ...)
//    and every pair has norm sqrt(1/P), P being the pair count.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace torus {

enum class Geometry : std::uint8_t {
  Euclidean = 0,
  Hypersphere = 1,
  FlatTorus = 2,
  Clifford = 3,
};

std::string_view geometry_name(Geometry g) noexcept;
std::optional<Geometry> parse_geometry(std::string_view name) noexcept;

/// Norms at or below this are treated as degenerate.
inline constexpr double kDegenerateNorm = 1e-12;
/// Tolerance for representation invariants (unit norm, pair norm).
inline constexpr double kRepresentationTol = 1e-9;

/// Reduces x into [0, 1), mapping values that round up to 1.0 onto 0.0.
double wrap_unit(double x) noexcept;

// Invariant checks over raw coordinates. Each returns true when the
// coordinates satisfy the geometry's invariant within `tol`.
bool is_unit_norm(std::span<const double> v, double tol = kRepresentationTol) noexcept;
bool is_clifford(std::span<const double> v, double tol = kRepresentationTol) noexcept;
bool is_flat_torus(std::span<const double> v) noexcept;
bool satisfies(Geometry g, std::span<const double> v, double tol = kRepresentationTol) noexcept;

namespace detail {

template <Geometry G>
class GeometricVec {
 public:
  std::span<const double> coords() const noexcept { return coords_; }
  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const noexcept { return coords_[i]; }
  static constexpr Geometry geometry() noexcept { return G; }

  friend bool operator==(const GeometricVec&, const GeometricVec&) = default;

 protected:
  GeometricVec() = default;
  explicit GeometricVec(std::vector<double> coords) : coords_(std::move(coords)) {}
  std::vector<double> coords_;
};

}  // namespace detail

/// Unconstrained real vector; entries must be finite.
class EuclideanVec : public detail::GeometricVec<Geometry::Euclidean> {
 public:
  explicit EuclideanVec(std::vector<double> coords);
};

class SphereVec : public detail::GeometricVec<Geometry::Hypersphere> {
 public:
  explicit SphereVec(std::vector<double> coords, double tol = kRepresentationTol);
};

class FlatTorusVec : public detail::GeometricVec<Geometry::FlatTorus> {
 public:
  explicit FlatTorusVec(std::vector<double> coords);
};

class CliffordVec : public detail::GeometricVec<Geometry::Clifford> {
 public:
  explicit CliffordVec(std::vector<double> coords, double tol = kRepresentationTol);
  std::size_t pairs() const noexcept { return coords_.size() / 2; }
};

// Typed projections.
SphereVec l2_normalize(const EuclideanVec& v);
CliffordVec clifford_project(const EuclideanVec& angles);
CliffordVec l2p_project(const EuclideanVec& v);
FlatTorusVec clifford_to_flat(const CliffordVec& v);
CliffordVec flat_to_clifford(const FlatTorusVec& v);

// Span kernels behind the typed API. Output spans must be sized as the
// corresponding typed result (2*D for clifford_project, D/2 for
// clifford_to_flat, ...); mismatches raise DimensionMismatch.
void l2_normalize_into(std::span<const double> in, std::span<double> out);
void clifford_project_into(std::span<const double> angles, std::span<double> out);
void l2p_project_into(std::span<const double> in, std::span<double> out);
void clifford_to_flat_into(std::span<const double> in, std::span<double> out);
void flat_to_clifford_into(std::span<const double> in, std::span<double> out);

}  // namespace torus
