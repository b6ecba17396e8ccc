#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "torus/embedding_set.hpp"
#include "torus/geometry.hpp"
#include "torus/int_kernels.hpp"

namespace torus {

enum class DistanceKind {
  CosineClifford,
  FlatTorusL1,
  FlatTorusL2,
  FlatTorusL2Squared,
  EuclideanL2,
  Hamming,
};

std::string_view distance_name(DistanceKind kind) noexcept;
std::optional<DistanceKind> parse_distance(std::string_view name) noexcept;

/// True when `kind` is defined on real-valued data of geometry `g`.
bool compatible(DistanceKind kind, Geometry g) noexcept;

/// 1 - dot(a, b). Callers are responsible for unit-norm inputs.
double cosine_distance(std::span<const double> a, std::span<const double> b);
double cosine_distance(const CliffordVec& a, const CliffordVec& b);
double cosine_distance(const SphereVec& a, const SphereVec& b);

/// Shortest wrapped distance between two coordinates of the unit circle.
inline double torus_delta(double a, double b) noexcept {
  const double d = a > b ? a - b : b - a;
  return d < 1.0 - d ? d : 1.0 - d;
}

/// (sum of per-dimension geodesic deltas^p)^(1/p), p in {1, 2}.
double flat_torus_distance(std::span<const double> a, std::span<const double> b, int p);
double flat_torus_distance(const FlatTorusVec& a, const FlatTorusVec& b, int p);
/// Sum of squared geodesic deltas (no root).
double flat_torus_distance_squared(std::span<const double> a, std::span<const double> b);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Dispatches a real-valued distance. Hamming is not defined here.
double distance(DistanceKind kind, std::span<const double> a, std::span<const double> b);

/// Distance from the flat-torus origin after Clifford lifting and cosine:
/// D - sum_d cos(2 pi a_d). Evaluated as sum_d 2 sin^2(pi a_d), which is the
/// same quantity without cancellation near the origin.
double cc_norm(std::span<const double> a);
double cc_norm(const FlatTorusVec& a);

class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

/// All-pairs distances; raises IncompatibleGeometry when `kind` does not apply.
DistanceMatrix pairwise_distances(const EmbeddingSet& set, DistanceKind kind);

/// Largest possible distance for `kind` in a space of the given dimension
/// (flat dimension for torus kinds, ambient dimension for cosine/euclidean).
double space_diameter(DistanceKind kind, std::size_t dim);

struct DistanceHistogram {
  Geometry geometry = Geometry::FlatTorus;
  DistanceKind kind = DistanceKind::FlatTorusL1;
  std::size_t dim = 0;
  std::vector<double> edges;  // bins + 1 edges over [0, 1]
  std::vector<std::uint64_t> counts;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t pairs = 0;
};

/// Samples uniform pairs and histograms their diameter-normalised distances.
///
/// Sphere: normalised Gaussians in `dim` ambient dimensions, cosine distance.
/// Flat torus: Uniform[0,1)^dim with L1, L2 or L2-squared.
/// Clifford: flat-torus samples of intrinsic dimension `dim` lifted to 2*dim
/// ambient coordinates, cosine distance.
DistanceHistogram distance_distribution_sim(Geometry geometry, DistanceKind kind, std::size_t dim,
                                            std::size_t n_pairs, std::uint64_t seed,
                                            std::size_t bins = 50);

/// CSV with header `bin_left,bin_right,count`.
void write_histogram_csv(std::ostream& os, const DistanceHistogram& h);

}  // namespace torus
