#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "torus/rng.hpp"

namespace torus {

struct KMeansResult {
  std::vector<double> centroids;  // k x dim
  std::vector<std::uint32_t> assignment;
  std::vector<double> objective_history;
  double objective = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are repaired by
/// moving them onto the point of the largest cluster that lies farthest from
/// its centroid. The objective after each assignment step must not increase;
/// a violation raises InvariantViolation.
KMeansResult kmeans(std::span<const double> data, std::size_t dim, std::size_t k, Rng& rng,
                    int max_iterations = 25);

/// Globally optimal k-means on scalars (contiguous partitions of the sorted
/// values, divide-and-conquer DP). Centroids come out in ascending order.
KMeansResult kmeans_1d_exact(std::span<const double> values, std::size_t k);

/// Total squared distance from each point to its assigned centroid.
double kmeans_objective(std::span<const double> data, std::size_t dim,
                        std::span<const double> centroids, std::span<const std::uint32_t> assignment);

}  // namespace torus
