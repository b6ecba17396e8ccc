#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "torus/geometry.hpp"

namespace torus {

using Label = std::uint32_t;

/// N real vectors of a common geometry, stored row-major, with optional labels.
struct EmbeddingSet {
  Geometry geometry = Geometry::Euclidean;
  std::size_t dim = 0;
  std::vector<double> data;
  std::optional<std::vector<Label>> labels;

  std::size_t size() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  bool has_labels() const noexcept { return labels.has_value(); }

  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(data).subspan(i * dim, dim);
  }
  std::span<double> row(std::size_t i) noexcept { return std::span<double>(data).subspan(i * dim, dim); }

  /// Throws InvariantViolation (index = first offending row) when any row
  /// breaks the geometry's invariant, or when shapes/labels are inconsistent.
  void validate(double tol = kRepresentationTol) const;
};

/// Builds and validates a set.
EmbeddingSet make_set(Geometry geometry, std::size_t dim, std::vector<double> data,
                      std::optional<std::vector<Label>> labels = std::nullopt,
                      double tol = kRepresentationTol);

enum class Projection { L2, Clifford, L2p, ToFlat, ToClifford };

std::optional<Projection> parse_projection(std::string_view name) noexcept;

/// Applies a geometry projection row-wise. l2 / clifford / l2p take Euclidean
/// input; to-flat takes Clifford input; to-clifford takes flat-torus input.
EmbeddingSet project_set(const EmbeddingSet& in, Projection mode);

/// Unit-norm view of a set for cosine evaluation and circular statistics:
/// flat-torus sets are lifted to Clifford, sphere/Clifford sets pass through.
EmbeddingSet unit_norm_view(const EmbeddingSet& in);

}  // namespace torus
