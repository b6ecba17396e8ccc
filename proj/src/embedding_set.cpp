#include "torus/embedding_set.hpp"

#include <string>

#include "torus/errors.hpp"

namespace torus {

void EmbeddingSet::validate(double tol) const {
  if (dim == 0) fail(Errc::InvariantViolation, "embedding set has zero dimension");
  if (data.size() % dim != 0) fail(Errc::InvariantViolation, "data length is not a multiple of dim");
  if (geometry == Geometry::Clifford && dim % 2 != 0) {
    fail(Errc::InvariantViolation, "Clifford sets need an even dimension");
  }
  if (labels && labels->size() != size()) {
    fail(Errc::InvariantViolation, "label count " + std::to_string(labels->size()) +
                                       " does not match " + std::to_string(size()) + " rows");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (!satisfies(geometry, row(i), tol)) {
      fail(Errc::InvariantViolation,
           "row " + std::to_string(i) + " violates the " + std::string(geometry_name(geometry)) +
               " invariant",
           i);
    }
  }
}

EmbeddingSet make_set(Geometry geometry, std::size_t dim, std::vector<double> data,
                      std::optional<std::vector<Label>> labels, double tol) {
  EmbeddingSet s{geometry, dim, std::move(data), std::move(labels)};
  s.validate(tol);
  return s;
}

std::optional<Projection> parse_projection(std::string_view name) noexcept {
  if (name == "l2") return Projection::L2;
  if (name == "clifford") return Projection::Clifford;
  if (name == "l2p") return Projection::L2p;
  if (name == "to-flat") return Projection::ToFlat;
  if (name == "to-clifford") return Projection::ToClifford;
  return std::nullopt;
}

EmbeddingSet project_set(const EmbeddingSet& in, Projection mode) {
  const auto need = [&](Geometry g) {
    if (in.geometry != g) {
      fail(Errc::IncompatibleGeometry, "projection expects " + std::string(geometry_name(g)) +
                                           " input, got " + std::string(geometry_name(in.geometry)));
    }
  };
  EmbeddingSet out;
  out.labels = in.labels;
  const std::size_t n = in.size();
  switch (mode) {
    case Projection::L2:
      need(Geometry::Euclidean);
      out.geometry = Geometry::Hypersphere;
      out.dim = in.dim;
      break;
    case Projection::Clifford:
      need(Geometry::Euclidean);
      out.geometry = Geometry::Clifford;
      out.dim = 2 * in.dim;
      break;
    case Projection::L2p:
      need(Geometry::Euclidean);
      out.geometry = Geometry::Clifford;
      out.dim = in.dim;
      break;
    case Projection::ToFlat:
      need(Geometry::Clifford);
      out.geometry = Geometry::FlatTorus;
      out.dim = in.dim / 2;
      break;
    case Projection::ToClifford:
      need(Geometry::FlatTorus);
      out.geometry = Geometry::Clifford;
      out.dim = 2 * in.dim;
      break;
  }
  out.data.resize(n * out.dim);
  for (std::size_t i = 0; i < n; ++i) {
    switch (mode) {
      case Projection::L2: l2_normalize_into(in.row(i), out.row(i)); break;
      case Projection::Clifford: clifford_project_into(in.row(i), out.row(i)); break;
      case Projection::L2p: l2p_project_into(in.row(i), out.row(i)); break;
      case Projection::ToFlat: clifford_to_flat_into(in.row(i), out.row(i)); break;
      case Projection::ToClifford: flat_to_clifford_into(in.row(i), out.row(i)); break;
    }
  }
  return out;
}

EmbeddingSet unit_norm_view(const EmbeddingSet& in) {
  switch (in.geometry) {
    case Geometry::Hypersphere:
    case Geometry::Clifford: return in;
    case Geometry::FlatTorus: return project_set(in, Projection::ToClifford);
    case Geometry::Euclidean: break;
  }
  fail(Errc::IncompatibleGeometry, "euclidean sets have no unit-norm representation");
}

}  // namespace torus
