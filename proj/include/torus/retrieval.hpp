#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "torus/embedding_set.hpp"
#include "torus/metrics.hpp"
#include "torus/quantization.hpp"

namespace torus {

struct Neighbor {
  std::size_t id = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

using RankedList = std::vector<Neighbor>;

/// Natural distance for a geometry: cosine on sphere/Clifford, L2 on the flat
/// torus, euclidean otherwise.
DistanceKind default_distance(Geometry g) noexcept;

/// Exact brute-force top-k per query, ascending distance, ties to lower id.
std::vector<RankedList> knn_search(const EmbeddingSet& queries, const EmbeddingSet& index, std::size_t k,
                                   DistanceKind kind);

/// Code-domain search. Torus grid codes support FlatTorusL1 / FlatTorusL2 /
/// FlatTorusL2Squared through the wrapping integer kernels (distances are
/// integer grid steps); 1-bit codes support Hamming; sphere grid codes support
/// EuclideanL2 on the (non-wrapping) code values.
std::vector<RankedList> knn_search(const CodeSet& queries, const CodeSet& index, std::size_t k, DistanceKind kind);

/// Leave-one-out nearest neighbour of every point (ties to lower id).
std::vector<std::size_t> nearest_other(const EmbeddingSet& set, DistanceKind kind);
std::vector<std::size_t> nearest_other(const CodeSet& set, DistanceKind kind);

/// Fraction of points whose nearest other point shares their label.
double precision_at_1(const EmbeddingSet& set, DistanceKind kind);
double precision_at_1(const CodeSet& set, DistanceKind kind);

struct FewShotResult {
  double mean_accuracy = 0.0;
  std::vector<double> episode_accuracy;
  std::size_t degenerate_prototypes = 0;  // prototype pairs/vectors that fell back to a support value
};

/// Nearest-prototype classification. Each episode draws `n_shot` support
/// points per class from `support_pool`; prototypes are means re-projected
/// onto the geometry; every labelled query is classified by its nearest
/// prototype under the geometry's default distance.
FewShotResult few_shot_eval(const EmbeddingSet& support_pool, const EmbeddingSet& queries, std::size_t n_shot,
                            std::size_t n_episodes, std::uint64_t seed);

struct EvalContext {
  std::string geometry;  // e.g. "torusN"; empty uses the set's geometry name
  std::size_t dim = 0;   // pre-projection dimension; 0 uses the stored dim
  double koleo_weight = 0.0;
  std::uint64_t seed = 0;
};

struct EvalReport {
  std::string geometry;
  std::size_t dim = 0;
  double koleo_weight = 0.0;
  std::string quant;
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
};

/// Evaluates a trained set, optionally after quantisation. Reports
/// `precision_at_1` under the geometry's cosine route (Hamming for 1-bit
/// codes) plus flat-torus routes for torus data. For torus Grid8 the integer
/// fast path is also reported, and its nearest-neighbour ranking must equal
/// the float flat-torus ranking (InvariantViolation otherwise).
std::vector<EvalReport> eval_pipeline(const EmbeddingSet& trained, const std::optional<QuantConfig>& quant,
                                      const EvalContext& ctx);

/// Looks up a metric in a report list.
std::optional<double> find_metric(const std::vector<EvalReport>& reports, const std::string& metric);

void write_reports_csv(std::ostream& os, const std::vector<EvalReport>& reports);
void write_reports_json(std::ostream& os, const std::vector<EvalReport>& reports);

}  // namespace torus
