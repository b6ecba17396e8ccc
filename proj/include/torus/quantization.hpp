#pragma once

// Post-training quantisation: n-bit grid codes and product quantisation.
//
// Torus data is quantised in its flat representation, where the n-bit grid
// wraps modulo 2^n exactly like unsigned integer overflow. Sphere data (and
// Clifford data at 1 bit) is quantised in ambient coordinates.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "torus/embedding_set.hpp"
#include "torus/geometry.hpp"
#include "torus/grid_code.hpp"

namespace torus {

/// One row of the quantisation table. For product quantisation, PQ(a, b)
/// follows the table's naming: `a` bits per sub-index and `b` subspaces, so
/// PQ(8,16) is 16 subspaces of 256 centroids (128 bits, codebook 256*D).
struct QuantConfig {
  enum class Kind { Grid, PQ };

  Kind kind = Kind::Grid;
  unsigned bits = 8;       // grid bits per dimension, or bits per PQ sub-index
  unsigned subspaces = 0;  // PQ only

  static QuantConfig grid(unsigned bits) { return {Kind::Grid, bits, 0}; }
  static QuantConfig pq(unsigned index_bits, unsigned subspaces) { return {Kind::PQ, index_bits, subspaces}; }

  bool is_pq() const noexcept { return kind == Kind::PQ; }
  /// CLI name: grid8, grid1, pq8x16, ...
  std::string name() const;

  friend bool operator==(const QuantConfig&, const QuantConfig&) = default;
};

std::optional<QuantConfig> parse_quant_config(std::string_view name) noexcept;

/// The eight configurations of the study, in table order.
std::vector<QuantConfig> table_quant_configs();

/// Bits stored per vector for an input of extrinsic dimension `dim`. Grid8 on
/// Clifford input is quantised after the flat conversion, which halves the
/// dimension.
std::size_t bits_per_vector(const QuantConfig& config, std::size_t dim, Geometry geometry);
/// Full-precision scalars held in memory to decode (grid: 2*D scale/offset
/// pairs, PQ: 2^bits centroids spanning D).
std::size_t codebook_scalars(const QuantConfig& config, std::size_t dim);

// ---- grid quantisation -------------------------------------------------------

/// Flat torus: code = floor(v * 2^n + 1/2) mod 2^n. Sphere/Clifford: the affine
/// map [-1, 1] -> [0, 2^n - 1], clamped, round-half-even; at n = 1 this is the
/// sign bit.
GridCode grid_quantize(std::span<const double> v, Geometry geometry, unsigned bits);
GridCode grid_quantize(const FlatTorusVec& v, unsigned bits);
GridCode grid_quantize(const SphereVec& v, unsigned bits);

/// Flat torus: code / 2^n. Sphere: affine cell centre re-normalised to unit
/// norm. Clifford: affine cell centre re-projected pairwise onto the torus.
std::vector<double> grid_dequantize(const GridCode& code, Geometry geometry);

/// Packs 1-bit codes, least significant bit first, into 64-bit words.
std::vector<std::uint64_t> pack_bits(std::span<const std::uint16_t> codes);

/// Requires bits == 1 on both sides.
std::uint64_t hamming_distance(const GridCode& a, const GridCode& b);

// ---- product quantisation ----------------------------------------------------

struct PQCodebook {
  unsigned m = 0;
  unsigned n_bits = 0;
  std::size_t subdim = 0;
  Geometry geometry = Geometry::Hypersphere;
  std::uint64_t seed = 0;
  std::vector<double> centroids;  // m x 2^n_bits x subdim, row-major

  std::size_t k() const noexcept { return std::size_t{1} << n_bits; }
  std::size_t dim() const noexcept { return m * subdim; }
  std::span<const double> centroid(std::size_t subspace, std::size_t c) const noexcept {
    return std::span<const double>(centroids).subspan((subspace * k() + c) * subdim, subdim);
  }
};

struct PQTrainStats {
  /// Per subspace: k-means objective (total squared error) after each
  /// assignment step; a single entry for exactly solved 1-D subspaces.
  std::vector<std::vector<double>> objective_history;
  std::vector<double> final_objective;
};

/// Trains one k-means codebook per subspace (k = 2^n_bits). Multi-dimensional
/// subspaces use k-means++ seeding followed by up to 25 Lloyd iterations; 1-D
/// subspaces are solved exactly by dynamic programming over the sorted values.
/// Throws TooFewPoints when N < 2^n_bits and IndivisibleDimension when m does
/// not divide the dimension.
PQCodebook pq_train(const EmbeddingSet& set, unsigned m, unsigned n_bits, std::uint64_t seed,
                    PQTrainStats* stats = nullptr);

/// Nearest centroid per subspace (squared L2; torus codebooks use wrapped
/// per-coordinate deltas). Ties go to the lowest index.
std::vector<std::uint16_t> pq_encode(std::span<const double> v, const PQCodebook& codebook);
/// Concatenated centroids; torus codebooks are reduced into [0, 1).
std::vector<double> pq_decode(std::span<const std::uint16_t> code, const PQCodebook& codebook);

// ---- quantised sets ----------------------------------------------------------

/// N code vectors sharing one bit width. For grid codes `dim` is the number of
/// quantised coordinates; for PQ codes it is the subspace count.
struct CodeSet {
  enum class Kind { Grid, PQ };

  Geometry geometry = Geometry::FlatTorus;
  Kind kind = Kind::Grid;
  unsigned bits = 8;
  std::size_t dim = 0;
  std::vector<std::uint16_t> codes;
  std::optional<std::vector<Label>> labels;

  std::size_t size() const noexcept { return dim == 0 ? 0 : codes.size() / dim; }
  bool has_labels() const noexcept { return labels.has_value(); }
  std::span<const std::uint16_t> row(std::size_t i) const noexcept {
    return std::span<const std::uint16_t>(codes).subspan(i * dim, dim);
  }
  GridCode grid_code(std::size_t i) const { return {std::vector<std::uint16_t>(row(i).begin(), row(i).end()), bits}; }
};

CodeSet grid_quantize_set(const EmbeddingSet& set, unsigned bits);
EmbeddingSet grid_dequantize_set(const CodeSet& codes);

CodeSet pq_encode_set(const EmbeddingSet& set, const PQCodebook& codebook);
/// Decoded vectors; sphere codebooks are re-normalised to unit norm so the
/// result is ready for cosine evaluation.
EmbeddingSet pq_decode_set(const CodeSet& codes, const PQCodebook& codebook);

/// The representation a set is quantised in: Clifford -> flat torus, flat
/// torus and sphere unchanged. Euclidean input raises IncompatibleGeometry.
EmbeddingSet quantization_input(const EmbeddingSet& set);

struct QuantizedSet {
  QuantConfig config;
  CodeSet codes;
  std::optional<PQCodebook> codebook;
  EmbeddingSet reconstruction;  // dequantised / decoded vectors
};

/// Runs one table configuration end to end. Grid8 and PQ route torus data
/// through the flat representation; PQ is trained on the dequantised 8-bit
/// values. Grid1 quantises Clifford and sphere data by sign and flat data by
/// the nearest of the wrap-aware centres 0 and 1/2.
QuantizedSet quantize(const EmbeddingSet& set, const QuantConfig& config, std::uint64_t seed);

}  // namespace torus
