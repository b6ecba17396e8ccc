#include "torus/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "torus/errors.hpp"
#include "torus/kmeans.hpp"
#include "torus/metrics.hpp"
#include "torus/rng.hpp"

namespace torus {

std::string QuantConfig::name() const {
  if (kind == Kind::Grid) return "grid" + std::to_string(bits);
  return "pq" + std::to_string(bits) + "x" + std::to_string(subspaces);
}

std::optional<QuantConfig> parse_quant_config(std::string_view name) noexcept {
  for (const auto& c : table_quant_configs()) {
    if (c.name() == name) return c;
  }
  return std::nullopt;
}

std::vector<QuantConfig> table_quant_configs() {
  return {QuantConfig::grid(8), QuantConfig::grid(1), QuantConfig::pq(8, 16), QuantConfig::pq(8, 4),
          QuantConfig::pq(8, 2), QuantConfig::pq(8, 1),  QuantConfig::pq(4, 4), QuantConfig::pq(4, 2)};
}

std::size_t bits_per_vector(const QuantConfig& config, std::size_t dim, Geometry geometry) {
  if (config.is_pq()) return std::size_t{config.bits} * config.subspaces;
  if (config.bits == 1) return dim;
  const std::size_t coded = geometry == Geometry::Clifford ? dim / 2 : dim;
  return std::size_t{config.bits} * coded;
}

std::size_t codebook_scalars(const QuantConfig& config, std::size_t dim) {
  if (config.is_pq()) return (std::size_t{1} << config.bits) * dim;
  return 2 * dim;
}

// ---- grid --------------------------------------------------------------------

namespace {

void check_bits(unsigned bits) {
  if (bits < 1 || bits > 16) fail(Errc::Unsupported, "grid bit width must be in 1..16");
}

std::uint16_t quantize_ambient(double v, unsigned bits) {
  if (bits == 1) return v > 0.0 ? 1 : 0;
  const double top = static_cast<double>((1u << bits) - 1u);
  // nearbyint honours the default round-to-nearest-even mode
  const double q = std::nearbyint((v + 1.0) * 0.5 * top);
  return static_cast<std::uint16_t>(std::clamp(q, 0.0, top));
}

std::uint16_t quantize_flat(double v, unsigned bits) {
  const std::uint32_t levels = 1u << bits;
  const double q = std::floor(v * static_cast<double>(levels) + 0.5);
  const auto wrapped = static_cast<std::int64_t>(q) % static_cast<std::int64_t>(levels);
  return static_cast<std::uint16_t>(wrapped < 0 ? wrapped + levels : wrapped);
}

}  // namespace

GridCode grid_quantize(std::span<const double> v, Geometry geometry, unsigned bits) {
  check_bits(bits);
  GridCode out;
  out.bits = bits;
  out.codes.resize(v.size());
  switch (geometry) {
    case Geometry::FlatTorus:
      for (std::size_t i = 0; i < v.size(); ++i) out.codes[i] = quantize_flat(v[i], bits);
      break;
    case Geometry::Hypersphere:
    case Geometry::Clifford:
      for (std::size_t i = 0; i < v.size(); ++i) out.codes[i] = quantize_ambient(v[i], bits);
      break;
    case Geometry::Euclidean:
      fail(Errc::IncompatibleGeometry, "grid quantisation needs torus or sphere data");
  }
  return out;
}

GridCode grid_quantize(const FlatTorusVec& v, unsigned bits) {
  return grid_quantize(v.coords(), Geometry::FlatTorus, bits);
}

GridCode grid_quantize(const SphereVec& v, unsigned bits) {
  return grid_quantize(v.coords(), Geometry::Hypersphere, bits);
}

std::vector<double> grid_dequantize(const GridCode& code, Geometry geometry) {
  validate(code);
  std::vector<double> out(code.dim());
  if (geometry == Geometry::FlatTorus) {
    const double levels = static_cast<double>(1u << code.bits);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(code.codes[i]) / levels;
    return out;
  }
  if (geometry == Geometry::Euclidean) {
    fail(Errc::IncompatibleGeometry, "grid codes carry no euclidean interpretation");
  }
  // 2^n - 1 is odd, so a cell centre is never exactly 0 and the result is
  // never the zero vector
  const double top = static_cast<double>((1u << code.bits) - 1u);
  std::vector<double> centre(code.dim());
  for (std::size_t i = 0; i < out.size(); ++i) centre[i] = 2.0 * static_cast<double>(code.codes[i]) / top - 1.0;
  if (geometry == Geometry::Hypersphere) {
    l2_normalize_into(centre, out);
  } else {
    l2p_project_into(centre, out);
  }
  return out;
}

std::vector<std::uint64_t> pack_bits(std::span<const std::uint16_t> codes) {
  std::vector<std::uint64_t> words((codes.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] & 1u) words[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  return words;
}

std::uint64_t hamming_distance(const GridCode& a, const GridCode& b) {
  require_same_dim(a.dim(), b.dim(), "hamming_distance");
  if (a.bits != 1 || b.bits != 1) fail(Errc::BitWidthMismatch, "hamming distance needs 1-bit codes");
  return hamming_packed(pack_bits(a.codes), pack_bits(b.codes));
}

// ---- product quantisation ----------------------------------------------------

PQCodebook pq_train(const EmbeddingSet& set, unsigned m, unsigned n_bits, std::uint64_t seed,
                    PQTrainStats* stats) {
  if (n_bits < 1 || n_bits > 16) fail(Errc::Unsupported, "PQ index bits must be in 1..16");
  if (m == 0 || set.dim % m != 0) {
    fail(Errc::IndivisibleDimension,
         "dimension " + std::to_string(set.dim) + " is not divisible by " + std::to_string(m) + " subspaces");
  }
  PQCodebook cb;
  cb.m = m;
  cb.n_bits = n_bits;
  cb.subdim = set.dim / m;
  cb.geometry = set.geometry;
  cb.seed = seed;
  const std::size_t n = set.size();
  if (n < cb.k()) {
    fail(Errc::TooFewPoints,
         "PQ with " + std::to_string(cb.k()) + " centroids needs as many points, got " + std::to_string(n));
  }
  cb.centroids.resize(m * cb.k() * cb.subdim);
  if (stats) *stats = {};

  Rng rng(seed);
  std::vector<double> sub(n * cb.subdim);
  for (unsigned s = 0; s < m; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = set.row(i).subspan(s * cb.subdim, cb.subdim);
      std::copy(r.begin(), r.end(), sub.begin() + static_cast<std::ptrdiff_t>(i * cb.subdim));
    }
    const KMeansResult km = cb.subdim == 1 ? kmeans_1d_exact(sub, cb.k()) : kmeans(sub, cb.subdim, cb.k(), rng);
    std::copy(km.centroids.begin(), km.centroids.end(),
              cb.centroids.begin() + static_cast<std::ptrdiff_t>(s * cb.k() * cb.subdim));
    if (stats) {
      stats->objective_history.push_back(km.objective_history);
      stats->final_objective.push_back(km.objective);
    }
  }
  return cb;
}

std::vector<std::uint16_t> pq_encode(std::span<const double> v, const PQCodebook& codebook) {
  require_same_dim(v.size(), codebook.dim(), "pq_encode");
  const bool wrap = codebook.geometry == Geometry::FlatTorus;
  std::vector<std::uint16_t> code(codebook.m);
  for (std::size_t s = 0; s < codebook.m; ++s) {
    const auto x = v.subspan(s * codebook.subdim, codebook.subdim);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < codebook.k(); ++c) {
      const auto cen = codebook.centroid(s, c);
      double d = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double delta = wrap ? torus_delta(x[j], wrap_unit(cen[j])) : x[j] - cen[j];
        d += delta * delta;
      }
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    code[s] = static_cast<std::uint16_t>(best_c);
  }
  return code;
}

std::vector<double> pq_decode(std::span<const std::uint16_t> code, const PQCodebook& codebook) {
  require_same_dim(code.size(), codebook.m, "pq_decode");
  std::vector<double> out(codebook.dim());
  for (std::size_t s = 0; s < codebook.m; ++s) {
    if (code[s] >= codebook.k()) {
      fail(Errc::InvariantViolation, "PQ code " + std::to_string(code[s]) + " out of range", s);
    }
    const auto cen = codebook.centroid(s, code[s]);
    for (std::size_t j = 0; j < codebook.subdim; ++j) {
      const double x = cen[j];
      out[s * codebook.subdim + j] = codebook.geometry == Geometry::FlatTorus ? wrap_unit(x) : x;
    }
  }
  return out;
}

// ---- sets --------------------------------------------------------------------

CodeSet grid_quantize_set(const EmbeddingSet& set, unsigned bits) {
  CodeSet out;
  out.geometry = set.geometry;
  out.kind = CodeSet::Kind::Grid;
  out.bits = bits;
  out.dim = set.dim;
  out.labels = set.labels;
  out.codes.reserve(set.data.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const GridCode c = grid_quantize(set.row(i), set.geometry, bits);
    out.codes.insert(out.codes.end(), c.codes.begin(), c.codes.end());
  }
  return out;
}

EmbeddingSet grid_dequantize_set(const CodeSet& codes) {
  if (codes.kind != CodeSet::Kind::Grid) fail(Errc::Unsupported, "PQ codes need their codebook to decode");
  EmbeddingSet out;
  out.geometry = codes.geometry;
  out.dim = codes.dim;
  out.labels = codes.labels;
  out.data.reserve(codes.codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto v = grid_dequantize(codes.grid_code(i), codes.geometry);
    out.data.insert(out.data.end(), v.begin(), v.end());
  }
  return out;
}

CodeSet pq_encode_set(const EmbeddingSet& set, const PQCodebook& codebook) {
  CodeSet out;
  out.geometry = codebook.geometry;
  out.kind = CodeSet::Kind::PQ;
  out.bits = codebook.n_bits;
  out.dim = codebook.m;
  out.labels = set.labels;
  out.codes.reserve(set.size() * codebook.m);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto c = pq_encode(set.row(i), codebook);
    out.codes.insert(out.codes.end(), c.begin(), c.end());
  }
  return out;
}

EmbeddingSet pq_decode_set(const CodeSet& codes, const PQCodebook& codebook) {
  if (codes.kind != CodeSet::Kind::PQ) fail(Errc::Unsupported, "expected PQ codes");
  EmbeddingSet out;
  out.geometry = codebook.geometry;
  out.dim = codebook.dim();
  out.labels = codes.labels;
  out.data.resize(codes.size() * out.dim);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    auto v = pq_decode(codes.row(i), codebook);
    if (codebook.geometry == Geometry::Hypersphere) {
      l2_normalize_into(std::vector<double>(v), v);
    }
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

EmbeddingSet quantization_input(const EmbeddingSet& set) {
  switch (set.geometry) {
    case Geometry::Clifford: return project_set(set, Projection::ToFlat);
    case Geometry::FlatTorus:
    case Geometry::Hypersphere: return set;
    case Geometry::Euclidean: break;
  }
  fail(Errc::IncompatibleGeometry, "euclidean embeddings are not quantised");
}

QuantizedSet quantize(const EmbeddingSet& set, const QuantConfig& config, std::uint64_t seed) {
  QuantizedSet q{config, {}, std::nullopt, {}};
  if (!config.is_pq() && config.bits == 1 && set.geometry != Geometry::Euclidean) {
    q.codes = grid_quantize_set(set, 1);
    q.reconstruction = grid_dequantize_set(q.codes);
    return q;
  }
  const EmbeddingSet base = quantization_input(set);
  CodeSet grid8 = grid_quantize_set(base, 8);
  if (!config.is_pq()) {
    if (config.bits != 8) {
      q.codes = grid_quantize_set(base, config.bits);
      q.reconstruction = grid_dequantize_set(q.codes);
      return q;
    }
    q.reconstruction = grid_dequantize_set(grid8);
    q.codes = std::move(grid8);
    return q;
  }
  const EmbeddingSet train_input = grid_dequantize_set(grid8);
  q.codebook = pq_train(train_input, config.subspaces, config.bits, seed);
  q.codes = pq_encode_set(train_input, *q.codebook);
  q.reconstruction = pq_decode_set(q.codes, *q.codebook);
  return q;
}

}  // namespace torus
