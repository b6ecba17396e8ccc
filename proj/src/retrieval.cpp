#include "torus/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "torus/errors.hpp"
#include "torus/rng.hpp"
#include "torus/training.hpp"

namespace torus {

namespace {

using RowDistance = std::function<double(std::size_t query, std::size_t item)>;

bool closer(const Neighbor& a, const Neighbor& b) noexcept {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

std::vector<RankedList> rank_all(std::size_t n_queries, std::size_t n_index, std::size_t k, const RowDistance& dist) {
  if (k > n_index) {
    fail(Errc::KTooLarge, "k = " + std::to_string(k) + " exceeds index size " + std::to_string(n_index));
  }
  std::vector<RankedList> out(n_queries);
  std::vector<Neighbor> all(n_index);
  for (std::size_t q = 0; q < n_queries; ++q) {
    for (std::size_t i = 0; i < n_index; ++i) all[i] = {i, dist(q, i)};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
    out[q].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

std::vector<std::size_t> nearest_excluding_self(std::size_t n, const RowDistance& dist) {
  if (n < 2) fail(Errc::TooFewPoints, "leave-one-out search needs at least 2 points");
  std::vector<std::size_t> out(n);
  for (std::size_t q = 0; q < n; ++q) {
    Neighbor best{n, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < n; ++i) {
      if (i == q) continue;
      const Neighbor cand{i, dist(q, i)};
      if (best.id == n || closer(cand, best)) best = cand;
    }
    out[q] = best.id;
  }
  return out;
}

void check_real_kind(DistanceKind kind, Geometry g) {
  if (!compatible(kind, g)) {
    fail(Errc::IncompatibleGeometry, std::string(distance_name(kind)) + " is not defined on " +
                                         std::string(geometry_name(g)) + " embeddings");
  }
}

RowDistance real_distance(const EmbeddingSet& queries, const EmbeddingSet& index, DistanceKind kind) {
  if (queries.geometry != index.geometry) {
    fail(Errc::IncompatibleGeometry, "query and index geometries differ");
  }
  check_real_kind(kind, index.geometry);
  require_same_dim(queries.dim, index.dim, "knn_search");
  return [&queries, &index, kind](std::size_t q, std::size_t i) {
    return distance(kind, queries.row(q), index.row(i));
  };
}

bool is_torus(Geometry g) noexcept { return g == Geometry::FlatTorus || g == Geometry::Clifford; }

// Rows of a grid code set prepared for one integer distance.
struct CodeRows {
  std::vector<std::uint8_t> bytes;    // bits == 8
  std::vector<std::uint64_t> packed;  // bits == 1
  std::size_t words = 0;
};

CodeRows prepare_rows(const CodeSet& set) {
  CodeRows r;
  if (set.bits == 8) {
    r.bytes.resize(set.codes.size());
    std::transform(set.codes.begin(), set.codes.end(), r.bytes.begin(),
                   [](std::uint16_t c) { return static_cast<std::uint8_t>(c); });
  } else if (set.bits == 1) {
    r.words = (set.dim + 63) / 64;
    r.packed.reserve(r.words * set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto p = pack_bits(set.row(i));
      r.packed.insert(r.packed.end(), p.begin(), p.end());
    }
  }
  return r;
}

struct CodeDistance {
  const CodeSet& queries;
  const CodeSet& index;
  CodeRows qrows;
  CodeRows irows;
  DistanceKind kind;

  double operator()(std::size_t q, std::size_t i) const {
    const std::size_t d = index.dim;
    if (kind == DistanceKind::Hamming) {
      const auto a = std::span<const std::uint64_t>(qrows.packed).subspan(q * qrows.words, qrows.words);
      const auto b = std::span<const std::uint64_t>(irows.packed).subspan(i * irows.words, irows.words);
      return static_cast<double>(hamming_packed(a, b));
    }
    if (kind == DistanceKind::EuclideanL2) {
      const auto a = queries.row(q);
      const auto b = index.row(i);
      std::uint64_t acc = 0;
      for (std::size_t j = 0; j < d; ++j) {
        const std::int64_t diff = static_cast<std::int64_t>(a[j]) - static_cast<std::int64_t>(b[j]);
        acc += static_cast<std::uint64_t>(diff * diff);
      }
      return std::sqrt(static_cast<double>(acc));
    }
    const int p = kind == DistanceKind::FlatTorusL1 ? 1 : 2;
    std::uint64_t raw = 0;
    if (index.bits == 8) {
      const auto a = std::span<const std::uint8_t>(qrows.bytes).subspan(q * d, d);
      const auto b = std::span<const std::uint8_t>(irows.bytes).subspan(i * d, d);
      raw = int_torus_distance_u8(a, b, p);
    } else {
      raw = int_torus_distance(queries.grid_code(q), index.grid_code(i), p);
    }
    const double v = static_cast<double>(raw);
    return kind == DistanceKind::FlatTorusL2 ? std::sqrt(v) : v;
  }
};

CodeDistance code_distance(const CodeSet& queries, const CodeSet& index, DistanceKind kind) {
  if (queries.kind != CodeSet::Kind::Grid || index.kind != CodeSet::Kind::Grid) {
    fail(Errc::Unsupported, "code-domain search needs grid codes; decode PQ codes first");
  }
  if (queries.geometry != index.geometry) fail(Errc::IncompatibleGeometry, "query and index geometries differ");
  if (queries.bits != index.bits) fail(Errc::BitWidthMismatch, "query and index bit widths differ");
  require_same_dim(queries.dim, index.dim, "knn_search");
  bool ok = false;
  switch (kind) {
    case DistanceKind::Hamming:
      ok = index.bits == 1;
      break;
    case DistanceKind::FlatTorusL1:
    case DistanceKind::FlatTorusL2:
    case DistanceKind::FlatTorusL2Squared:
      ok = index.geometry == Geometry::FlatTorus;
      break;
    case DistanceKind::EuclideanL2:
      ok = index.geometry != Geometry::FlatTorus;
      break;
    case DistanceKind::CosineClifford:
      ok = false;
      break;
  }
  if (!ok) {
    fail(Errc::IncompatibleGeometry, std::string(distance_name(kind)) + " is not defined on " +
                                         std::to_string(index.bits) + "-bit " +
                                         std::string(geometry_name(index.geometry)) + " codes");
  }
  return CodeDistance{queries, index, prepare_rows(queries), prepare_rows(index), kind};
}

double label_agreement(const std::vector<Label>& labels, const std::vector<std::size_t>& nn) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < nn.size(); ++i) hits += labels[i] == labels[nn[i]] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(nn.size());
}

// ---- few-shot prototypes ------------------------------------------------------

// Re-projects a mean vector onto the geometry in place. Degenerate parts take
// the corresponding values of `fallback`; returns the number of such parts.
std::size_t reproject_mean(Geometry g, std::span<double> mean, std::span<const double> fallback) {
  std::size_t degenerate = 0;
  switch (g) {
    case Geometry::Euclidean:
      break;
    case Geometry::Hypersphere: {
      const double norm = std::sqrt(std::inner_product(mean.begin(), mean.end(), mean.begin(), 0.0));
      if (norm <= kDegenerateNorm) {
        std::copy(fallback.begin(), fallback.end(), mean.begin());
        ++degenerate;
      } else {
        for (double& x : mean) x /= norm;
      }
      break;
    }
    case Geometry::Clifford:
    case Geometry::FlatTorus: {
      const std::size_t pairs = mean.size() / 2;
      const double r = std::sqrt(1.0 / static_cast<double>(pairs));
      for (std::size_t p = 0; p < pairs; ++p) {
        const double s = mean[2 * p], c = mean[2 * p + 1];
        const double n = std::hypot(s, c);
        if (n <= kDegenerateNorm) {
          mean[2 * p] = fallback[2 * p];
          mean[2 * p + 1] = fallback[2 * p + 1];
          ++degenerate;
        } else {
          mean[2 * p] = r * s / n;
          mean[2 * p + 1] = r * c / n;
        }
      }
      break;
    }
  }
  return degenerate;
}

}  // namespace

DistanceKind default_distance(Geometry g) noexcept {
  switch (g) {
    case Geometry::Hypersphere:
    case Geometry::Clifford:
      return DistanceKind::CosineClifford;
    case Geometry::FlatTorus:
      return DistanceKind::FlatTorusL2;
    case Geometry::Euclidean:
      break;
  }
  return DistanceKind::EuclideanL2;
}

std::vector<RankedList> knn_search(const EmbeddingSet& queries, const EmbeddingSet& index, std::size_t k,
                                   DistanceKind kind) {
  const RowDistance dist = real_distance(queries, index, kind);
  return rank_all(queries.size(), index.size(), k, dist);
}

std::vector<RankedList> knn_search(const CodeSet& queries, const CodeSet& index, std::size_t k, DistanceKind kind) {
  const CodeDistance dist = code_distance(queries, index, kind);
  return rank_all(queries.size(), index.size(), k, std::cref(dist));
}

std::vector<std::size_t> nearest_other(const EmbeddingSet& set, DistanceKind kind) {
  const RowDistance dist = real_distance(set, set, kind);
  return nearest_excluding_self(set.size(), dist);
}

std::vector<std::size_t> nearest_other(const CodeSet& set, DistanceKind kind) {
  const CodeDistance dist = code_distance(set, set, kind);
  return nearest_excluding_self(set.size(), std::cref(dist));
}

double precision_at_1(const EmbeddingSet& set, DistanceKind kind) {
  if (!set.has_labels()) fail(Errc::MissingLabels, "precision@1 needs labels");
  return label_agreement(*set.labels, nearest_other(set, kind));
}

double precision_at_1(const CodeSet& set, DistanceKind kind) {
  if (!set.has_labels()) fail(Errc::MissingLabels, "precision@1 needs labels");
  return label_agreement(*set.labels, nearest_other(set, kind));
}

FewShotResult few_shot_eval(const EmbeddingSet& support_pool, const EmbeddingSet& queries, std::size_t n_shot,
                            std::size_t n_episodes, std::uint64_t seed) {
  if (!support_pool.has_labels() || !queries.has_labels()) fail(Errc::MissingLabels, "few-shot needs labels");
  if (support_pool.geometry != queries.geometry) fail(Errc::IncompatibleGeometry, "support and query geometries differ");
  require_same_dim(support_pool.dim, queries.dim, "few_shot_eval");
  if (n_shot == 0 || n_episodes == 0) fail(Errc::InvariantViolation, "few-shot needs n_shot >= 1 and episodes >= 1");
  if (queries.size() == 0) fail(Errc::EmptySet, "few-shot query set is empty");

  const Geometry g = support_pool.geometry;
  // flat-torus prototypes are circular means, taken in the Clifford lift
  const bool lift = g == Geometry::FlatTorus;
  const EmbeddingSet pool = lift ? unit_norm_view(support_pool) : support_pool;
  const std::size_t pdim = pool.dim;

  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < pool.size(); ++i) by_class[(*pool.labels)[i]].push_back(i);
  for (const auto& [label, members] : by_class) {
    if (members.size() < n_shot) {
      fail(Errc::InsufficientSupport, "class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                                          " support points, " + std::to_string(n_shot) + " requested");
    }
  }

  const DistanceKind kind = default_distance(g);
  Rng rng(seed);
  FewShotResult result;
  std::vector<double> prototypes(by_class.size() * pdim);
  std::vector<double> flat_proto(support_pool.dim);
  std::vector<Label> proto_labels;
  proto_labels.reserve(by_class.size());

  for (std::size_t e = 0; e < n_episodes; ++e) {
    proto_labels.clear();
    std::size_t c = 0;
    for (auto& [label, members] : by_class) {
      for (std::size_t s = 0; s < n_shot; ++s) {
        const std::size_t j = s + static_cast<std::size_t>(rng.below(members.size() - s));
        std::swap(members[s], members[j]);
      }
      auto proto = std::span<double>(prototypes).subspan(c * pdim, pdim);
      std::fill(proto.begin(), proto.end(), 0.0);
      for (std::size_t s = 0; s < n_shot; ++s) {
        const auto r = pool.row(members[s]);
        for (std::size_t d = 0; d < pdim; ++d) proto[d] += r[d];
      }
      for (double& x : proto) x /= static_cast<double>(n_shot);
      result.degenerate_prototypes += reproject_mean(lift ? Geometry::Clifford : g, proto, pool.row(members[0]));
      if (lift) {
        clifford_to_flat_into(proto, flat_proto);
        std::copy(flat_proto.begin(), flat_proto.end(), prototypes.begin() + static_cast<std::ptrdiff_t>(c * pdim));
      }
      proto_labels.push_back(label);
      ++c;
    }

    const std::size_t qdim = support_pool.dim;
    std::size_t correct = 0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_c = 0;
      for (std::size_t p = 0; p < proto_labels.size(); ++p) {
        const auto proto = std::span<const double>(prototypes).subspan(p * pdim, qdim);
        const double d = distance(kind, queries.row(q), proto);
        if (d < best) {
          best = d;
          best_c = p;
        }
      }
      correct += proto_labels[best_c] == (*queries.labels)[q] ? 1 : 0;
    }
    result.episode_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(queries.size()));
  }
  result.mean_accuracy = std::accumulate(result.episode_accuracy.begin(), result.episode_accuracy.end(), 0.0) /
                         static_cast<double>(n_episodes);
  return result;
}

std::vector<EvalReport> eval_pipeline(const EmbeddingSet& trained, const std::optional<QuantConfig>& quant,
                                      const EvalContext& ctx) {
  if (!trained.has_labels()) fail(Errc::MissingLabels, "evaluation needs labels");
  const EvalReport base{ctx.geometry.empty() ? std::string(geometry_name(trained.geometry)) : ctx.geometry,
                        ctx.dim == 0 ? trained.dim : ctx.dim,
                        ctx.koleo_weight,
                        quant ? quant->name() : std::string("none"),
                        "",
                        0.0,
                        ctx.seed};
  std::vector<EvalReport> out;
  const auto add = [&](std::string metric, double value) {
    EvalReport r = base;
    r.metric = std::move(metric);
    r.value = value;
    out.push_back(std::move(r));
  };
  const auto add_flat_routes = [&](const EmbeddingSet& flat) {
    add("precision_at_1_flat_l1", precision_at_1(flat, DistanceKind::FlatTorusL1));
    add("precision_at_1_flat_l2", precision_at_1(flat, DistanceKind::FlatTorusL2));
  };

  if (!quant) {
    add("precision_at_1", precision_at_1(unit_norm_view(trained), DistanceKind::CosineClifford));
    if (is_torus(trained.geometry)) add_flat_routes(quantization_input(trained));
    add("circular_variance", circular_variance(trained));
    return out;
  }

  const QuantizedSet q = quantize(trained, *quant, ctx.seed);
  add("bits_per_vector", static_cast<double>(bits_per_vector(*quant, trained.dim, trained.geometry)));

  if (!quant->is_pq() && quant->bits == 1) {
    add("precision_at_1", precision_at_1(q.codes, DistanceKind::Hamming));
    return out;
  }

  add("precision_at_1", precision_at_1(unit_norm_view(q.reconstruction), DistanceKind::CosineClifford));
  if (!is_torus(trained.geometry)) return out;
  add_flat_routes(q.reconstruction);

  if (!quant->is_pq() && quant->bits == 8) {
    const std::pair<DistanceKind, DistanceKind> routes[] = {
        {DistanceKind::FlatTorusL1, DistanceKind::FlatTorusL1},
        {DistanceKind::FlatTorusL2, DistanceKind::FlatTorusL2Squared},
    };
    for (const auto& [float_kind, int_kind] : routes) {
      const auto int_nn = nearest_other(q.codes, int_kind);
      if (int_nn != nearest_other(q.reconstruction, float_kind)) {
        fail(Errc::InvariantViolation, "integer and float " + std::string(distance_name(float_kind)) +
                                           " rankings disagree on 8-bit torus codes");
      }
      add(int_kind == DistanceKind::FlatTorusL1 ? "precision_at_1_int_l1" : "precision_at_1_int_l2sq",
          label_agreement(*q.codes.labels, int_nn));
    }
  }
  return out;
}

std::optional<double> find_metric(const std::vector<EvalReport>& reports, const std::string& metric) {
  for (const auto& r : reports) {
    if (r.metric == metric) return r.value;
  }
  return std::nullopt;
}

void write_reports_csv(std::ostream& os, const std::vector<EvalReport>& reports) {
  os << "geometry,D,koleo_weight,quant,metric,value,seed\n";
  char buf[64];
  for (const auto& r : reports) {
    os << r.geometry << ',' << r.dim << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.koleo_weight);
    os << buf << ',' << r.quant << ',' << r.metric << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    os << buf << ',' << r.seed << '\n';
  }
}

void write_reports_json(std::ostream& os, const std::vector<EvalReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    arr.push_back({{"geometry", r.geometry},
                   {"D", r.dim},
                   {"koleo_weight", r.koleo_weight},
                   {"quant", r.quant},
                   {"metric", r.metric},
                   {"value", r.value},
                   {"seed", r.seed}});
  }
  os << arr.dump(2) << '\n';
}

}  // namespace torus
