#include "torus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

#include "torus/errors.hpp"
#include "torus/rng.hpp"

namespace torus {

std::string_view distance_name(DistanceKind kind) noexcept {
  switch (kind) {
    case DistanceKind::CosineClifford: return "cosine";
    case DistanceKind::FlatTorusL1: return "flat-l1";
    case DistanceKind::FlatTorusL2: return "flat-l2";
    case DistanceKind::FlatTorusL2Squared: return "flat-l2sq";
    case DistanceKind::EuclideanL2: return "euclidean";
    case DistanceKind::Hamming: return "hamming";
  }
  return "unknown";
}

std::optional<DistanceKind> parse_distance(std::string_view name) noexcept {
  if (name == "cosine") return DistanceKind::CosineClifford;
  if (name == "flat-l1" || name == "l1") return DistanceKind::FlatTorusL1;
  if (name == "flat-l2" || name == "l2") return DistanceKind::FlatTorusL2;
  if (name == "flat-l2sq" || name == "l2sq") return DistanceKind::FlatTorusL2Squared;
  if (name == "euclidean") return DistanceKind::EuclideanL2;
  if (name == "hamming") return DistanceKind::Hamming;
  return std::nullopt;
}

bool compatible(DistanceKind kind, Geometry g) noexcept {
  switch (kind) {
    case DistanceKind::CosineClifford: return g == Geometry::Hypersphere || g == Geometry::Clifford;
    case DistanceKind::FlatTorusL1:
    case DistanceKind::FlatTorusL2:
    case DistanceKind::FlatTorusL2Squared: return g == Geometry::FlatTorus;
    case DistanceKind::EuclideanL2: return true;
    case DistanceKind::Hamming: return false;
  }
  return false;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size(), "cosine_distance");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return 1.0 - dot;
}

double cosine_distance(const CliffordVec& a, const CliffordVec& b) {
  return cosine_distance(a.coords(), b.coords());
}

double cosine_distance(const SphereVec& a, const SphereVec& b) {
  return cosine_distance(a.coords(), b.coords());
}

double flat_torus_distance_squared(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size(), "flat_torus_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = torus_delta(a[i], b[i]);
    acc += d * d;
  }
  return acc;
}

double flat_torus_distance(std::span<const double> a, std::span<const double> b, int p) {
  if (p == 2) return std::sqrt(flat_torus_distance_squared(a, b));
  if (p != 1) fail(Errc::Unsupported, "flat_torus_distance supports p = 1 or 2");
  require_same_dim(a.size(), b.size(), "flat_torus_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += torus_delta(a[i], b[i]);
  return acc;
}

double flat_torus_distance(const FlatTorusVec& a, const FlatTorusVec& b, int p) {
  return flat_torus_distance(a.coords(), b.coords(), p);
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size(), "euclidean_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double distance(DistanceKind kind, std::span<const double> a, std::span<const double> b) {
  switch (kind) {
    case DistanceKind::CosineClifford: return cosine_distance(a, b);
    case DistanceKind::FlatTorusL1: return flat_torus_distance(a, b, 1);
    case DistanceKind::FlatTorusL2: return flat_torus_distance(a, b, 2);
    case DistanceKind::FlatTorusL2Squared: return flat_torus_distance_squared(a, b);
    case DistanceKind::EuclideanL2: return euclidean_distance(a, b);
    case DistanceKind::Hamming: break;
  }
  fail(Errc::IncompatibleGeometry, "hamming distance needs bit-packed grid codes");
}

double cc_norm(std::span<const double> a) {
  double acc = 0.0;
  for (double x : a) {
    // 1 - cos(2 pi x) = 2 sin^2(pi x)
    const double s = std::sin(std::numbers::pi * x);
    acc += 2.0 * s * s;
  }
  return acc;
}

double cc_norm(const FlatTorusVec& a) { return cc_norm(a.coords()); }

DistanceMatrix pairwise_distances(const EmbeddingSet& set, DistanceKind kind) {
  if (!compatible(kind, set.geometry)) {
    fail(Errc::IncompatibleGeometry, std::string(distance_name(kind)) + " is undefined on " +
                                         std::string(geometry_name(set.geometry)) + " data");
  }
  const std::size_t n = set.size();
  DistanceMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // cosine of identical unit vectors can come out at -1e-16
      const double d = std::max(0.0, distance(kind, set.row(i), set.row(j)));
      m(i, j) = d;
      m(j, i) = d;
    }
  }
  return m;
}

double space_diameter(DistanceKind kind, std::size_t dim) {
  const double d = static_cast<double>(dim);
  switch (kind) {
    case DistanceKind::CosineClifford: return 2.0;
    case DistanceKind::FlatTorusL1: return d / 2.0;
    case DistanceKind::FlatTorusL2: return std::sqrt(d) / 2.0;
    case DistanceKind::FlatTorusL2Squared: return d / 4.0;
    case DistanceKind::EuclideanL2: return 2.0;
    case DistanceKind::Hamming: return d;
  }
  return 1.0;
}

DistanceHistogram distance_distribution_sim(Geometry geometry, DistanceKind kind, std::size_t dim,
                                            std::size_t n_pairs, std::uint64_t seed, std::size_t bins) {
  const bool ok = (geometry == Geometry::Hypersphere && kind == DistanceKind::CosineClifford) ||
                  (geometry == Geometry::Clifford && kind == DistanceKind::CosineClifford) ||
                  (geometry == Geometry::FlatTorus && compatible(kind, Geometry::FlatTorus));
  if (!ok) {
    fail(Errc::IncompatibleGeometry, std::string(distance_name(kind)) + " cannot be simulated on " +
                                         std::string(geometry_name(geometry)));
  }
  if (dim < 1 || n_pairs < 1 || bins < 1) {
    fail(Errc::InvariantViolation, "simulation needs dim, pairs and bins >= 1");
  }

  Rng rng(seed);
  const std::size_t ambient = geometry == Geometry::Clifford ? 2 * dim : dim;
  std::vector<double> a(ambient), b(ambient), flat_a(dim), flat_b(dim);

  const auto sample = [&](std::vector<double>& out, std::vector<double>& flat) {
    switch (geometry) {
      case Geometry::Hypersphere: {
        std::vector<double> g(dim);
        double n = 0.0;
        do {
          n = 0.0;
          for (auto& x : g) {
            x = rng.normal();
            n += x * x;
          }
        } while (!(std::sqrt(n) > kDegenerateNorm));
        l2_normalize_into(g, out);
        break;
      }
      case Geometry::FlatTorus:
        for (auto& x : out) x = rng.uniform();
        break;
      case Geometry::Clifford:
        for (auto& x : flat) x = rng.uniform();
        flat_to_clifford_into(flat, out);
        break;
      case Geometry::Euclidean: break;
    }
  };

  const double diameter = geometry == Geometry::FlatTorus ? space_diameter(kind, dim) : 2.0;
  DistanceHistogram h;
  h.geometry = geometry;
  h.kind = kind;
  h.dim = dim;
  h.pairs = n_pairs;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) h.edges[k] = static_cast<double>(k) / static_cast<double>(bins);

  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < n_pairs; ++t) {
    sample(a, flat_a);
    sample(b, flat_b);
    const double v = std::clamp(distance(kind, a, b) / diameter, 0.0, 1.0);
    sum += v;
    sum_sq += v * v;
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
    ++h.counts[bin];
  }
  const double n = static_cast<double>(n_pairs);
  h.mean = sum / n;
  h.stddev = std::sqrt(std::max(0.0, sum_sq / n - h.mean * h.mean));
  return h;
}

void write_histogram_csv(std::ostream& os, const DistanceHistogram& h) {
  os << "bin_left,bin_right,count\n";
  os << std::fixed << std::setprecision(6);
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    os << h.edges[k] << ',' << h.edges[k + 1] << ',' << h.counts[k] << '\n';
  }
  os.unsetf(std::ios_base::floatfield);
}

}  // namespace torus
