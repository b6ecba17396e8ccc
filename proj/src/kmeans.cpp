#include "torus/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "torus/errors.hpp"

namespace torus {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

struct Points {
  std::span<const double> data;
  std::size_t dim;

  std::size_t size() const noexcept { return data.size() / dim; }
  std::span<const double> operator[](std::size_t i) const noexcept { return data.subspan(i * dim, dim); }
};

void check_shape(std::span<const double> data, std::size_t dim, std::size_t k) {
  if (dim == 0 || data.size() % dim != 0) fail(Errc::DimensionMismatch, "k-means data is not n x dim");
  if (k == 0) fail(Errc::InvariantViolation, "k-means needs k >= 1");
  const std::size_t n = data.size() / dim;
  if (n < k) {
    fail(Errc::TooFewPoints, "k-means with k = " + std::to_string(k) + " needs at least k points, got " +
                                 std::to_string(n));
  }
}

void seed_plus_plus(const Points& pts, std::size_t k, Rng& rng, std::vector<double>& centroids) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.dim;
  centroids.assign(k * dim, 0.0);
  auto place = [&](std::size_t c, std::size_t idx) {
    std::copy_n(pts[idx].begin(), dim, centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
  };

  place(0, rng.below(n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(pts[i], std::span<const double>(centroids).first(dim));

  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t chosen = 0;
    if (!(total > 0.0)) {
      chosen = rng.below(n);
    } else {
      const double r = rng.uniform() * total;
      double cum = 0.0;
      chosen = n;
      std::size_t last_positive = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] > 0.0) last_positive = i;
        cum += d2[i];
        if (cum > r) {
          chosen = i;
          break;
        }
      }
      if (chosen == n) chosen = last_positive;
    }
    place(c, chosen);
    const auto cen = std::span<const double>(centroids).subspan(c * dim, dim);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(pts[i], cen));
  }
}

// Returns the objective; ties go to the lowest centroid index.
double assign(const Points& pts, std::span<const double> centroids, std::size_t k,
              std::vector<std::uint32_t>& assignment) {
  double obj = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(pts[i], centroids.subspan(c * pts.dim, pts.dim));
      if (d < best) {
        best = d;
        best_c = static_cast<std::uint32_t>(c);
      }
    }
    assignment[i] = best_c;
    obj += best;
  }
  return obj;
}

void update(const Points& pts, std::size_t k, std::vector<std::uint32_t>& assignment,
            std::vector<double>& centroids) {
  const std::size_t dim = pts.dim;
  std::vector<double> sums(k * dim, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t c = assignment[i];
    ++counts[c];
    for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += pts[i][j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < dim; ++j) {
      centroids[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    const std::size_t largest =
        static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    const auto cen = std::span<const double>(centroids).subspan(largest * dim, dim);
    std::size_t far = pts.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (assignment[i] != largest) continue;
      const double d = sq_dist(pts[i], cen);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    std::copy_n(pts[far].begin(), dim, centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
    assignment[far] = static_cast<std::uint32_t>(c);
    --counts[largest];
    ++counts[c];
  }
}

}  // namespace

double kmeans_objective(std::span<const double> data, std::size_t dim, std::span<const double> centroids,
                        std::span<const std::uint32_t> assignment) {
  const Points pts{data, dim};
  double obj = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) obj += sq_dist(pts[i], centroids.subspan(assignment[i] * dim, dim));
  return obj;
}

KMeansResult kmeans(std::span<const double> data, std::size_t dim, std::size_t k, Rng& rng, int max_iterations) {
  check_shape(data, dim, k);
  const Points pts{data, dim};
  KMeansResult r;
  seed_plus_plus(pts, k, rng, r.centroids);
  r.assignment.assign(pts.size(), 0);

  std::vector<std::uint32_t> previous;
  for (int it = 0;; ++it) {
    const double obj = assign(pts, r.centroids, k, r.assignment);
    if (!r.objective_history.empty()) {
      const double prev = r.objective_history.back();
      if (obj > prev + 1e-12 * std::max(1.0, prev)) {
        fail(Errc::InvariantViolation, "k-means objective increased from " + std::to_string(prev) + " to " +
                                           std::to_string(obj));
      }
    }
    r.objective_history.push_back(obj);
    if (it >= max_iterations || r.assignment == previous) break;
    previous = r.assignment;
    update(pts, k, r.assignment, r.centroids);
  }
  r.objective = r.objective_history.back();
  return r;
}

KMeansResult kmeans_1d_exact(std::span<const double> values, std::size_t k) {
  check_shape(values, 1, k);
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = values[order[i]];
    s1[i + 1] = s1[i] + x;
    s2[i + 1] = s2[i] + x * x;
  }
  // squared error of sorted segment [i, j)
  const auto cost = [&](std::size_t i, std::size_t j) {
    const double sum = s1[j] - s1[i];
    const double c = (s2[j] - s2[i]) - sum * sum / static_cast<double>(j - i);
    return c > 0.0 ? c : 0.0;
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(n + 1, inf), cur(n + 1, inf);
  // split[c][j]: start of the last segment when j points form c + 1 clusters
  std::vector<std::vector<std::size_t>> split(k, std::vector<std::size_t>(n + 1, 0));
  for (std::size_t j = 1; j <= n; ++j) prev[j] = cost(0, j);

  for (std::size_t c = 1; c < k; ++c) {
    std::fill(cur.begin(), cur.end(), inf);
    auto& opt = split[c];
    // the optimal split point is monotone in j, so solve by divide and conquer
    const auto solve = [&](auto&& self, std::size_t jlo, std::size_t jhi, std::size_t ilo, std::size_t ihi) -> void {
      if (jlo > jhi) return;
      const std::size_t j = jlo + (jhi - jlo) / 2;
      double best = inf;
      std::size_t best_i = ilo;
      for (std::size_t i = ilo; i <= std::min(ihi, j - 1); ++i) {
        const double v = prev[i] + cost(i, j);
        if (v < best) {
          best = v;
          best_i = i;
        }
      }
      cur[j] = best;
      opt[j] = best_i;
      if (j > jlo) self(self, jlo, j - 1, ilo, best_i);
      self(self, j + 1, jhi, best_i, ihi);
    };
    solve(solve, c + 1, n, c, n - 1);
    std::swap(prev, cur);
  }

  KMeansResult r;
  r.centroids.assign(k, 0.0);
  r.assignment.assign(n, 0);
  std::size_t end = n;
  for (std::size_t c = k; c-- > 0;) {
    const std::size_t begin = c == 0 ? 0 : split[c][end];
    r.centroids[c] = (s1[end] - s1[begin]) / static_cast<double>(end - begin);
    for (std::size_t i = begin; i < end; ++i) r.assignment[order[i]] = static_cast<std::uint32_t>(c);
    end = begin;
  }
  r.objective = kmeans_objective(values, 1, r.centroids, r.assignment);
  r.objective_history = {r.objective};
  return r;
}

}  // namespace torus
