#include "torus/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "torus/errors.hpp"
#include "torus/rng.hpp"

namespace torus {

std::string_view train_geometry_name(TrainGeometry g) noexcept {
  switch (g) {
    case TrainGeometry::Hypersphere: return "hypersphere";
    case TrainGeometry::TorusC: return "torusC";
    case TrainGeometry::TorusN: return "torusN";
  }
  return "unknown";
}

std::optional<TrainGeometry> parse_train_geometry(std::string_view name) noexcept {
  if (name == "hypersphere" || name == "sphere") return TrainGeometry::Hypersphere;
  if (name == "torusC") return TrainGeometry::TorusC;
  if (name == "torusN") return TrainGeometry::TorusN;
  return std::nullopt;
}

Geometry output_geometry(TrainGeometry g) noexcept {
  return g == TrainGeometry::Hypersphere ? Geometry::Hypersphere : Geometry::Clifford;
}

std::size_t projected_dim(TrainGeometry g, std::size_t raw_dim) noexcept {
  return g == TrainGeometry::TorusC ? 2 * raw_dim : raw_dim;
}

std::string_view model_kind_name(ModelKind k) noexcept {
  return k == ModelKind::LinearEncoder ? "linear" : "free";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept {
  if (name == "linear") return ModelKind::LinearEncoder;
  if (name == "free") return ModelKind::FreeEmbedding;
  return std::nullopt;
}

// ---- projections -------------------------------------------------------------

void project_for_geometry(std::span<const double> raw, TrainGeometry g, std::span<double> out) {
  switch (g) {
    case TrainGeometry::Hypersphere: l2_normalize_into(raw, out); return;
    case TrainGeometry::TorusC: clifford_project_into(raw, out); return;
    case TrainGeometry::TorusN: l2p_project_into(raw, out); return;
  }
}

ProjectedVec project_for_geometry(const EuclideanVec& raw, TrainGeometry g) {
  switch (g) {
    case TrainGeometry::Hypersphere: return l2_normalize(raw);
    case TrainGeometry::TorusC: return clifford_project(raw);
    case TrainGeometry::TorusN: break;
  }
  return l2p_project(raw);
}

void project_backward(std::span<const double> raw, TrainGeometry g, std::span<const double> grad_out,
                      std::span<double> grad_raw) {
  require_same_dim(grad_out.size(), projected_dim(g, raw.size()), "project_backward");
  require_same_dim(grad_raw.size(), raw.size(), "project_backward");
  const std::size_t d = raw.size();
  switch (g) {
    case TrainGeometry::Hypersphere: {
      double n2 = 0.0;
      for (double x : raw) n2 += x * x;
      const double n = std::sqrt(n2);
      if (!(n > kDegenerateNorm)) fail(Errc::ZeroVector, "cannot differentiate at the zero vector");
      double zg = 0.0;
      for (std::size_t i = 0; i < d; ++i) zg += raw[i] / n * grad_out[i];
      for (std::size_t i = 0; i < d; ++i) grad_raw[i] = (grad_out[i] - raw[i] / n * zg) / n;
      return;
    }
    case TrainGeometry::TorusC: {
      const double s = std::sqrt(1.0 / static_cast<double>(d));
      for (std::size_t i = 0; i < d; ++i) {
        grad_raw[i] = s * (grad_out[2 * i] * std::cos(raw[i]) - grad_out[2 * i + 1] * std::sin(raw[i]));
      }
      return;
    }
    case TrainGeometry::TorusN: {
      if (d % 2 != 0) fail(Errc::DimensionMismatch, "torusN needs an even raw dimension");
      const double s = std::sqrt(2.0 / static_cast<double>(d));
      for (std::size_t p = 0; p < d / 2; ++p) {
        const double x = raw[2 * p], y = raw[2 * p + 1];
        const double n = std::hypot(x, y);
        if (!(n > kDegenerateNorm)) fail(Errc::ZeroPair, "cannot differentiate at a zero pair", p);
        const double ux = x / n, uy = y / n;
        const double gx = grad_out[2 * p], gy = grad_out[2 * p + 1];
        const double radial = ux * gx + uy * gy;
        grad_raw[2 * p] = s * (gx - ux * radial) / n;
        grad_raw[2 * p + 1] = s * (gy - uy * radial) / n;
      }
      return;
    }
  }
}

// ---- losses ------------------------------------------------------------------

namespace {

void check_shape(std::span<const double> z, std::size_t dim, std::size_t n) {
  if (dim == 0 || z.size() != n * dim) fail(Errc::DimensionMismatch, "embeddings are not n x dim");
}

double dot(const double* a, const double* b, std::size_t d) noexcept {
  double acc = 0.0;
  for (std::size_t k = 0; k < d; ++k) acc += a[k] * b[k];
  return acc;
}

}  // namespace

LossGrad supcon_loss(std::span<const double> z, std::size_t dim, std::span<const Label> labels,
                     double temperature) {
  const std::size_t n = labels.size();
  if (n < 2) fail(Errc::BatchTooSmall, "SupCon needs at least two items per batch");
  check_shape(z, dim, n);
  if (!(temperature > 0.0)) fail(Errc::InvariantViolation, "temperature must be positive");

  LossGrad out;
  out.grad.assign(z.size(), 0.0);
  std::vector<double> sim(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double s = dot(&z[i * dim], &z[j * dim], dim) / temperature;
      sim[i * n + j] = s;
      sim[j * n + i] = s;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t positives = 0;
    double pos_sum = 0.0;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      top = std::max(top, sim[i * n + j]);
      if (labels[j] == labels[i]) {
        ++positives;
        pos_sum += sim[i * n + j];
      }
    }
    if (positives == 0) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) denom += std::exp(sim[i * n + j] - top);
    }
    const double lse = top + std::log(denom);
    const double inv_p = 1.0 / static_cast<double>(positives);
    out.loss += lse - pos_sum * inv_p;

    double* gi = &out.grad[i * dim];
    const double* zi = &z[i * dim];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double c = std::exp(sim[i * n + j] - lse);
      if (labels[j] == labels[i]) c -= inv_p;
      c /= temperature;
      const double* zj = &z[j * dim];
      double* gj = &out.grad[j * dim];
      for (std::size_t k = 0; k < dim; ++k) {
        gi[k] += c * zj[k];
        gj[k] += c * zi[k];
      }
    }
  }
  return out;
}

LossGrad koleo_loss(std::span<const double> z, std::size_t dim) {
  if (dim == 0 || z.size() % dim != 0) fail(Errc::DimensionMismatch, "embeddings are not n x dim");
  const std::size_t n = z.size() / dim;
  if (n < 2) fail(Errc::BatchTooSmall, "KoLeo needs at least two points");

  LossGrad out;
  out.grad.assign(z.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = &z[i * dim];
    double best = std::numeric_limits<double>::infinity();
    std::size_t nn = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double* zj = &z[j * dim];
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = zi[k] - zj[k];
        d2 += d * d;
      }
      if (d2 < best) {
        best = d2;
        nn = j;
      }
    }
    const double dist = std::sqrt(best);
    if (!(dist > kDegenerateNorm)) {
      fail(Errc::DuplicatePoints, "points " + std::to_string(i) + " and " + std::to_string(nn) + " coincide", i);
    }
    out.loss -= inv_n * std::log(dist);
    // d(-log ||zi - zj||)/dzi = -(zi - zj) / ||zi - zj||^2
    const double* zj = &z[nn * dim];
    double* gi = &out.grad[i * dim];
    double* gj = &out.grad[nn * dim];
    for (std::size_t k = 0; k < dim; ++k) {
      const double g = inv_n * (zi[k] - zj[k]) / best;
      gi[k] -= g;
      gj[k] += g;
    }
  }
  return out;
}

ClipResult clip_gradients(std::span<double> grads, double threshold) {
  if (!(threshold > 0.0)) fail(Errc::InvariantViolation, "clip threshold must be positive");
  double n2 = 0.0;
  for (double g : grads) n2 += g * g;
  ClipResult r{std::sqrt(n2), false};
  if (r.norm > threshold) {
    const double scale = threshold / r.norm;
    for (double& g : grads) g *= scale;
    r.clipped = true;
  }
  return r;
}

double circular_variance(std::span<const double> unit_vectors, std::size_t dim) {
  if (dim == 0 || unit_vectors.empty()) fail(Errc::EmptySet, "circular variance of an empty set");
  if (unit_vectors.size() % dim != 0) fail(Errc::DimensionMismatch, "data is not n x dim");
  const std::size_t n = unit_vectors.size() / dim;
  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) mean[k] += unit_vectors[i * dim + k];
  }
  double n2 = 0.0;
  for (double m : mean) n2 += (m / static_cast<double>(n)) * (m / static_cast<double>(n));
  return std::clamp(1.0 - std::sqrt(n2), 0.0, 1.0);
}

double circular_variance(const EmbeddingSet& set) {
  if (set.size() == 0) fail(Errc::EmptySet, "circular variance of an empty set");
  const EmbeddingSet unit = unit_norm_view(set);
  return circular_variance(unit.data, unit.dim);
}

// ---- data ----------------------------------------------------------------------

Dataset make_synthetic_dataset(const SyntheticDatasetConfig& config) {
  if (config.n_classes < 1 || config.n_per_class < 1 || config.input_dim < 1) {
    fail(Errc::InvariantViolation, "synthetic dataset needs classes, points and input dim >= 1");
  }
  Rng rng(config.seed);
  std::vector<double> centres(config.n_classes * config.input_dim);
  for (double& c : centres) c = rng.normal();

  Dataset d;
  d.input_dim = config.input_dim;
  const auto draw = [&](std::size_t per_class, std::vector<double>& xs, std::vector<Label>& ys) {
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t c = 0; c < config.n_classes; ++c) {
        for (std::size_t k = 0; k < config.input_dim; ++k) {
          xs.push_back(centres[c * config.input_dim + k] + config.spread * rng.normal());
        }
        ys.push_back(static_cast<Label>(c));
      }
    }
  };
  draw(config.n_per_class, d.train_x, d.train_y);
  draw(config.n_test_per_class, d.test_x, d.test_y);
  return d;
}

// ---- training -----------------------------------------------------------------

void TrainConfig::validate() const {
  const auto bad = [](const std::string& what) { fail(Errc::InvariantViolation, what); };
  if (embed_dim < 1) bad("embed_dim must be >= 1");
  if (geometry == TrainGeometry::TorusN && embed_dim % 2 != 0) bad("torusN needs an even embed_dim");
  if (!(koleo_weight >= 0.0)) bad("koleo_weight must be >= 0");
  if (!(supcon_weight >= 0.0)) bad("supcon_weight must be >= 0");
  if (!(clip_threshold > 0.0)) bad("clip threshold must be > 0");
  if (!(learning_rate > 0.0)) bad("learning rate must be > 0");
  if (!(temperature > 0.0)) bad("temperature must be > 0");
  if (batch_size < 2) bad("batch size must be >= 2");
}

namespace {

class Adam {
 public:
  explicit Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i] * grads[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

constexpr double kActivationLimit = 1e12;
constexpr double kJitter = 1e-8;

struct Trainer {
  const Dataset& data;
  const TrainConfig& cfg;
  Model model;
  Rng rng;
  TrainLog log;
  std::size_t zdim;

  Trainer(const Dataset& d, const TrainConfig& c)
      : data(d), cfg(c), rng(c.seed), zdim(projected_dim(c.geometry, c.embed_dim)) {
    model.kind = cfg.model;
    model.geometry = cfg.geometry;
    model.input_dim = data.input_dim;
    model.embed_dim = cfg.embed_dim;
    if (cfg.model == ModelKind::LinearEncoder) {
      model.params.resize(cfg.embed_dim * data.input_dim);
      const double scale = 1.0 / std::sqrt(static_cast<double>(data.input_dim));
      for (double& w : model.params) w = scale * rng.normal();
    } else {
      model.params.resize(data.n_train() * cfg.embed_dim);
      for (double& w : model.params) w = rng.normal();
    }
  }

  // Raw output for training point `idx`. Returns false on divergence.
  bool raw_output(std::size_t idx, std::span<double> raw) {
    const std::size_t d = cfg.embed_dim;
    if (model.kind == ModelKind::LinearEncoder) {
      const double* x = &data.train_x[idx * data.input_dim];
      for (std::size_t r = 0; r < d; ++r) raw[r] = dot(&model.params[r * data.input_dim], x, data.input_dim);
    } else {
      std::copy_n(&model.params[idx * d], d, raw.begin());
    }
    double n2 = 0.0;
    for (double v : raw) n2 += v * v;
    if (!std::isfinite(n2) || std::sqrt(n2) > kActivationLimit) {
      log.diverged = true;
      log.divergence_reason = "raw activation norm exceeded 1e12";
      return false;
    }
    if (cfg.geometry == TrainGeometry::TorusN) {
      for (std::size_t p = 0; p < d / 2; ++p) {
        if (std::hypot(raw[2 * p], raw[2 * p + 1]) < kDegenerateNorm) {
          raw[2 * p] += kJitter * rng.normal();
          raw[2 * p + 1] += kJitter * rng.normal();
          ++log.jitter_events;
        }
      }
    }
    if (cfg.geometry == TrainGeometry::Hypersphere && !(std::sqrt(n2) > kDegenerateNorm)) {
      for (double& v : raw) v += kJitter * rng.normal();
      ++log.jitter_events;
    }
    return true;
  }

  bool forward_all(EmbeddingSet& out) {
    out.geometry = output_geometry(cfg.geometry);
    out.dim = zdim;
    out.labels = data.train_y;
    out.data.assign(data.n_train() * zdim, 0.0);
    std::vector<double> raw(cfg.embed_dim);
    for (std::size_t i = 0; i < data.n_train(); ++i) {
      if (!raw_output(i, raw)) return false;
      project_for_geometry(raw, cfg.geometry, out.row(i));
    }
    return true;
  }

  void run() {
    const std::size_t n = data.n_train();
    const std::size_t d = cfg.embed_dim;
    Adam adam(model.params.size(), cfg.learning_rate);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grads(model.params.size());
    std::vector<double> raw, z, graw(d);
    std::vector<Label> labels;
    EmbeddingSet snapshot;

    double best = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

      EpochLog e;
      e.epoch = epoch;
      std::size_t batches = 0;
      for (std::size_t start = 0; start + 2 <= n; start += cfg.batch_size) {
        const std::size_t b = std::min(cfg.batch_size, n - start);
        if (b < 2) break;
        raw.assign(b * d, 0.0);
        z.assign(b * zdim, 0.0);
        labels.resize(b);
        for (std::size_t r = 0; r < b; ++r) {
          const std::size_t idx = order[start + r];
          if (!raw_output(idx, std::span<double>(raw).subspan(r * d, d))) return;
          project_for_geometry(std::span<const double>(raw).subspan(r * d, d), cfg.geometry,
                               std::span<double>(z).subspan(r * zdim, zdim));
          labels[r] = data.train_y[idx];
        }

        std::vector<double> gz(z.size(), 0.0);
        double supcon = 0.0, koleo = 0.0;
        if (cfg.supcon_weight > 0.0) {
          LossGrad s = supcon_loss(z, zdim, labels, cfg.temperature);
          supcon = s.loss;
          for (std::size_t k = 0; k < gz.size(); ++k) gz[k] += cfg.supcon_weight * s.grad[k];
        }
        if (cfg.koleo_weight > 0.0) {
          try {
            LossGrad k = koleo_loss(z, zdim);
            koleo = k.loss;
            for (std::size_t q = 0; q < gz.size(); ++q) gz[q] += cfg.koleo_weight * k.grad[q];
          } catch (const Error& err) {
            if (err.code() != Errc::DuplicatePoints) throw;
            log.diverged = true;
            log.divergence_reason = "embeddings collapsed onto duplicate points";
            return;
          }
        }
        const double total = cfg.supcon_weight * supcon + cfg.koleo_weight * koleo;
        if (!std::isfinite(total)) {
          log.diverged = true;
          log.divergence_reason = "non-finite loss";
          return;
        }

        std::fill(grads.begin(), grads.end(), 0.0);
        for (std::size_t r = 0; r < b; ++r) {
          const std::size_t idx = order[start + r];
          project_backward(std::span<const double>(raw).subspan(r * d, d), cfg.geometry,
                           std::span<const double>(gz).subspan(r * zdim, zdim), graw);
          if (model.kind == ModelKind::LinearEncoder) {
            const double* x = &data.train_x[idx * data.input_dim];
            for (std::size_t row = 0; row < d; ++row) {
              double* gw = &grads[row * data.input_dim];
              for (std::size_t k = 0; k < data.input_dim; ++k) gw[k] += graw[row] * x[k];
            }
          } else {
            for (std::size_t k = 0; k < d; ++k) grads[idx * d + k] += graw[k];
          }
        }
        const ClipResult clip = clip_gradients(grads, cfg.clip_threshold);
        e.grad_norm = std::max(e.grad_norm, clip.norm);
        e.clipped = e.clipped || clip.clipped;
        adam.step(model.params, grads);

        e.supcon_loss += supcon;
        e.koleo_loss += koleo;
        ++batches;
      }
      if (batches > 0) {
        e.supcon_loss /= static_cast<double>(batches);
        e.koleo_loss /= static_cast<double>(batches);
      }
      if (!forward_all(snapshot)) return;
      e.circ_var = circular_variance(snapshot.data, snapshot.dim);
      log.epochs.push_back(e);

      const double epoch_loss = cfg.supcon_weight * e.supcon_loss + cfg.koleo_weight * e.koleo_loss;
      if (epoch_loss < best - cfg.min_delta) {
        best = epoch_loss;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        log.early_stopped = true;
        return;
      }
    }
  }
};

}  // namespace

std::vector<double> default_koleo_sweep() { return {0.0, 10.0, 100.0, 1000.0}; }

TrainResult train(const Dataset& data, const TrainConfig& config) {
  config.validate();
  if (data.n_train() < 2) fail(Errc::BatchTooSmall, "training needs at least two points");
  Trainer t(data, config);
  t.run();
  TrainResult r;
  if (!t.log.diverged) t.forward_all(r.train_embeddings);
  r.model = std::move(t.model);
  r.log = std::move(t.log);
  return r;
}

EmbeddingSet embed(const Model& model, std::span<const double> inputs, std::optional<std::vector<Label>> labels) {
  if (model.kind != ModelKind::LinearEncoder) {
    fail(Errc::Unsupported, "free embeddings cannot embed new inputs");
  }
  if (inputs.size() % model.input_dim != 0) fail(Errc::DimensionMismatch, "inputs are not n x input_dim");
  const std::size_t n = inputs.size() / model.input_dim;
  const std::size_t zdim = projected_dim(model.geometry, model.embed_dim);
  EmbeddingSet out;
  out.geometry = output_geometry(model.geometry);
  out.dim = zdim;
  out.labels = std::move(labels);
  out.data.assign(n * zdim, 0.0);
  std::vector<double> raw(model.embed_dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < model.embed_dim; ++r) {
      raw[r] = dot(&model.params[r * model.input_dim], &inputs[i * model.input_dim], model.input_dim);
    }
    project_for_geometry(raw, model.geometry, out.row(i));
  }
  return out;
}

void write_train_log_csv(std::ostream& os, const TrainLog& log) {
  os << "epoch,supcon_loss,koleo_loss,circ_var,grad_norm,clipped_flag\n";
  const auto prec = os.precision(10);
  for (const auto& e : log.epochs) {
    os << e.epoch << ',' << e.supcon_loss << ',' << e.koleo_loss << ',' << e.circ_var << ',' << e.grad_norm << ','
       << (e.clipped ? 1 : 0) << '\n';
  }
  os.precision(prec);
}

}  // namespace torus
