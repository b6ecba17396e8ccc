#pragma once

// Desk-scale contrastive training of embeddings in three geometries:
//   hypersphere  L2 normalisation of a D-dim raw output
//   torusC       Clifford projection; the raw output is read as D angles
//   torusN       pairwise L2 normalisation of a D-dim raw output (D even)
//
// All gradients are analytic. The losses return gradients with respect to the
// projected embeddings; `project_backward` carries them back to the raw
// (pre-projection) outputs.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "torus/embedding_set.hpp"
#include "torus/geometry.hpp"

namespace torus {

enum class TrainGeometry { Hypersphere, TorusC, TorusN };

std::string_view train_geometry_name(TrainGeometry g) noexcept;
std::optional<TrainGeometry> parse_train_geometry(std::string_view name) noexcept;
Geometry output_geometry(TrainGeometry g) noexcept;
std::size_t projected_dim(TrainGeometry g, std::size_t raw_dim) noexcept;

// ---- projections -------------------------------------------------------------

using ProjectedVec = std::variant<SphereVec, CliffordVec>;

ProjectedVec project_for_geometry(const EuclideanVec& raw, TrainGeometry g);
void project_for_geometry(std::span<const double> raw, TrainGeometry g, std::span<double> out);

/// grad_raw = J^T grad_out, J the Jacobian of the projection at `raw`.
void project_backward(std::span<const double> raw, TrainGeometry g, std::span<const double> grad_out,
                      std::span<double> grad_raw);

// ---- losses ------------------------------------------------------------------

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // same shape as the embeddings (n x dim)
};

/// Supervised contrastive loss (positives averaged outside the log), summed
/// over anchors; anchors without positives contribute zero.
LossGrad supcon_loss(std::span<const double> z, std::size_t dim, std::span<const Label> labels,
                     double temperature);

/// -(1/n) sum_i log min_{j != i} ||z_i - z_j||. Nearest-neighbour ties go to
/// the lowest index and only that pair receives gradient. Throws
/// DuplicatePoints when a nearest-neighbour distance is <= 1e-12.
LossGrad koleo_loss(std::span<const double> z, std::size_t dim);

struct ClipResult {
  double norm = 0.0;  // global norm before clipping
  bool clipped = false;
};

/// Global-norm clipping in place.
ClipResult clip_gradients(std::span<double> grads, double threshold);

/// 1 - ||mean of unit vectors||. Flat-torus sets are lifted to Clifford first.
double circular_variance(const EmbeddingSet& set);
double circular_variance(std::span<const double> unit_vectors, std::size_t dim);

// ---- data ----------------------------------------------------------------------

struct SyntheticDatasetConfig {
  std::size_t n_classes = 10;
  std::size_t n_per_class = 200;
  std::size_t n_test_per_class = 100;
  std::size_t input_dim = 32;
  double spread = 1.2;
  std::uint64_t seed = 0;
};

/// Gaussian class clusters: centres ~ N(0, I), points = centre + spread * N(0, I).
struct Dataset {
  std::size_t input_dim = 0;
  std::vector<double> train_x;
  std::vector<Label> train_y;
  std::vector<double> test_x;
  std::vector<Label> test_y;

  std::size_t n_train() const noexcept { return train_y.size(); }
  std::size_t n_test() const noexcept { return test_y.size(); }
};

Dataset make_synthetic_dataset(const SyntheticDatasetConfig& config);

// ---- training -----------------------------------------------------------------

/// KoLeo weights swept by the toy benchmark. SupCon is summed over anchors,
/// so these sit a few decades above the per-sample KoLeo scale.
std::vector<double> default_koleo_sweep();

enum class ModelKind { LinearEncoder, FreeEmbedding };

std::string_view model_kind_name(ModelKind k) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept;

struct TrainConfig {
  TrainGeometry geometry = TrainGeometry::Hypersphere;
  ModelKind model = ModelKind::LinearEncoder;
  std::size_t embed_dim = 8;  // raw, pre-projection
  double supcon_weight = 1.0;
  double koleo_weight = 0.0;
  double clip_threshold = 100.0;  // +inf disables clipping
  double learning_rate = 1e-2;
  std::size_t epochs = 100;
  std::size_t batch_size = 200;
  double temperature = 0.1;
  std::size_t patience = 10;
  double min_delta = 1e-4;
  std::uint64_t seed = 0;

  /// Throws InvariantViolation for out-of-range fields.
  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double supcon_loss = 0.0;  // mean over batches
  double koleo_loss = 0.0;
  double circ_var = 0.0;
  double grad_norm = 0.0;  // largest pre-clip norm of the epoch
  bool clipped = false;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  bool diverged = false;
  std::string divergence_reason;
  bool early_stopped = false;
  std::size_t jitter_events = 0;
};

/// Parameters of a trained model: a row-major embed_dim x input_dim matrix for
/// the linear encoder, or one raw vector per training point for free embeddings.
struct Model {
  ModelKind kind = ModelKind::LinearEncoder;
  TrainGeometry geometry = TrainGeometry::Hypersphere;
  std::size_t input_dim = 0;
  std::size_t embed_dim = 0;
  std::vector<double> params;
};

struct TrainResult {
  Model model;
  EmbeddingSet train_embeddings;
  TrainLog log;
};

/// Minibatch Adam on supcon_weight * SupCon + koleo_weight * KoLeo with global
/// gradient clipping and early stopping on a training-loss plateau.
/// Divergence (non-finite loss or a raw activation norm above 1e12) halts the
/// run and is reported in the log rather than thrown.
TrainResult train(const Dataset& data, const TrainConfig& config);

/// Embeds raw inputs (n x input_dim) with a linear encoder.
EmbeddingSet embed(const Model& model, std::span<const double> inputs,
                   std::optional<std::vector<Label>> labels = std::nullopt);

/// CSV: epoch,supcon_loss,koleo_loss,circ_var,grad_norm,clipped_flag
void write_train_log_csv(std::ostream& os, const TrainLog& log);

}  // namespace torus
