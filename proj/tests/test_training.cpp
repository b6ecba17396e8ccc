#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "torus/retrieval.hpp"
#include "torus/training.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace torus;
using torus::testing::gradient_relative_error;
using torus::testing::LossKind;
using torus::testing::normals;

namespace {

constexpr TrainGeometry kGeometries[] = {TrainGeometry::Hypersphere, TrainGeometry::TorusC, TrainGeometry::TorusN};

TrainConfig small_config(TrainGeometry g, std::uint64_t seed) {
  TrainConfig c;
  c.geometry = g;
  c.embed_dim = 4;
  c.epochs = 5;
  c.batch_size = 50;
  c.seed = seed;
  return c;
}

SyntheticDatasetConfig small_data(std::size_t classes, double spread) {
  SyntheticDatasetConfig d;
  d.n_classes = classes;
  d.n_per_class = 40;
  d.n_test_per_class = 20;
  d.input_dim = 8;
  d.spread = spread;
  d.seed = 11;
  return d;
}

}  // namespace

TEST(SupCon, Examples) {
  const std::vector<double> same{1, 0, 1, 0};
  const std::vector<Label> lab2{0, 0};
  EXPECT_NEAR(supcon_loss(same, 2, lab2, 0.1).loss, 0.0, 1e-15);

  const std::vector<double> z{1, 0, 1, 0, -1, 0};
  const std::vector<Label> lab3{0, 0, 1};
  const LossGrad lg = supcon_loss(z, 2, lab3, 0.1);
  EXPECT_NEAR(lg.loss / (2.0 * std::log1p(std::exp(-20.0))), 1.0, 1e-6);
  ASSERT_EQ(lg.grad.size(), z.size());

  const std::vector<Label> alone{0, 1, 2};
  EXPECT_DOUBLE_EQ(supcon_loss(z, 2, alone, 0.1).loss, 0.0);
}

TEST(KoLeo, Examples) {
  EXPECT_NEAR(koleo_loss(std::vector<double>{0, 0, 3, 4}, 2).loss, -std::log(5.0), 1e-15);
  EXPECT_NEAR(koleo_loss(std::vector<double>{0, 1, 3}, 1).loss, -std::log(2.0) / 3.0, 1e-15);
  EXPECT_ERRC(koleo_loss(std::vector<double>{0.5, 0.5, 2.0}, 1), Errc::DuplicatePoints);
}

TEST(Gradients, MatchFiniteDifferencesThroughProjections) {
  Rng rng(21);
  for (TrainGeometry g : kGeometries) {
    for (int t = 0; t < 20; ++t) {
      const std::size_t d = 2 * (1 + rng.below(4));
      const std::size_t n = 2 + rng.below(15);
      const auto raw = normals(rng, n * d);
      std::vector<Label> labels(n);
      for (auto& l : labels) l = static_cast<Label>(rng.below(3));
      EXPECT_LT(gradient_relative_error(LossKind::SupCon, raw, d, g, labels, 0.1), 1e-5)
          << train_geometry_name(g) << " supcon n=" << n << " d=" << d;
      EXPECT_LT(gradient_relative_error(LossKind::KoLeo, raw, d, g, labels, 0.1), 1e-5)
          << train_geometry_name(g) << " koleo n=" << n << " d=" << d;
    }
  }
}

TEST(Gradients, ProjectionBackwardIsTangent) {
  Rng rng(22);
  for (int t = 0; t < 200; ++t) {
    const auto raw = normals(rng, 6);
    const auto up = normals(rng, 6);
    std::vector<double> back(6);
    project_backward(raw, TrainGeometry::TorusN, up, back);
    for (std::size_t p = 0; p < 3; ++p) {
      EXPECT_NEAR(back[2 * p] * raw[2 * p] + back[2 * p + 1] * raw[2 * p + 1], 0.0, 1e-12);
    }
    project_backward(raw, TrainGeometry::Hypersphere, up, back);
    double dot = 0.0;
    for (std::size_t i = 0; i < 6; ++i) dot += back[i] * raw[i];
    EXPECT_NEAR(dot, 0.0, 1e-12);
  }
}

TEST(Clip, Examples) {
  std::vector<double> g{3, 4};
  ClipResult r = clip_gradients(g, 1.0);
  EXPECT_DOUBLE_EQ(r.norm, 5.0);
  EXPECT_TRUE(r.clipped);
  EXPECT_NEAR(g[0], 0.6, 1e-15);
  EXPECT_NEAR(g[1], 0.8, 1e-15);

  std::vector<double> h{3, 4};
  r = clip_gradients(h, 10.0);
  EXPECT_FALSE(r.clipped);
  EXPECT_EQ(h, (std::vector<double>{3, 4}));
  r = clip_gradients(h, std::numeric_limits<double>::infinity());
  EXPECT_FALSE(r.clipped);
  EXPECT_EQ(h, (std::vector<double>{3, 4}));
}

TEST(CircularVariance, Examples) {
  EXPECT_NEAR(circular_variance(std::vector<double>{1, 0, 1, 0}, 2), 0.0, 1e-15);
  EXPECT_NEAR(circular_variance(std::vector<double>{1, 0, -1, 0}, 2), 1.0, 1e-15);
  const EmbeddingSet flat = make_set(Geometry::FlatTorus, 1, {0.0, 0.5});
  EXPECT_NEAR(circular_variance(flat), 1.0, 1e-15);
  const EmbeddingSet flat_same = make_set(Geometry::FlatTorus, 1, {0.25, 0.25});
  EXPECT_NEAR(circular_variance(flat_same), 0.0, 1e-15);
}

TEST(Config, Validation) {
  TrainConfig c;
  c.geometry = TrainGeometry::TorusN;
  c.embed_dim = 3;
  EXPECT_ERRC(c.validate(), Errc::InvariantViolation);
  c.embed_dim = 4;
  c.koleo_weight = -1.0;
  EXPECT_ERRC(c.validate(), Errc::InvariantViolation);
  EXPECT_EQ(parse_train_geometry("torusN"), TrainGeometry::TorusN);
  EXPECT_EQ(projected_dim(TrainGeometry::TorusC, 4), 8u);
  EXPECT_EQ(projected_dim(TrainGeometry::TorusN, 4), 4u);
}

TEST(Train, DeterministicGivenSeed) {
  const Dataset data = make_synthetic_dataset(small_data(3, 1.0));
  for (TrainGeometry g : kGeometries) {
    const TrainResult a = train(data, small_config(g, 5));
    const TrainResult b = train(data, small_config(g, 5));
    EXPECT_EQ(a.model.params, b.model.params) << train_geometry_name(g);
    EXPECT_EQ(a.train_embeddings.data, b.train_embeddings.data);
    std::ostringstream la, lb;
    write_train_log_csv(la, a.log);
    write_train_log_csv(lb, b.log);
    EXPECT_EQ(la.str(), lb.str());
  }
}

TEST(Train, SeparableClassesReachPerfectRetrieval) {
  const Dataset data = make_synthetic_dataset(small_data(2, 0.1));
  for (TrainGeometry g : kGeometries) {
    TrainConfig c = small_config(g, 1);
    c.epochs = 30;
    const TrainResult r = train(data, c);
    ASSERT_FALSE(r.log.diverged);
    EXPECT_NO_THROW(r.train_embeddings.validate());
    const EmbeddingSet test = embed(r.model, data.test_x, data.test_y);
    EXPECT_DOUBLE_EQ(precision_at_1(test, default_distance(test.geometry)), 1.0) << train_geometry_name(g);
  }
}

TEST(Train, UnclippedLargeStepDivergesWithoutThrowing) {
  const Dataset data = make_synthetic_dataset(small_data(3, 1.0));
  TrainConfig c = small_config(TrainGeometry::TorusC, 2);
  c.clip_threshold = std::numeric_limits<double>::infinity();
  c.learning_rate = 1e14;
  c.epochs = 20;
  TrainResult r;
  ASSERT_NO_THROW(r = train(data, c));
  EXPECT_TRUE(r.log.diverged);
  EXPECT_FALSE(r.log.divergence_reason.empty());
}

TEST(Train, PureKoLeoEpochDoesNotReduceSpread) {
  const Dataset data = make_synthetic_dataset(small_data(3, 1.0));
  for (TrainGeometry g : {TrainGeometry::Hypersphere, TrainGeometry::TorusN}) {
    TrainConfig c = small_config(g, 3);
    c.supcon_weight = 0.0;
    c.koleo_weight = 1.0;
    c.epochs = 0;
    const double before = circular_variance(train(data, c).train_embeddings);
    c.epochs = 1;
    const double after = circular_variance(train(data, c).train_embeddings);
    EXPECT_GE(after, before - 1e-12) << train_geometry_name(g);
  }
}

TEST(Train, FreeEmbeddingsCannotEmbedNewInputs) {
  const Dataset data = make_synthetic_dataset(small_data(2, 1.0));
  TrainConfig c = small_config(TrainGeometry::Hypersphere, 4);
  c.model = ModelKind::FreeEmbedding;
  c.epochs = 2;
  const TrainResult r = train(data, c);
  EXPECT_EQ(r.train_embeddings.size(), data.n_train());
  EXPECT_ERRC(embed(r.model, data.test_x), Errc::Unsupported);
}

TEST(Data, SyntheticShapes) {
  const Dataset d = make_synthetic_dataset(small_data(4, 1.0));
  EXPECT_EQ(d.n_train(), 160u);
  EXPECT_EQ(d.n_test(), 80u);
  EXPECT_EQ(d.train_x.size(), 160u * 8u);
  EXPECT_EQ(make_synthetic_dataset(small_data(4, 1.0)).train_x, d.train_x);
}
