#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "causalmp/embedding.hpp"
#include "causalmp/error.hpp"
#include "test_util.hpp"

using namespace causalmp;
using namespace causalmp::testing;

TEST(CcaLoss, MatchesReferenceValue) {
  // Reference from numpy with population std and the sqrt(N) scaling, lambda 0.5.
  const DenseMatrix z1(4, 2, std::vector<double>{0.3, -1.2, 1.5, 0.4, -0.7, 0.9, 0.2, 2.0});
  const DenseMatrix z2(4, 2, std::vector<double>{0.1, -0.8, 1.9, 0.2, -0.5, 1.4, 0.6, 1.7});
  const CcaLoss l = cca_loss(z1, z2, 0.5);
  EXPECT_NEAR(l.invariance, 0.15945529284921378, 1e-13);
  EXPECT_NEAR(l.decorrelation, 0.14692657110648952, 1e-13);
  EXPECT_NEAR(l.loss, 0.23291857840245855, 1e-13);
}

TEST(CcaLoss, IdenticalWhitenedViewsGiveZero) {
  // Orthogonal, zero-mean, equal-variance columns standardise to an orthonormal pair.
  const DenseMatrix z(4, 2, std::vector<double>{1, 1, -1, 1, 1, -1, -1, -1});
  const CcaLoss l = cca_loss(z, z, 1.0);
  EXPECT_NEAR(l.loss, 0.0, 1e-14);
}

class CcaGradient : public ::testing::TestWithParam<int> {};

TEST_P(CcaGradient, MatchesCentralDifferences) {
  Rng rng = make_stream(200 + GetParam(), 0);
  DenseMatrix z1 = random_matrix(7, 3, rng);
  DenseMatrix z2 = random_matrix(7, 3, rng);
  const double lambda = 0.1 + 0.2 * GetParam();
  const CcaLoss l = cca_loss(z1, z2, lambda);
  auto loss = [&] { return cca_loss(z1, z2, lambda).loss; };
  EXPECT_LE(relative_error(l.grad_first, numeric_gradient(z1, loss)), 1e-4);
  EXPECT_LE(relative_error(l.grad_second, numeric_gradient(z2, loss)), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, CcaGradient, ::testing::Range(0, 10));

TEST(CcaLoss, CollapsedColumnRaises) {
  DenseMatrix z1(4, 2, std::vector<double>{1, 5, 2, 5, 3, 5, 4, 5});
  const DenseMatrix z2(4, 2, std::vector<double>{1, 0, 2, 1, 3, 0, 4, 1});
  try {
    (void)cca_loss(z1, z2, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
}

TEST(Augment, ZeroRatesCopyTheGraph) {
  Rng rng = make_stream(1, 0);
  const GraphDataset g = random_graph(20, 40, 5, rng);
  const GraphView v = augment_view(g, 0.0, 0.0, rng);
  EXPECT_EQ(v.edges, g.edges);
  EXPECT_EQ(v.features, g.features);
}

TEST(Augment, DropsEdgesAndMasksWholeColumns) {
  Rng rng = make_stream(2, 0);
  const GraphDataset g = random_graph(200, 2000, 50, rng);
  std::size_t kept = 0, masked = 0, trials = 20;
  for (std::size_t t = 0; t < trials; ++t) {
    const GraphView v = augment_view(g, 0.3, 0.4, rng);
    kept += v.edges.size();
    for (std::size_t j = 0; j < g.n_features(); ++j) {
      bool zero = true, same = true;
      for (std::size_t i = 0; i < g.n_nodes; ++i) {
        zero = zero && v.features(i, j) == 0.0;
        same = same && v.features(i, j) == g.features(i, j);
      }
      EXPECT_TRUE(zero || same);
      masked += zero ? 1 : 0;
    }
  }
  EXPECT_NEAR(static_cast<double>(kept) / (trials * 2000.0), 0.7, 0.02);
  EXPECT_NEAR(static_cast<double>(masked) / (trials * 50.0), 0.4, 0.05);
  EXPECT_THROW(augment_view(g, 1.0, 0.0, rng), Error);
  EXPECT_THROW(augment_view(g, 0.0, -0.1, rng), Error);
}

TEST(TrainEmbedding, LossDecreasesAndIsDeterministic) {
  SbmParams p;
  p.n_nodes = 120;
  p.avg_degree = 6;
  p.n_features = 16;
  const GraphDataset g = generate_sbm(p);
  EmbeddingConfig cfg;
  cfg.epochs = 150;
  cfg.lr = 1e-2;
  const EmbeddingModel a = train_embedding(g, cfg);
  ASSERT_EQ(a.curve.size(), 150u);
  auto window_mean = [&](std::size_t from) {
    double s = 0.0;
    for (std::size_t k = from; k < from + 20; ++k) s += a.curve[k].loss;
    return s / 20.0;
  };
  EXPECT_LT(window_mean(130), 0.8 * window_mean(0));

  const EmbeddingModel b = train_embedding(g, cfg);
  EXPECT_EQ(a.params.second.weight, b.params.second.weight);
}

TEST(TrainEmbedding, SaveLoadRoundTrip) {
  Rng rng = make_stream(3, 0);
  const GraphDataset g = random_graph(30, 60, 6, rng);
  EmbeddingConfig cfg;
  cfg.epochs = 3;
  cfg.hidden_dim = 8;
  cfg.output_dim = 4;
  const EmbeddingModel m = train_embedding(g, cfg);
  const auto path = std::filesystem::temp_directory_path() / "causalmp_embedding.bin";
  save_embedding_model(m, path);
  const EmbeddingModel back = load_embedding_model(path, cfg);
  EXPECT_EQ(back.params.first.weight, m.params.first.weight);
  EXPECT_EQ(back.params.second.bias, m.params.second.bias);
  const SparsePropagator prop = symmetric_propagator(g);
  EXPECT_EQ(back.embed(prop, g.features), m.embed(prop, g.features));
}
