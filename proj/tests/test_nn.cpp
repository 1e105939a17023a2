#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "causalmp/adam.hpp"
#include "causalmp/error.hpp"
#include "causalmp/gcn.hpp"
#include "causalmp/loss.hpp"
#include "causalmp/serialize.hpp"
#include "test_util.hpp"

using namespace causalmp;
using namespace causalmp::testing;

namespace {

struct GcnInstance {
  GraphDataset graph;
  SparsePropagator prop;
  GcnParams params;
  DenseMatrix upstream;
};

GcnInstance make_instance(std::uint64_t seed, bool directed) {
  Rng rng = make_stream(seed, 0);
  GcnInstance inst;
  inst.graph = random_graph(9, 14, 5, rng);
  if (directed) {
    std::vector<AdjacencyEntry> entries;
    for (const Edge& e : inst.graph.edges) entries.push_back({e.v, e.u});
    inst.prop = normalize_adjacency(9, entries, NormalizationMode::kInDegree);
  } else {
    inst.prop = symmetric_propagator(inst.graph);
  }
  inst.params = GcnParams::glorot(5, 6, 3, rng);
  inst.params.first.bias = random_matrix(1, 6, rng, 0.1);
  inst.params.second.bias = random_matrix(1, 3, rng, 0.1);
  inst.upstream = random_matrix(9, 3, rng);
  return inst;
}

}  // namespace

class GcnGradient : public ::testing::TestWithParam<int> {};

TEST_P(GcnGradient, MatchesCentralDifferences) {
  GcnInstance inst = make_instance(100 + GetParam(), GetParam() % 2 == 1);
  auto loss = [&] { return weighted_sum(inst.upstream, gcn_forward(inst.params, inst.prop, inst.graph.features)); };

  GcnCache cache;
  (void)gcn_forward(inst.params, inst.prop, inst.graph.features, &cache);
  const GcnGradients g = gcn_backward(inst.params, cache, inst.upstream, true);

  EXPECT_LE(relative_error(g.first.weight, numeric_gradient(inst.params.first.weight, loss)), 1e-4);
  EXPECT_LE(relative_error(g.first.bias, numeric_gradient(inst.params.first.bias, loss)), 1e-4);
  EXPECT_LE(relative_error(g.second.weight, numeric_gradient(inst.params.second.weight, loss)), 1e-4);
  EXPECT_LE(relative_error(g.second.bias, numeric_gradient(inst.params.second.bias, loss)), 1e-4);
  ASSERT_TRUE(g.input.has_value());
  EXPECT_LE(relative_error(*g.input, numeric_gradient(inst.graph.features, loss)), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, GcnGradient, ::testing::Range(0, 10));

TEST(Gcn, ForwardMatchesDenseFormula) {
  GcnInstance inst = make_instance(7, false);
  const DenseMatrix p = inst.prop.to_dense();
  DenseMatrix h = matmul(matmul(p, inst.graph.features), inst.params.first.weight);
  add_row_broadcast(h, inst.params.first.bias);
  for (double& v : h.values()) v = std::max(v, 0.0);
  DenseMatrix z = matmul(matmul(p, h), inst.params.second.weight);
  add_row_broadcast(z, inst.params.second.bias);
  EXPECT_LT(max_abs_diff(gcn_forward(inst.params, inst.prop, inst.graph.features), z), 1e-12);
}

TEST(Gcn, StaleCacheIsRejected) {
  GcnInstance inst = make_instance(8, false);
  GcnCache cache;
  (void)gcn_forward(inst.params, inst.prop, inst.graph.features, &cache);
  ++inst.params.version;
  try {
    (void)gcn_backward(inst.params, cache, inst.upstream);
    FAIL() << "expected stale cache error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStaleCache);
  }
  EXPECT_THROW((void)gcn_backward(inst.params, GcnCache{}, inst.upstream), Error);
}

TEST(Gcn, ForwardRejectsWrongFeatureWidth) {
  GcnInstance inst = make_instance(9, false);
  EXPECT_THROW((void)gcn_forward(inst.params, inst.prop, DenseMatrix(9, 4)), Error);
}

TEST(Adam, FirstTwoStepsMatchClosedForm) {
  DenseMatrix p(1, 2, std::vector<double>{1.0, -2.0});
  const DenseMatrix g(1, 2, std::vector<double>{0.5, 0.1});
  const AdamConfig cfg{.lr = 0.1, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8, .weight_decay = 0.01};
  Adam adam(cfg);
  std::array<DenseMatrix*, 1> ps = {&p};
  std::array<const DenseMatrix*, 1> gs = {&g};

  std::array<double, 2> expect = {1.0, -2.0};
  std::array<double, 2> m = {0, 0}, v = {0, 0};
  for (int t = 1; t <= 2; ++t) {
    adam.step(ps, gs);
    for (int k = 0; k < 2; ++k) {
      const double gk = g.values()[k];
      m[k] = 0.9 * m[k] + 0.1 * gk;
      v[k] = 0.999 * v[k] + 0.001 * gk * gk;
      const double mhat = m[k] / (1 - std::pow(0.9, t));
      const double vhat = v[k] / (1 - std::pow(0.999, t));
      expect[k] -= 0.1 * (mhat / (std::sqrt(vhat) + 1e-8) + 0.01 * expect[k]);
      EXPECT_NEAR(p.values()[k], expect[k], 1e-15);
    }
  }
  EXPECT_EQ(adam.steps(), 2);
}

TEST(Adam, ParameterListMustStayFixed) {
  DenseMatrix p(1, 2), q(2, 2);
  const DenseMatrix gp(1, 2), gq(2, 2);
  Adam adam;
  std::array<DenseMatrix*, 1> ps = {&p};
  std::array<const DenseMatrix*, 1> gs = {&gp};
  adam.step(ps, gs);
  std::array<DenseMatrix*, 1> qs = {&q};
  std::array<const DenseMatrix*, 1> gqs = {&gq};
  EXPECT_THROW(adam.step(qs, gqs), Error);
}

TEST(Bce, MatchesReferenceAndStaysFinite) {
  // Reference mean from numpy: max(x,0) - x t + log1p(exp(-|x|)).
  const std::vector<double> logits = {2.0, -1.0, 0.0, 40.0, -40.0};
  const std::vector<double> targets = {1, 0, 1, 0, 0};
  const BceResult r = bce_with_logits(logits, targets);
  EXPECT_NEAR(r.loss, 8.2266673758242277, 1e-14);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    EXPECT_NEAR(r.grad[k], (sigmoid(logits[k]) - targets[k]) / 5.0, 1e-15);
  }
  const BceResult extreme = bce_with_logits(std::vector<double>{1e4, -1e4}, std::vector<double>{0, 1});
  EXPECT_TRUE(std::isfinite(extreme.loss));
  EXPECT_NEAR(extreme.loss, 1e4, 1e-9);
}

TEST(Bce, RejectsBadInput) {
  EXPECT_THROW(bce_with_logits(std::vector<double>{}, std::vector<double>{}), Error);
  EXPECT_THROW(bce_with_logits(std::vector<double>{1.0}, std::vector<double>{0.5}), Error);
  EXPECT_THROW(bce_with_logits(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}), Error);
}

TEST(Serialize, RoundTripIsBitExact) {
  Rng rng = make_stream(3, 0);
  const DenseMatrix a = random_matrix(3, 4, rng);
  const DenseMatrix b = random_matrix(1, 1, rng);
  const auto path = std::filesystem::temp_directory_path() / "causalmp_tensors.bin";
  const std::array<const DenseMatrix*, 2> ts = {&a, &b};
  save_tensors(path, ts);
  const auto back = load_tensors(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
  std::filesystem::remove(path);
}

TEST(Serialize, BadMagicIsFormatError) {
  const auto path = std::filesystem::temp_directory_path() / "causalmp_bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE0000";
  }
  try {
    (void)load_tensors(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
  std::filesystem::remove(path);
}
