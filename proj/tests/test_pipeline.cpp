#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "causalmp/case_study.hpp"
#include "causalmp/error.hpp"
#include "causalmp/node_classification.hpp"
#include "causalmp/pipeline.hpp"
#include "causalmp/stats.hpp"
#include "test_util.hpp"

using namespace causalmp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("causalmp_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

GraphDataset small_sbm(std::uint64_t seed = 0) {
  SbmParams p;
  p.n_nodes = 80;
  p.avg_degree = 6;
  p.n_features = 8;
  p.seed = seed;
  return generate_sbm(p);
}

RunConfig quick_config() {
  RunConfig c;
  c.iterations = 2;
  c.center_ratio = 0.1;
  c.embedding.epochs = 20;
  c.embedding.lr = 1e-3;
  c.embedding.hidden_dim = 16;
  c.embedding.output_dim = 8;
  c.linkpred.epochs = 20;
  c.linkpred.lr = 1e-3;
  c.linkpred.hidden_dim = 16;
  c.linkpred.latent_dim = 8;
  c.linkpred.patience = 10;
  return c;
}

}  // namespace

TEST(RunConfigJson, RoundTripIsLossless) {
  RunConfig c = quick_config();
  c.noise_sigma = 0.1;
  c.lambda_prune = 1.0 / 3.0;
  c.linkpred.weights = {0.7, 0.123456789012345, true};
  c.split = {0.8, 0.1, 0.1};
  c.seed = 1234567890123ULL;
  const std::string text = run_config_to_json(c);
  const RunConfig back = run_config_from_json(text);
  EXPECT_EQ(run_config_to_json(back), text);
  EXPECT_EQ(back.lambda_prune, c.lambda_prune);
  EXPECT_EQ(back.linkpred.weights.beta, c.linkpred.weights.beta);
  EXPECT_EQ(back.seed, c.seed);
}

TEST(RunConfigJson, DefaultsAndErrors) {
  const RunConfig d = run_config_from_json(R"({"iterations": 3, "linkpred": {"patience": 5}})");
  EXPECT_EQ(d.iterations, 3);
  EXPECT_EQ(d.linkpred.patience, 5);
  EXPECT_EQ(d.repetitions, 8);
  EXPECT_EQ(d.center_ratio, 0.05);
  EXPECT_EQ(d.linkpred.weights.alpha, 0.5);
  EXPECT_EQ(d.linkpred.weights.beta, 0.05);
  EXPECT_EQ(d.embedding.epochs, 1000);
  EXPECT_EQ(d.linkpred.epochs, 2000);
  EXPECT_EQ(d.bins, 32u);

  auto code = [](const std::string& text) {
    try {
      (void)run_config_from_json(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code(R"({"iteratons": 3})"), ErrorCode::kFormat);
  EXPECT_EQ(code(R"({"embedding": {"depth": 3}})"), ErrorCode::kFormat);
  EXPECT_EQ(code(R"({"iterations": "five"})"), ErrorCode::kFormat);
  EXPECT_EQ(code("[1, 2"), ErrorCode::kFormat);
  EXPECT_EQ(code(R"({"center_ratio": 0})"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code(R"({"alpha": 1.5})"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code(R"({"split": {"train": 0.5}})"), ErrorCode::kInvalidArgument);
}

TEST(Stats, WelchMatchesReference) {
  // scipy: z from the unequal-variance standard error, p = 2 * norm.sf(|z|).
  const std::vector<double> a = {0.1, 0.15, 0.2, 0.12, 0.18};
  const std::vector<double> b = {0.3, 0.25, 0.2, 0.35, 0.28, 0.31};
  const WelchTest t = welch_z_test(a, b);
  EXPECT_NEAR(t.z, 4.6861377917467557, 1e-12);
  EXPECT_NEAR(t.p_value, 2.7840886007162509e-06, 1e-15);
  EXPECT_THROW(welch_z_test(std::vector<double>{1.0}, b), Error);
  const Summary s = summarize(a);
  EXPECT_NEAR(s.mean, 0.15, 1e-15);
  EXPECT_EQ(s.count, 5u);
}

TEST(Pipeline, RunProducesConsistentArtifacts) {
  const GraphDataset g = small_sbm();
  const fs::path dir = fresh_dir("run");
  const RunResult r = run_causalmp(g, quick_config(), dir);
  ASSERT_EQ(r.report.iterations.size(), 2u);
  for (const auto& it : r.report.iterations) {
    EXPECT_GE(it.dependency_seconds, 0.0);
    EXPECT_GE(it.training_seconds, 0.0);
    EXPECT_LE(it.prunes, it.scored_edges);
    EXPECT_LE(it.additions, it.mi_candidates);
    ASSERT_TRUE(it.pruned_heterophilic.has_value());
    EXPECT_LE(*it.pruned_heterophilic, it.prunes);
  }
  for (const char* f : {"config_used.json", "metrics.json", "causal_structure.csv", "edits.jsonl",
                        "dependency_scores.csv", "mi_scores.csv", "report.json", "split.json",
                        "embedding_model.bin", "linkpred_model.bin", "train_loss.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir / "FAILED.json"));

  const GraphDataset train = train_graph(g, r.split);
  EXPECT_EQ(CausalStructure::replay(train, read_edits_jsonl(dir / "edits.jsonl")), r.structure);
  EXPECT_EQ(read_structure_csv(dir / "causal_structure.csv", g.n_nodes), r.structure);
  EXPECT_EQ(run_config_from_json(slurp(dir / "config_used.json")).iterations, 2);

  const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
  EXPECT_FALSE(metrics.contains("timings"));
  EXPECT_EQ(metrics["iterations"].size(), 2u);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_TRUE(report.contains("timings"));

  std::size_t prunes = 0;
  for (const auto& it : r.report.iterations) prunes += it.prunes;
  EXPECT_EQ(prunes, r.structure.count(EdgeKind::kDirected));
}

TEST(Pipeline, ZeroIterationsKeepsOriginalStructure) {
  const GraphDataset g = small_sbm(1);
  RunConfig c = quick_config();
  c.iterations = 0;
  const RunResult r = run_causalmp(g, c);
  EXPECT_TRUE(r.report.iterations.empty());
  EXPECT_EQ(r.structure, CausalStructure::from_graph(train_graph(g, r.split)));
  EXPECT_TRUE(r.structure.log().empty());
  EXPECT_EQ(r.report.test_auc, r.report.pretrain_test_auc);
}

TEST(Pipeline, DeterministicAndLeavesInputUntouched) {
  const GraphDataset g = small_sbm(2);
  const fs::path data = fresh_dir("input");
  save_dataset(g, data);
  const std::string edges_before = slurp(data / "edges.csv");
  const std::string features_before = slurp(data / "features.csv");

  const GraphDataset loaded = load_dataset(data);
  const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
  (void)run_causalmp(loaded, quick_config(), a);
  (void)run_causalmp(loaded, quick_config(), b);
  for (const char* f : {"causal_structure.csv", "edits.jsonl", "metrics.json", "dependency_scores.csv",
                        "mi_scores.csv", "linkpred_model.bin"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_EQ(slurp(data / "edges.csv"), edges_before);
  EXPECT_EQ(slurp(data / "features.csv"), features_before);
}

TEST(Pipeline, FailureLeavesMarker) {
  Rng rng = make_stream(3, 0);
  const GraphDataset g = causalmp::testing::random_graph(10, 12, 3, rng);  // too small for 85/5/10
  const fs::path dir = fresh_dir("fail");
  EXPECT_THROW(run_causalmp(g, quick_config(), dir), Error);
  ASSERT_TRUE(fs::exists(dir / "FAILED.json"));
  const auto marker = nlohmann::json::parse(slurp(dir / "FAILED.json"));
  EXPECT_EQ(marker["error"], "infeasible");
  EXPECT_TRUE(fs::exists(dir / "config_used.json"));
}

TEST(Retrain, IdenticalStructuresGiveIdenticalResults) {
  const GraphDataset g = small_sbm(4);
  const RunConfig c = quick_config();
  const EdgeSplit split = split_edges(g, c.split, c.seed);
  const GraphDataset train = train_graph(g, split);
  const CausalStructure s = CausalStructure::from_graph(train);
  const LinkPredResult a = retrain_on_structure(train, split, s, c);
  const LinkPredResult b = retrain_on_structure(train, split, s, c);
  EXPECT_EQ(a.test_auc, b.test_auc);
  EXPECT_EQ(a.model.decoder.w1, b.model.decoder.w1);
}

TEST(NodeClass, IdenticalStructuresHaveZeroDifference) {
  const GraphDataset g = small_sbm(5);
  const CausalStructure s = CausalStructure::from_graph(g);
  NodeClassConfig cfg;
  cfg.epochs = 30;
  cfg.seeds = {0, 1, 2};
  const NodeClassReport r = eval_node_classification(g, s, s, cfg);
  EXPECT_EQ(r.difference, 0.0);
  EXPECT_EQ(r.original.accuracy, r.causal.accuracy);
  ASSERT_EQ(r.original.accuracy.size(), 3u);
  for (double acc : r.original.accuracy) {
    EXPECT_GE(acc, 0.0);
    EXPECT_LE(acc, 100.0);
  }
}

TEST(NodeClass, ShotSplitAndErrors) {
  const GraphDataset g = small_sbm(6);
  Rng rng = make_stream(0, stream::kNodeClass);
  const ShotSplit split = sample_shot_split(*g.labels, *g.n_classes, 5, rng);
  EXPECT_EQ(split.train.size(), 25u);
  EXPECT_EQ(split.test.size(), 55u);
  std::vector<int> per_class(5, 0);
  for (NodeId v : split.train) ++per_class[(*g.labels)[v]];
  for (int c : per_class) EXPECT_EQ(c, 5);

  NodeClassConfig cfg;
  cfg.shots = 17;  // each class holds 16 nodes
  const CausalStructure s = CausalStructure::from_graph(g);
  EXPECT_THROW(eval_node_classification(g, s, s, cfg), Error);
  GraphDataset unlabeled = g;
  unlabeled.labels.reset();
  unlabeled.n_classes.reset();
  cfg.shots = 5;
  EXPECT_THROW(eval_node_classification(unlabeled, s, s, cfg), Error);
}

TEST(CaseStudy, ScoresEveryEdge) {
  const GraphDataset g = small_sbm(7);
  EmbeddingConfig ec;
  ec.epochs = 5;
  ec.hidden_dim = 16;
  ec.output_dim = 8;
  const EmbeddingModel f = train_embedding(g, ec);
  const CaseStudyReport r = case_study(g, f, {});
  ASSERT_EQ(r.scores.size(), g.edges.size());
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    EXPECT_EQ((Edge{r.scores[k].i, r.scores[k].j}), g.edges[k]);
    EXPECT_EQ(r.heterophilic[k], (*g.labels)[g.edges[k].u] != (*g.labels)[g.edges[k].v]);
  }
  EXPECT_EQ(r.homophilic_delta.count + r.heterophilic_delta.count, g.edges.size());
  EXPECT_TRUE(r.test.has_value());
  EXPECT_GT(r.batches, 0u);
}

TEST(CaseStudy, UniformLabelsAreNotApplicable) {
  GraphDataset g = small_sbm(8);
  g.labels = std::vector<int>(g.n_nodes, 0);
  g.n_classes = 1;
  EmbeddingConfig ec;
  ec.epochs = 2;
  ec.hidden_dim = 8;
  ec.output_dim = 4;
  const CaseStudyReport r = case_study(g, train_embedding(g, ec), {});
  EXPECT_EQ(r.heterophilic_delta.count, 0u);
  EXPECT_FALSE(r.test.has_value());
  g.labels.reset();
  EXPECT_THROW(case_study(g, train_embedding(g, ec), {}), Error);
}
