#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalmp/dependency.hpp"
#include "causalmp/embedding.hpp"
#include "causalmp/graph.hpp"
#include "causalmp/intervention.hpp"
#include "causalmp/linkpred.hpp"
#include "causalmp/structure.hpp"

namespace causalmp {

// Every field has a default; `seed` drives the split, both networks, center
// sampling and noise (the per-network seed fields are overwritten with it).
struct RunConfig {
  double center_ratio = 0.05;
  int repetitions = 8;
  int iterations = 5;
  double noise_sigma = 0.5;
  double lambda_prune = 1.0;
  double lambda_add = 1.0;
  std::size_t bins = 32;
  EmbeddingConfig embedding;
  LinkPredConfig linkpred;  // alpha, beta and ablation live in linkpred.weights
  SplitRatios split;
  std::uint64_t seed = 0;
  bool dump_interventions = false;

  void validate() const;
};

std::string run_config_to_json(const RunConfig& config);
// Missing fields keep their defaults; unknown fields are a format error.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

struct IterationReport {
  int iteration = 0;
  std::size_t centers = 0;
  std::size_t scored_edges = 0;
  std::size_t prunes = 0;
  std::optional<std::size_t> pruned_heterophilic;  // needs labels
  std::size_t mi_candidates = 0;
  std::size_t additions = 0;
  ThresholdStats delta_stats;
  ThresholdStats mi_stats;
  int epochs_run = 0;
  double best_val_auc = 0.0;   // best checkpoint so far
  double test_auc = 0.0;       // at that checkpoint
  double dependency_seconds = 0.0;
  double training_seconds = 0.0;
};

struct RunReport {
  std::string dataset;
  std::uint64_t seed = 0;
  double pretrain_val_auc = 0.0;
  double pretrain_test_auc = 0.0;
  int pretrain_epochs = 0;
  std::vector<IterationReport> iterations;
  double val_auc = 0.0;
  double test_auc = 0.0;
  std::size_t directed_edges = 0;
  std::size_t added_edges = 0;
  double embedding_seconds = 0.0;
  double pretrain_seconds = 0.0;
  double total_seconds = 0.0;
};

struct RunResult {
  RunReport report;
  CausalStructure structure;
  EmbeddingModel embedding;
  LPModel model;
  EdgeSplit split;
  std::vector<double> loss_curve;
};

// Full iterative procedure: split, A_c = train graph, train f, pre-train g,
// then `iterations` rounds of intervene / score / prune / add / optimise.
// With `out_dir` every artifact is written there; on failure the files
// produced so far are kept next to a FAILED.json marker and the error is rethrown.
RunResult run_causalmp(const GraphDataset& dataset, const RunConfig& config,
                       const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// Deterministic subset of the report (no timings).
std::string metrics_json(const RunReport& report);
// Full report including timings.
std::string report_json(const RunReport& report);

// Dependency stage for one iteration: delta on each edge, in input order.
std::vector<DependencyScore> score_edges(const InterventionBatch& batch, std::span<const Edge> edges,
                                         const KdeOptions& options);
std::vector<MiScore> score_candidates(const InterventionBatch& batch, std::span<const Edge> pairs,
                                      const KdeOptions& options);

// Fresh link predictor with both graph slots set to `structure`; no edits.
LinkPredResult retrain_on_structure(const GraphDataset& train_graph, const EdgeSplit& split,
                                    const CausalStructure& structure, const RunConfig& config);

// Graph holding only the training positives of `split`.
GraphDataset train_graph(const GraphDataset& dataset, const EdgeSplit& split);

}  // namespace causalmp
