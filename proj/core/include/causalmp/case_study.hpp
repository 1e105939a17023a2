#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "causalmp/dependency.hpp"
#include "causalmp/embedding.hpp"
#include "causalmp/graph.hpp"
#include "causalmp/stats.hpp"

namespace causalmp {

struct CaseStudyConfig {
  double center_ratio = 0.05;
  int repetitions = 8;
  double noise_sigma = 0.5;
  std::size_t bins = 32;
  std::uint64_t seed = 0;
};

struct CaseStudyReport {
  std::vector<DependencyScore> scores;  // one per edge, in graph edge order
  std::vector<bool> heterophilic;       // parallel to scores
  Summary homophilic_delta;
  Summary heterophilic_delta;
  // Heterophilic minus homophilic; unset when either group has fewer than two edges.
  std::optional<WelchTest> test;
  std::size_t batches = 0;
  DenseMatrix clean_embedding;
};

// Scores delta on every edge. Nodes are visited in a seeded random order in
// batches of center_count(n, center_ratio); each batch is intervened on and
// the still-unscored edges it touches are scored.
CaseStudyReport case_study(const GraphDataset& graph, const EmbeddingModel& f, const CaseStudyConfig& config);

}  // namespace causalmp
