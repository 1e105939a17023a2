#pragma once

#include <cstdint>
#include <vector>

#include "causalmp/graph.hpp"
#include "causalmp/stats.hpp"
#include "causalmp/structure.hpp"

namespace causalmp {

struct NodeClassConfig {
  int shots = 5;
  std::size_t hidden_dim = 64;
  int epochs = 200;
  double lr = 1e-2;
  double weight_decay = 5e-4;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
};

// `shots` labelled nodes per class for training, every other node for testing.
struct ShotSplit {
  std::vector<NodeId> train;
  std::vector<NodeId> test;
};

ShotSplit sample_shot_split(std::span<const int> labels, int n_classes, int shots, Rng& rng);

struct NodeClassArm {
  std::vector<double> accuracy;  // one per seed
  Summary summary;
};

struct NodeClassReport {
  NodeClassArm original;
  NodeClassArm causal;
  double difference = 0.0;  // causal mean - original mean
};

// Same split, same initial weights and same schedule for both structures
// under each seed; only the propagator differs.
NodeClassReport eval_node_classification(const GraphDataset& dataset, const CausalStructure& original,
                                         const CausalStructure& causal, const NodeClassConfig& config);

}  // namespace causalmp
