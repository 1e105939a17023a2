#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalmp/matrix.hpp"
#include "causalmp/types.hpp"

namespace causalmp {

// Attributed undirected graph. Edges are stored once, canonical (u < v),
// sorted and without self-loops; every stored edge is Undirected.
struct GraphDataset {
  std::string name;
  std::size_t n_nodes = 0;
  DenseMatrix features;  // n_nodes x n_features
  std::vector<Edge> edges;
  std::optional<std::vector<int>> labels;
  std::optional<int> n_classes;

  std::size_t n_features() const { return features.cols(); }
  // Throws on any invariant violation.
  void validate() const;
  // Same nodes, features and labels with a different edge set.
  GraphDataset with_edges(std::vector<Edge> edges) const;
};

// Reads manifest.json, features.csv, edges.csv and optional labels.csv.
GraphDataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const GraphDataset& graph, const std::filesystem::path& dir);

// Fraction of edges whose endpoints share a label.
double homophily_ratio(std::span<const Edge> edges, std::span<const int> labels);

struct SbmParams {
  std::size_t n_nodes = 500;
  int n_classes = 5;
  double target_homophily = 0.2;
  double avg_degree = 10.0;
  std::size_t n_features = 32;
  std::uint64_t seed = 0;
};

// Stochastic block model with round-robin class assignment: each edge is
// intra-class with probability target_homophily. Features are a per-class mean
// (2 * standard normal, drawn once) plus standard-normal noise.
GraphDataset generate_sbm(const SbmParams& params);

struct SplitRatios {
  double train = 0.85;
  double val = 0.05;
  double test = 0.10;
};

struct EdgeSplit {
  std::vector<Edge> train_pos, val_pos, test_pos;
  std::vector<Edge> train_neg, val_neg, test_neg;
  // Index of each positive in the source edge list.
  std::vector<std::size_t> train_idx, val_idx, test_idx;
};

// Shuffles the edge list, takes floor(val * |E|) validation and
// floor(test * |E|) test positives, the remainder trains. Negatives are
// uniform non-adjacent pairs, distinct across all three sets.
EdgeSplit split_edges(const GraphDataset& graph, const SplitRatios& ratios, std::uint64_t seed);

void write_split_json(const EdgeSplit& split, const std::filesystem::path& path);
EdgeSplit read_split_json(const std::filesystem::path& path, const GraphDataset& graph);

}  // namespace causalmp
