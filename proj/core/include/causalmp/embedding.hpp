#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "causalmp/gcn.hpp"
#include "causalmp/graph.hpp"
#include "causalmp/rng.hpp"
#include "causalmp/sparse.hpp"

namespace causalmp {

struct EmbeddingConfig {
  std::size_t hidden_dim = 64;
  std::size_t output_dim = 16;
  double edge_drop = 0.2;
  double feature_mask = 0.2;
  double lambda = 1e-3;  // decorrelation weight
  int epochs = 1000;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
};

// One augmented view: a subset of edges and column-masked features.
struct GraphView {
  std::vector<Edge> edges;
  DenseMatrix features;
};

GraphView augment_view(const GraphDataset& graph, double edge_drop, double feature_mask, Rng& rng);

struct CcaLoss {
  double loss = 0.0;
  double invariance = 0.0;
  double decorrelation = 0.0;
  DenseMatrix grad_first;
  DenseMatrix grad_second;
};

// Canonical-correlation objective on column-standardised embeddings
// Zs = (Z - mean) / (std * sqrt(N)):
//   ||Zs1 - Zs2||^2 + lambda (||Zs1^T Zs1 - I||^2 + ||Zs2^T Zs2 - I||^2)
// Gradients are taken through the standardisation.
CcaLoss cca_loss(const DenseMatrix& z1, const DenseMatrix& z2, double lambda);

struct EmbeddingEpoch {
  int epoch = 0;
  double loss = 0.0;
  double invariance = 0.0;
  double decorrelation = 0.0;
};

// The measurement network f. Trained once, then read-only.
struct EmbeddingModel {
  GcnParams params;
  EmbeddingConfig config;
  std::vector<EmbeddingEpoch> curve;

  DenseMatrix embed(const SparsePropagator& prop, const DenseMatrix& features) const {
    return gcn_forward(params, prop, features);
  }
};

EmbeddingModel train_embedding(const GraphDataset& graph, const EmbeddingConfig& config);

void write_embedding_curve_csv(const EmbeddingModel& model, const std::filesystem::path& path);
void save_embedding_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_embedding_model(const std::filesystem::path& path, const EmbeddingConfig& config);

}  // namespace causalmp
