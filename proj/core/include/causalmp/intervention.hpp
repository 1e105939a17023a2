#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "causalmp/embedding.hpp"
#include "causalmp/rng.hpp"

namespace causalmp {

struct InterventionPlan {
  std::vector<NodeId> centers;  // sorted, distinct
  int repetitions = 8;
  double noise_sigma = 0.5;
  std::uint64_t seed = 0;
};

// M embedding snapshots of the graph, one per independent noise draw.
struct InterventionBatch {
  std::vector<DenseMatrix> embeddings;
  InterventionPlan plan;

  std::size_t repetitions() const { return embeddings.size(); }
  std::size_t n_nodes() const { return embeddings.empty() ? 0 : embeddings.front().rows(); }
  std::size_t dim() const { return embeddings.empty() ? 0 : embeddings.front().cols(); }
};

// max(1, round(ratio * n))
std::size_t center_count(std::size_t n_nodes, double ratio);

// Uniform sample without replacement of center_count(n, ratio) nodes, sorted.
std::vector<NodeId> sample_centers(std::size_t n_nodes, double ratio, Rng& rng);

// Rows listed in `centers` are multiplied elementwise by Normal(1, sigma^2)
// noise; all other rows are copied unchanged.
DenseMatrix apply_noise(const DenseMatrix& features, std::span<const NodeId> centers, double sigma,
                        Rng& rng);

// Repetition m draws its noise from stream (plan.seed, m), so results do not
// depend on evaluation order.
InterventionBatch embed_interventions(const EmbeddingModel& f, const SparsePropagator& prop,
                                      const DenseMatrix& features, const InterventionPlan& plan);

// One CSV per snapshot: <dir>/snapshot_<m>.csv, N rows of D_emb values.
void write_intervention_batch(const InterventionBatch& batch, const std::filesystem::path& dir);

}  // namespace causalmp
