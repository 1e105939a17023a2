#include "causalmp/intervention.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "causalmp/error.hpp"

namespace causalmp {

std::size_t center_count(std::size_t n_nodes, double ratio) {
  const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n_nodes)));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n_nodes, 1));
}

std::vector<NodeId> sample_centers(std::size_t n_nodes, double ratio, Rng& rng) {
  if (!(ratio > 0.0) || ratio > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "sample_centers: ratio must lie in (0, 1]");
  }
  if (n_nodes == 0) return {};
  const std::size_t k = center_count(n_nodes, ratio);
  std::vector<NodeId> nodes(n_nodes);
  std::iota(nodes.begin(), nodes.end(), NodeId{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_nodes - 1);
    std::swap(nodes[i], nodes[pick(rng)]);
  }
  nodes.resize(k);
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

DenseMatrix apply_noise(const DenseMatrix& features, std::span<const NodeId> centers, double sigma,
                        Rng& rng) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "apply_noise: sigma must be > 0");
  DenseMatrix out = features;
  std::normal_distribution<double> noise(1.0, sigma);
  for (NodeId c : centers) {
    if (c >= features.rows()) throw Error(ErrorCode::kInvalidArgument, "apply_noise: center out of range");
    for (double& v : out.row(c)) v *= noise(rng);
  }
  return out;
}

InterventionBatch embed_interventions(const EmbeddingModel& f, const SparsePropagator& prop,
                                      const DenseMatrix& features, const InterventionPlan& plan) {
  if (plan.repetitions < 1) throw Error(ErrorCode::kInvalidArgument, "intervention plan needs M >= 1");
  InterventionBatch batch;
  batch.plan = plan;
  batch.embeddings.reserve(static_cast<std::size_t>(plan.repetitions));
  for (int m = 0; m < plan.repetitions; ++m) {
    Rng rng = make_stream(plan.seed, static_cast<std::uint64_t>(m));
    const DenseMatrix noisy = apply_noise(features, plan.centers, plan.noise_sigma, rng);
    DenseMatrix z = f.embed(prop, noisy);
    if (!z.all_finite()) {
      throw Error(ErrorCode::kNumeric, "embed_interventions: non-finite embedding in repetition " +
                                           std::to_string(m));
    }
    batch.embeddings.push_back(std::move(z));
  }
  return batch;
}

void write_intervention_batch(const InterventionBatch& batch, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t m = 0; m < batch.embeddings.size(); ++m) {
    std::ofstream out(dir / ("snapshot_" + std::to_string(m) + ".csv"));
    if (!out) throw Error(ErrorCode::kIo, "cannot write intervention snapshot");
    out.precision(17);
    const DenseMatrix& z = batch.embeddings[m];
    for (std::size_t i = 0; i < z.rows(); ++i) {
      for (std::size_t j = 0; j < z.cols(); ++j) out << (j ? "," : "") << z(i, j);
      out << '\n';
    }
  }
}

}  // namespace causalmp
