#include "causalmp/node_classification.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "causalmp/adam.hpp"
#include "causalmp/error.hpp"
#include "causalmp/gcn.hpp"

namespace causalmp {

ShotSplit sample_shot_split(std::span<const int> labels, int n_classes, int shots, Rng& rng) {
  if (shots < 1) throw Error(ErrorCode::kInvalidArgument, "nodeclass: shots must be >= 1");
  std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t v = 0; v < labels.size(); ++v) {
    by_class.at(static_cast<std::size_t>(labels[v])).push_back(static_cast<NodeId>(v));
  }
  ShotSplit split;
  std::vector<bool> is_train(labels.size(), false);
  for (int c = 0; c < n_classes; ++c) {
    auto& members = by_class[static_cast<std::size_t>(c)];
    if (members.size() < static_cast<std::size_t>(shots)) {
      throw Error(ErrorCode::kInvalidArgument, "nodeclass: class " + std::to_string(c) + " has " +
                                                   std::to_string(members.size()) + " nodes, fewer than " +
                                                   std::to_string(shots) + " shots");
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (int k = 0; k < shots; ++k) is_train[members[static_cast<std::size_t>(k)]] = true;
  }
  for (std::size_t v = 0; v < labels.size(); ++v) {
    (is_train[v] ? split.train : split.test).push_back(static_cast<NodeId>(v));
  }
  return split;
}

namespace {

double train_and_score(const GraphDataset& dataset, const SparsePropagator& prop, const ShotSplit& split,
                       GcnParams params, const NodeClassConfig& config) {
  const auto& labels = *dataset.labels;
  const std::size_t n_classes = params.output_dim();
  Adam adam({.lr = config.lr, .weight_decay = config.weight_decay});
  const double inv_train = 1.0 / static_cast<double>(split.train.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    GcnCache cache;
    const DenseMatrix logits = gcn_forward(params, prop, dataset.features, &cache);
    DenseMatrix grad(logits.rows(), logits.cols());
    for (NodeId v : split.train) {
      const auto row = logits.row(v);
      const double peak = *std::max_element(row.begin(), row.end());
      double norm = 0.0;
      for (double x : row) norm += std::exp(x - peak);
      auto g = grad.row(v);
      for (std::size_t c = 0; c < n_classes; ++c) g[c] = std::exp(row[c] - peak) / norm * inv_train;
      g[static_cast<std::size_t>(labels[v])] -= inv_train;
    }
    const GcnGradients grads = gcn_backward(params, cache, grad);
    const std::array<DenseMatrix*, 4> p = {&params.first.weight, &params.first.bias, &params.second.weight,
                                           &params.second.bias};
    const std::array<const DenseMatrix*, 4> g = {&grads.first.weight, &grads.first.bias, &grads.second.weight,
                                                 &grads.second.bias};
    adam.step(p, g);
    ++params.version;
  }

  const DenseMatrix logits = gcn_forward(params, prop, dataset.features);
  std::size_t correct = 0;
  for (NodeId v : split.test) {
    const auto row = logits.row(v);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == labels[v]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(split.test.size());
}

}  // namespace

NodeClassReport eval_node_classification(const GraphDataset& dataset, const CausalStructure& original,
                                         const CausalStructure& causal, const NodeClassConfig& config) {
  if (!dataset.labels || !dataset.n_classes) {
    throw Error(ErrorCode::kInvalidArgument, "nodeclass: dataset has no labels");
  }
  if (original.n_nodes() != dataset.n_nodes || causal.n_nodes() != dataset.n_nodes) {
    throw Error(ErrorCode::kShape, "nodeclass: structure and dataset differ in node count");
  }
  const int n_classes = *dataset.n_classes;
  if (static_cast<std::size_t>(config.shots) * static_cast<std::size_t>(n_classes) >= dataset.n_nodes) {
    throw Error(ErrorCode::kInvalidArgument, "nodeclass: shots * classes leaves no test nodes");
  }
  const SparsePropagator prop_original = to_propagator(original);
  const SparsePropagator prop_causal = to_propagator(causal);

  NodeClassReport report;
  for (const std::uint64_t seed : config.seeds) {
    Rng split_rng = make_stream(seed, stream::kNodeClass);
    const ShotSplit split = sample_shot_split(*dataset.labels, n_classes, config.shots, split_rng);
    Rng init_rng = make_stream(seed, stream::kNodeClass + 100);
    const GcnParams init = GcnParams::glorot(dataset.n_features(), config.hidden_dim,
                                             static_cast<std::size_t>(n_classes), init_rng);
    report.original.accuracy.push_back(train_and_score(dataset, prop_original, split, init, config));
    report.causal.accuracy.push_back(train_and_score(dataset, prop_causal, split, init, config));
  }
  report.original.summary = summarize(report.original.accuracy);
  report.causal.summary = summarize(report.causal.accuracy);
  report.difference = report.causal.summary.mean - report.original.summary.mean;
  return report;
}

}  // namespace causalmp
