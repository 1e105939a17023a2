#include "causalmp/case_study.hpp"

#include <algorithm>
#include <numeric>

#include "causalmp/error.hpp"
#include "causalmp/intervention.hpp"
#include "causalmp/structure.hpp"

namespace causalmp {

CaseStudyReport case_study(const GraphDataset& graph, const EmbeddingModel& f, const CaseStudyConfig& config) {
  if (!graph.labels) throw Error(ErrorCode::kInvalidArgument, "casestudy: dataset has no labels");
  if (graph.edges.empty()) throw Error(ErrorCode::kInvalidArgument, "casestudy: graph has no edges");
  const auto& labels = *graph.labels;
  const SparsePropagator prop =
      normalize_adjacency(graph.n_nodes, CausalStructure::from_graph(graph).adjacency_entries(),
                          NormalizationMode::kSymmetric);

  CaseStudyReport report;
  report.clean_embedding = f.embed(prop, graph.features);

  std::vector<std::vector<std::size_t>> incident(graph.n_nodes);
  for (std::size_t k = 0; k < graph.edges.size(); ++k) {
    incident[graph.edges[k].u].push_back(k);
    incident[graph.edges[k].v].push_back(k);
  }

  Rng rng = make_stream(config.seed, stream::kCaseStudy);
  std::vector<NodeId> order(graph.n_nodes);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::shuffle(order.begin(), order.end(), rng);

  KdeOptions kde;
  kde.bins = config.bins;
  const std::size_t batch_size = center_count(graph.n_nodes, config.center_ratio);
  std::vector<std::optional<DependencyScore>> scored(graph.edges.size());
  std::size_t remaining = graph.edges.size();

  for (std::size_t start = 0; start < order.size() && remaining > 0; start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    InterventionPlan plan;
    plan.centers.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(stop));
    std::sort(plan.centers.begin(), plan.centers.end());
    std::vector<std::size_t> todo;
    for (NodeId c : plan.centers) {
      for (std::size_t k : incident[c]) {
        if (!scored[k]) todo.push_back(k);
      }
    }
    std::sort(todo.begin(), todo.end());
    todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
    if (todo.empty()) continue;

    plan.repetitions = config.repetitions;
    plan.noise_sigma = config.noise_sigma;
    plan.seed = rng();
    const InterventionBatch batch = embed_interventions(f, prop, graph.features, plan);
    ++report.batches;
    for (std::size_t k : todo) {
      scored[k] = delta_h(batch, graph.edges[k].u, graph.edges[k].v, kde);
      --remaining;
    }
  }

  std::vector<double> homo, hetero;
  for (std::size_t k = 0; k < graph.edges.size(); ++k) {
    const bool is_hetero = labels[graph.edges[k].u] != labels[graph.edges[k].v];
    report.scores.push_back(*scored[k]);
    report.heterophilic.push_back(is_hetero);
    (is_hetero ? hetero : homo).push_back(scored[k]->delta);
  }
  report.homophilic_delta = summarize(homo);
  report.heterophilic_delta = summarize(hetero);
  if (homo.size() >= 2 && hetero.size() >= 2) {
    try {
      report.test = welch_z_test(homo, hetero);
    } catch (const Error&) {
      report.test.reset();
    }
  }
  return report;
}

}  // namespace causalmp
