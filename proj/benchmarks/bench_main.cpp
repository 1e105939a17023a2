#include <benchmark/benchmark.h>

#include "causalmp/dependency.hpp"
#include "causalmp/embedding.hpp"
#include "causalmp/graph.hpp"
#include "causalmp/intervention.hpp"
#include "causalmp/structure.hpp"

using namespace causalmp;

namespace {

struct Fixture {
  GraphDataset graph;
  SparsePropagator prop;
  EmbeddingModel model;

  Fixture() {
    SbmParams p;
    p.seed = 5;
    graph = generate_sbm(p);
    prop = to_propagator(CausalStructure::from_graph(graph));
    Rng rng = make_stream(5, stream::kEmbedding);
    model.params = GcnParams::glorot(graph.n_features(), 128, 64, rng);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_GcnForward(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(gcn_forward(f.model.params, f.prop, f.graph.features));
}
BENCHMARK(BM_GcnForward)->Unit(benchmark::kMillisecond);

// Cost of one entropy-gap score as a function of the repetition count M.
void BM_DeltaH(benchmark::State& state) {
  const Fixture& f = fixture();
  const std::vector<NodeId> centers = {0, 1, 2, 3};
  const InterventionPlan plan{centers, static_cast<int>(state.range(0)), 0.5, 1};
  const InterventionBatch batch = embed_interventions(f.model, f.prop, f.graph.features, plan);
  const Edge e = f.graph.edges.front();
  for (auto _ : state) benchmark::DoNotOptimize(delta_h(batch, e.u, e.v));
}
BENCHMARK(BM_DeltaH)->Arg(4)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_EmbedInterventions(benchmark::State& state) {
  const Fixture& f = fixture();
  Rng rng = make_stream(5, stream::kCenters);
  const auto centers = sample_centers(f.graph.n_nodes, 0.05, rng);
  const InterventionPlan plan{centers, static_cast<int>(state.range(0)), 0.5, 1};
  for (auto _ : state) benchmark::DoNotOptimize(embed_interventions(f.model, f.prop, f.graph.features, plan));
}
BENCHMARK(BM_EmbedInterventions)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
