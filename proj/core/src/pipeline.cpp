#include "causalmp/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "causalmp/error.hpp"
#include "causalmp/format.hpp"

namespace causalmp {

using json = nlohmann::ordered_json;

namespace {

class FieldReader {
 public:
  FieldReader(const json& obj, std::string scope) : obj_(obj), scope_(std::move(scope)) {
    if (!obj_.is_object()) throw Error(ErrorCode::kFormat, "config: '" + scope_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      target = it->template get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::kFormat, "config: bad value for '" + scope_ + key + "'");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw Error(ErrorCode::kFormat, "config: unknown field '" + scope_ + key + "'");
    }
  }

 private:
  const json& obj_;
  std::string scope_;
  std::set<std::string> seen_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

json threshold_json(const ThresholdStats& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"lambda", s.lambda}, {"threshold", s.threshold}};
}

json iteration_json(const IterationReport& it, bool timings) {
  json j = {{"iteration", it.iteration},
            {"centers", it.centers},
            {"scored_edges", it.scored_edges},
            {"prunes", it.prunes},
            {"pruned_heterophilic", it.pruned_heterophilic ? json(*it.pruned_heterophilic) : json(nullptr)},
            {"mi_candidates", it.mi_candidates},
            {"additions", it.additions},
            {"delta", threshold_json(it.delta_stats)},
            {"mi", threshold_json(it.mi_stats)},
            {"epochs_run", it.epochs_run},
            {"best_val_auc", it.best_val_auc},
            {"test_auc", it.test_auc}};
  if (timings) {
    j["dependency_seconds"] = it.dependency_seconds;
    j["training_seconds"] = it.training_seconds;
  }
  return j;
}

json report_to_json(const RunReport& r, bool timings) {
  json iters = json::array();
  for (const auto& it : r.iterations) iters.push_back(iteration_json(it, timings));
  json j = {{"dataset", r.dataset},
            {"seed", r.seed},
            {"pretrain", {{"val_auc", r.pretrain_val_auc}, {"test_auc", r.pretrain_test_auc},
                          {"epochs_run", r.pretrain_epochs}}},
            {"iterations", iters},
            {"val_auc", r.val_auc},
            {"test_auc", r.test_auc},
            {"directed_edges", r.directed_edges},
            {"added_edges", r.added_edges}};
  if (timings) {
    j["timings"] = {{"embedding_seconds", r.embedding_seconds},
                    {"pretrain_seconds", r.pretrain_seconds},
                    {"total_seconds", r.total_seconds}};
  }
  return j;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, "config: " + what); };
  if (!(center_ratio > 0.0 && center_ratio <= 1.0)) fail("center_ratio must be in (0, 1]");
  if (repetitions < 1) fail("repetitions must be >= 1");
  if (iterations < 0) fail("iterations must be >= 0");
  if (!(noise_sigma > 0.0)) fail("noise_sigma must be > 0");
  if (!std::isfinite(lambda_prune) || !std::isfinite(lambda_add)) fail("lambdas must be finite");
  if (bins < 2) fail("bins must be >= 2");
  if (embedding.epochs < 0 || linkpred.epochs < 0) fail("epochs must be >= 0");
  if (!(embedding.lr > 0.0) || !(linkpred.lr > 0.0)) fail("learning rates must be positive");
  if (embedding.hidden_dim == 0 || embedding.output_dim == 0 || linkpred.hidden_dim == 0 ||
      linkpred.latent_dim == 0) {
    fail("layer widths must be positive");
  }
  if (!(embedding.edge_drop >= 0.0 && embedding.edge_drop < 1.0)) fail("edge_drop must be in [0, 1)");
  if (!(embedding.feature_mask >= 0.0 && embedding.feature_mask < 1.0)) fail("feature_mask must be in [0, 1)");
  if (linkpred.patience < 1) fail("patience must be >= 1");
  if (!(linkpred.weights.alpha >= 0.0 && linkpred.weights.alpha <= 1.0)) fail("alpha must be in [0, 1]");
  if (!(linkpred.weights.beta >= 0.0)) fail("beta must be >= 0");
  if (!(split.train > 0.0 && split.val > 0.0 && split.test > 0.0) ||
      std::abs(split.train + split.val + split.test - 1.0) > 1e-9) {
    fail("split ratios must be positive and sum to 1");
  }
}

std::string run_config_to_json(const RunConfig& c) {
  const json j = {
      {"center_ratio", c.center_ratio},
      {"repetitions", c.repetitions},
      {"iterations", c.iterations},
      {"noise_sigma", c.noise_sigma},
      {"lambda_prune", c.lambda_prune},
      {"lambda_add", c.lambda_add},
      {"bins", c.bins},
      {"alpha", c.linkpred.weights.alpha},
      {"beta", c.linkpred.weights.beta},
      {"ablation", c.linkpred.weights.ablation},
      {"seed", c.seed},
      {"dump_interventions", c.dump_interventions},
      {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}},
      {"embedding",
       {{"hidden_dim", c.embedding.hidden_dim},
        {"output_dim", c.embedding.output_dim},
        {"edge_drop", c.embedding.edge_drop},
        {"feature_mask", c.embedding.feature_mask},
        {"lambda", c.embedding.lambda},
        {"epochs", c.embedding.epochs},
        {"lr", c.embedding.lr},
        {"weight_decay", c.embedding.weight_decay}}},
      {"linkpred",
       {{"hidden_dim", c.linkpred.hidden_dim},
        {"latent_dim", c.linkpred.latent_dim},
        {"epochs", c.linkpred.epochs},
        {"lr", c.linkpred.lr},
        {"weight_decay", c.linkpred.weight_decay},
        {"patience", c.linkpred.patience}}},
  };
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("config: ") + e.what());
  }
  RunConfig c;
  FieldReader top(j, "");
  top.read("center_ratio", c.center_ratio);
  top.read("repetitions", c.repetitions);
  top.read("iterations", c.iterations);
  top.read("noise_sigma", c.noise_sigma);
  top.read("lambda_prune", c.lambda_prune);
  top.read("lambda_add", c.lambda_add);
  top.read("bins", c.bins);
  top.read("alpha", c.linkpred.weights.alpha);
  top.read("beta", c.linkpred.weights.beta);
  top.read("ablation", c.linkpred.weights.ablation);
  top.read("seed", c.seed);
  top.read("dump_interventions", c.dump_interventions);
  if (const json* s = top.child("split")) {
    FieldReader r(*s, "split.");
    r.read("train", c.split.train);
    r.read("val", c.split.val);
    r.read("test", c.split.test);
    r.finish();
  }
  if (const json* e = top.child("embedding")) {
    FieldReader r(*e, "embedding.");
    r.read("hidden_dim", c.embedding.hidden_dim);
    r.read("output_dim", c.embedding.output_dim);
    r.read("edge_drop", c.embedding.edge_drop);
    r.read("feature_mask", c.embedding.feature_mask);
    r.read("lambda", c.embedding.lambda);
    r.read("epochs", c.embedding.epochs);
    r.read("lr", c.embedding.lr);
    r.read("weight_decay", c.embedding.weight_decay);
    r.finish();
  }
  if (const json* l = top.child("linkpred")) {
    FieldReader r(*l, "linkpred.");
    r.read("hidden_dim", c.linkpred.hidden_dim);
    r.read("latent_dim", c.linkpred.latent_dim);
    r.read("epochs", c.linkpred.epochs);
    r.read("lr", c.linkpred.lr);
    r.read("weight_decay", c.linkpred.weight_decay);
    r.read("patience", c.linkpred.patience);
    r.finish();
  }
  top.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "missing or unreadable file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return run_config_from_json(buf.str());
}

std::string metrics_json(const RunReport& report) { return report_to_json(report, false).dump(2) + "\n"; }

std::string report_json(const RunReport& report) { return report_to_json(report, true).dump(2) + "\n"; }

std::vector<DependencyScore> score_edges(const InterventionBatch& batch, std::span<const Edge> edges,
                                         const KdeOptions& options) {
  std::vector<DependencyScore> scores;
  scores.reserve(edges.size());
  for (const Edge& e : edges) scores.push_back(delta_h(batch, e.u, e.v, options));
  return scores;
}

std::vector<MiScore> score_candidates(const InterventionBatch& batch, std::span<const Edge> pairs,
                                      const KdeOptions& options) {
  std::vector<MiScore> scores;
  scores.reserve(pairs.size());
  for (const Edge& e : pairs) scores.push_back({e.u, e.v, mutual_information(batch, e.u, e.v, options)});
  return scores;
}

GraphDataset train_graph(const GraphDataset& dataset, const EdgeSplit& split) {
  return dataset.with_edges(split.train_pos);
}

LinkPredResult retrain_on_structure(const GraphDataset& train, const EdgeSplit& split,
                                    const CausalStructure& structure, const RunConfig& config) {
  config.validate();
  if (structure.n_nodes() != train.n_nodes) {
    throw Error(ErrorCode::kShape, "retrain_on_structure: structure and graph differ in node count");
  }
  LinkPredConfig lp = config.linkpred;
  lp.seed = config.seed;
  const SparsePropagator prop = to_propagator(structure);
  return train_linkpred(train.features, prop, prop, split, lp);
}

namespace {

struct ArtifactSink {
  std::optional<std::filesystem::path> dir;
  std::ofstream dependency;
  std::ofstream mi;

  void open(const RunConfig& config) {
    if (!dir) return;
    std::filesystem::create_directories(*dir);
    std::filesystem::remove(*dir / "FAILED.json");
    write_text(*dir / "config_used.json", run_config_to_json(config));
    dependency.open(*dir / "dependency_scores.csv", std::ios::binary);
    mi.open(*dir / "mi_scores.csv", std::ios::binary);
    if (!dependency || !mi) throw Error(ErrorCode::kIo, "cannot write score files under " + dir->string());
    write_dependency_header(dependency);
    write_mi_header(mi);
  }

  void structure(const CausalStructure& s) const {
    if (!dir) return;
    write_structure_csv(s, *dir / "causal_structure.csv");
    write_edits_jsonl(s, *dir / "edits.jsonl");
  }
};

void write_loss_curve(const std::vector<double>& curve, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out << i << ',' << format_double(curve[i]) << '\n';
  write_text(path, out.str());
}

}  // namespace

RunResult run_causalmp(const GraphDataset& dataset, const RunConfig& config,
                       const std::optional<std::filesystem::path>& out_dir) {
  const auto run_start = std::chrono::steady_clock::now();
  config.validate();
  dataset.validate();

  ArtifactSink sink{out_dir, {}, {}};
  RunResult result;
  RunReport& report = result.report;
  report.dataset = dataset.name;
  report.seed = config.seed;

  try {
    sink.open(config);

    result.split = split_edges(dataset, config.split, config.seed);
    if (out_dir) write_split_json(result.split, *out_dir / "split.json");
    const GraphDataset graph = train_graph(dataset, result.split);
    result.structure = CausalStructure::from_graph(graph);
    const SparsePropagator graph_prop = to_propagator(result.structure, PropagatorMode::kSymmetric);

    auto stage = std::chrono::steady_clock::now();
    EmbeddingConfig emb_cfg = config.embedding;
    emb_cfg.seed = config.seed;
    result.embedding = train_embedding(graph, emb_cfg);
    report.embedding_seconds = seconds_since(stage);
    if (out_dir) {
      save_embedding_model(result.embedding, *out_dir / "embedding_model.bin");
      write_embedding_curve_csv(result.embedding, *out_dir / "embedding_loss.csv");
    }

    LinkPredConfig lp_cfg = config.linkpred;
    lp_cfg.seed = config.seed;
    LinkPredTrainer trainer(graph.features, result.split, lp_cfg);

    stage = std::chrono::steady_clock::now();
    {
      const SparsePropagator causal_prop = to_propagator(result.structure);
      const PhaseMetrics pre = trainer.train_phase(graph_prop, causal_prop, lp_cfg.epochs);
      report.pretrain_epochs = pre.epochs_run;
      report.pretrain_val_auc = trainer.best_val_auc();
      report.pretrain_test_auc = trainer.test_auc_at_best();
    }
    report.pretrain_seconds = seconds_since(stage);

    KdeOptions kde;
    kde.bins = config.bins;
    Rng center_rng = make_stream(config.seed, stream::kCenters);
    Rng noise_seed_rng = make_stream(config.seed, stream::kNoise);

    for (int t = 1; t <= config.iterations; ++t) {
      IterationReport it;
      it.iteration = t;

      stage = std::chrono::steady_clock::now();
      InterventionPlan plan;
      plan.centers = sample_centers(graph.n_nodes, config.center_ratio, center_rng);
      plan.repetitions = config.repetitions;
      plan.noise_sigma = config.noise_sigma;
      plan.seed = noise_seed_rng();
      it.centers = plan.centers.size();
      const InterventionBatch batch = embed_interventions(result.embedding, graph_prop, graph.features, plan);
      if (out_dir && config.dump_interventions) {
        write_intervention_batch(batch, *out_dir / "interventions" / ("iteration_" + std::to_string(t)));
      }

      const std::vector<Edge> incident = edges_incident_to(result.structure, plan.centers);
      const auto scores = score_edges(batch, incident, kde);
      std::vector<double> deltas;
      deltas.reserve(scores.size());
      for (const auto& s : scores) deltas.push_back(s.delta);
      it.scored_edges = scores.size();
      if (!deltas.empty()) {
        it.delta_stats = compute_threshold(deltas, config.lambda_prune);
        it.prunes = apply_direction_prunes(result.structure, scores, it.delta_stats, t);
      }
      if (sink.dependency.is_open()) write_dependency_rows(sink.dependency, t, scores);

      if (dataset.labels) {
        std::size_t hetero = 0;
        for (const EditRecord& r : result.structure.log()) {
          if (r.iteration == t && r.kind == EditKind::kDirected &&
              (*dataset.labels)[r.pair.u] != (*dataset.labels)[r.pair.v]) {
            ++hetero;
          }
        }
        it.pruned_heterophilic = hetero;
      }

      const std::vector<Edge> candidates = triangle_candidates(result.structure, plan.centers);
      const auto mi_scores = score_candidates(batch, candidates, kde);
      std::vector<double> mis;
      mis.reserve(mi_scores.size());
      for (const auto& s : mi_scores) mis.push_back(s.mi);
      it.mi_candidates = mi_scores.size();
      if (!mis.empty()) {
        it.mi_stats = compute_threshold(mis, config.lambda_add);
        it.additions = apply_edge_additions(result.structure, mi_scores, it.mi_stats, t);
      }
      if (sink.mi.is_open()) write_mi_rows(sink.mi, t, mi_scores);
      it.dependency_seconds = seconds_since(stage);

      stage = std::chrono::steady_clock::now();
      const SparsePropagator causal_prop = to_propagator(result.structure);
      const PhaseMetrics phase = trainer.train_phase(graph_prop, causal_prop, lp_cfg.epochs);
      it.epochs_run = phase.epochs_run;
      it.best_val_auc = trainer.best_val_auc();
      it.test_auc = trainer.test_auc_at_best();
      it.training_seconds = seconds_since(stage);

      report.iterations.push_back(it);
    }

    report.val_auc = trainer.best_val_auc();
    report.test_auc = trainer.test_auc_at_best();
    report.directed_edges = result.structure.count(EdgeKind::kDirected);
    report.added_edges = result.structure.count(EdgeKind::kAdded);
    result.model = trainer.model();
    result.loss_curve = trainer.loss_curve();
    report.total_seconds = seconds_since(run_start);

    if (out_dir) {
      sink.dependency.close();
      sink.mi.close();
      sink.structure(result.structure);
      save_lp_model(result.model, *out_dir / "linkpred_model.bin");
      write_loss_curve(result.loss_curve, *out_dir / "train_loss.csv");
      write_text(*out_dir / "metrics.json", metrics_json(report));
      write_text(*out_dir / "report.json", report_json(report));
    }
  } catch (const std::exception& e) {
    if (out_dir && std::filesystem::is_directory(*out_dir)) {
      try {
        sink.dependency.flush();
        sink.mi.flush();
        if (result.structure.n_nodes() > 0) sink.structure(result.structure);
        report.total_seconds = seconds_since(run_start);
        write_text(*out_dir / "report.json", report_json(report));
        const auto* err = dynamic_cast<const Error*>(&e);
        const json marker = {{"error", err ? std::string(to_string(err->code())) : std::string("internal")},
                             {"message", e.what()},
                             {"completed_iterations", report.iterations.size()}};
        write_text(*out_dir / "FAILED.json", marker.dump(2) + "\n");
      } catch (...) {
      }
    }
    throw;
  }
  return result;
}

}  // namespace causalmp
