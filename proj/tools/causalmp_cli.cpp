#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "causalmp/case_study.hpp"
#include "causalmp/error.hpp"
#include "causalmp/graph.hpp"
#include "causalmp/node_classification.hpp"
#include "causalmp/pipeline.hpp"
#include "causalmp/structure.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace causalmp;

namespace {

struct Common {
  std::string data;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool needs_data = true) {
  auto* data = cmd->add_option("--data", c.data, "dataset directory (manifest.json, features.csv, edges.csv)");
  if (needs_data) data->required();
  cmd->add_option("--config", c.config, "JSON run configuration; omitted fields use defaults");
  cmd->add_option("--out", c.out, "output directory")->required();
  cmd->add_option("--seed", c.seed, "overrides the config seed");
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.stddev}, {"count", s.count}}; }

int cmd_run(const Common& c) {
  const RunConfig cfg = resolve_config(c);
  const GraphDataset data = load_dataset(c.data);
  const RunResult r = run_causalmp(data, cfg, fs::path(c.out));
  std::cout << json{{"val_auc", r.report.val_auc},
                    {"test_auc", r.report.test_auc},
                    {"directed_edges", r.report.directed_edges},
                    {"added_edges", r.report.added_edges},
                    {"out", c.out}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_split(const Common& c) {
  const RunConfig cfg = resolve_config(c);
  const GraphDataset data = load_dataset(c.data);
  const EdgeSplit split = split_edges(data, cfg.split, cfg.seed);
  fs::create_directories(c.out);
  write_split_json(split, fs::path(c.out) / "split.json");
  std::cout << json{{"train", split.train_pos.size()}, {"val", split.val_pos.size()}, {"test", split.test_pos.size()}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_casestudy(const Common& c, bool with_run) {
  const RunConfig cfg = resolve_config(c);
  const GraphDataset data = load_dataset(c.data);
  EmbeddingConfig emb = cfg.embedding;
  emb.seed = cfg.seed;
  const EmbeddingModel f = train_embedding(data, emb);
  const CaseStudyReport rep = case_study(data, f, {cfg.center_ratio, cfg.repetitions, cfg.noise_sigma, cfg.bins, cfg.seed});

  json j = {{"edges", rep.scores.size()},
            {"batches", rep.batches},
            {"homophilic_delta", summary_json(rep.homophilic_delta)},
            {"heterophilic_delta", summary_json(rep.heterophilic_delta)}};
  if (rep.test) {
    j["welch"] = {{"z", rep.test->z}, {"p_value", rep.test->p_value}};
  } else {
    j["welch"] = "not_applicable";
  }
  if (with_run) {
    const RunResult run = run_causalmp(data, cfg, fs::path(c.out) / "run");
    json fractions = json::array();
    for (const auto& it : run.report.iterations) {
      if (it.prunes == 0 || !it.pruned_heterophilic) {
        fractions.push_back(nullptr);
      } else {
        fractions.push_back(static_cast<double>(*it.pruned_heterophilic) / static_cast<double>(it.prunes));
      }
    }
    j["pruned_heterophilic_fraction"] = fractions;
  }
  write_json(fs::path(c.out) / "casestudy.json", j);

  std::ofstream csv(fs::path(c.out) / "casestudy_delta.csv", std::ios::binary);
  if (!csv) throw Error(ErrorCode::kIo, "cannot write casestudy_delta.csv");
  csv << "i,j,delta,heterophilic\n";
  for (std::size_t k = 0; k < rep.scores.size(); ++k) {
    csv << rep.scores[k].i << ',' << rep.scores[k].j << ',' << json(rep.scores[k].delta).dump() << ','
        << (rep.heterophilic[k] ? 1 : 0) << '\n';
  }
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_nodeclass(const Common& c, int shots, int n_seeds, const std::string& structure_path) {
  const RunConfig cfg = resolve_config(c);
  const GraphDataset data = load_dataset(c.data);
  const CausalStructure original = CausalStructure::from_graph(data);
  CausalStructure learned;
  if (structure_path.empty()) {
    learned = run_causalmp(data, cfg, fs::path(c.out) / "run").structure;
  } else {
    learned = read_structure_csv(structure_path, data.n_nodes);
  }
  const CausalStructure causal = overlay_on(data, learned);

  NodeClassConfig nc;
  nc.shots = shots;
  nc.seeds.clear();
  for (int s = 0; s < n_seeds; ++s) nc.seeds.push_back(cfg.seed + static_cast<std::uint64_t>(s));
  const NodeClassReport rep = eval_node_classification(data, original, causal, nc);
  const json j = {{"shots", shots},
                  {"seeds", nc.seeds},
                  {"original", {{"accuracy", rep.original.accuracy}, {"summary", summary_json(rep.original.summary)}}},
                  {"causal", {{"accuracy", rep.causal.accuracy}, {"summary", summary_json(rep.causal.summary)}}},
                  {"difference", rep.difference}};
  write_json(fs::path(c.out) / "nodeclass.json", j);
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_retrain(const Common& c, const std::string& structure_path) {
  const RunConfig cfg = resolve_config(c);
  const GraphDataset data = load_dataset(c.data);
  const EdgeSplit split = split_edges(data, cfg.split, cfg.seed);
  const GraphDataset train = train_graph(data, split);
  const CausalStructure structure = read_structure_csv(structure_path, data.n_nodes);
  const LinkPredResult on_structure = retrain_on_structure(train, split, structure, cfg);
  const LinkPredResult on_graph = retrain_on_structure(train, split, CausalStructure::from_graph(train), cfg);
  const json j = {{"structure", {{"val_auc", on_structure.val_auc}, {"test_auc", on_structure.test_auc}}},
                  {"original", {{"val_auc", on_graph.val_auc}, {"test_auc", on_graph.test_auc}}}};
  write_json(fs::path(c.out) / "retrain.json", j);
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_gen_sbm(const SbmParams& p, const std::string& out) {
  const GraphDataset g = generate_sbm(p);
  save_dataset(g, out);
  std::cout << json{{"nodes", g.n_nodes}, {"edges", g.edges.size()},
                    {"homophily", homophily_ratio(g.edges, *g.labels)}, {"out", out}}
                   .dump()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causalmp: causal message passing for link prediction on heterophilic graphs"};
  app.require_subcommand(1);

  Common run_opts, split_opts, case_opts, nc_opts, rt_opts;
  auto* run = app.add_subcommand("run", "full iterative structure learning and link prediction");
  add_common(run, run_opts);

  auto* split = app.add_subcommand("split", "write the edge split for a seed");
  add_common(split, split_opts);

  bool with_run = false;
  auto* casestudy = app.add_subcommand("casestudy", "delta on every edge, homophilic vs heterophilic");
  add_common(casestudy, case_opts);
  casestudy->add_flag("--with-run", with_run, "also run the full procedure and report pruned-edge heterophily");

  int shots = 5;
  int n_seeds = 5;
  std::string nc_structure;
  auto* nodeclass = app.add_subcommand("nodeclass", "k-shot GCN accuracy on the original vs learned structure");
  add_common(nodeclass, nc_opts);
  nodeclass->add_option("--shots", shots, "labelled nodes per class")->check(CLI::PositiveNumber);
  nodeclass->add_option("--seeds", n_seeds, "number of seeds, starting at --seed")->check(CLI::PositiveNumber);
  nodeclass->add_option("--structure", nc_structure, "causal_structure.csv; runs the procedure when omitted");

  std::string rt_structure;
  auto* retrain = app.add_subcommand("retrain", "fresh link predictor on a saved structure");
  add_common(retrain, rt_opts);
  retrain->add_option("--structure", rt_structure, "causal_structure.csv from a previous run")->required();

  SbmParams sbm;
  std::string sbm_out;
  auto* gen = app.add_subcommand("gen-sbm", "generate a stochastic block model dataset");
  gen->add_option("--n", sbm.n_nodes, "number of nodes");
  gen->add_option("--classes", sbm.n_classes, "number of classes");
  gen->add_option("--rh", sbm.target_homophily, "target homophily ratio");
  gen->add_option("--degree", sbm.avg_degree, "average degree");
  gen->add_option("--features", sbm.n_features, "feature dimension");
  gen->add_option("--seed", sbm.seed, "generator seed");
  gen->add_option("--out", sbm_out, "output dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*split) return cmd_split(split_opts);
    if (*casestudy) return cmd_casestudy(case_opts, with_run);
    if (*nodeclass) return cmd_nodeclass(nc_opts, shots, n_seeds, nc_structure);
    if (*retrain) return cmd_retrain(rt_opts, rt_structure);
    if (*gen) return cmd_gen_sbm(sbm, sbm_out);
  } catch (const Error& e) {
    std::cerr << json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
