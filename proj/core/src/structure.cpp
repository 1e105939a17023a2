#include "causalmp/structure.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "causalmp/error.hpp"

namespace causalmp {

using nlohmann::json;

CausalStructure::CausalStructure(std::size_t n_nodes) : n_(n_nodes), neighbors_(n_nodes) {}

CausalStructure CausalStructure::from_graph(const GraphDataset& graph) {
  CausalStructure s(graph.n_nodes);
  for (const Edge& e : graph.edges) s.set_status(e, EdgeStatus::undirected());
  return s;
}

CausalStructure CausalStructure::replay(const GraphDataset& graph, std::span<const EditRecord> log) {
  CausalStructure s = from_graph(graph);
  for (const EditRecord& r : log) {
    const bool applied = r.kind == EditKind::kDirected
                             ? s.orient(r.cause.value(), r.effect.value(), r.iteration, r.score)
                             : s.add_edge(r.pair.u, r.pair.v, r.iteration, r.score);
    if (!applied) throw Error(ErrorCode::kInvalidArgument, "replay: edit log inconsistent with graph");
  }
  return s;
}

std::optional<EdgeStatus> CausalStructure::status(NodeId a, NodeId b) const {
  const auto it = edges_.find(Edge{a, b}.canonical());
  if (it == edges_.end()) return std::nullopt;
  return it->second;
}

std::size_t CausalStructure::count(EdgeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [kind](const auto& kv) { return kv.second.kind == kind; }));
}

void CausalStructure::link(NodeId a, NodeId b) {
  auto insert_sorted = [](std::vector<NodeId>& v, NodeId x) {
    const auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
  };
  insert_sorted(neighbors_[a], b);
  insert_sorted(neighbors_[b], a);
}

void CausalStructure::set_status(Edge pair, EdgeStatus st) {
  pair = pair.canonical();
  if (pair.u == pair.v || pair.v >= n_) {
    throw Error(ErrorCode::kInvalidArgument, "CausalStructure: invalid pair");
  }
  if (st.kind == EdgeKind::kDirected &&
      !((st.cause == pair.u && st.effect == pair.v) || (st.cause == pair.v && st.effect == pair.u))) {
    throw Error(ErrorCode::kInvalidArgument, "CausalStructure: directed status does not match pair");
  }
  edges_[pair] = st;
  link(pair.u, pair.v);
}

bool CausalStructure::orient(NodeId cause, NodeId effect, int iteration, double score) {
  const Edge pair = Edge{cause, effect}.canonical();
  const auto it = edges_.find(pair);
  if (it == edges_.end()) throw Error(ErrorCode::kInvalidArgument, "orient: edge not in structure");
  if (it->second.kind == EdgeKind::kDirected) return false;
  it->second = EdgeStatus::directed(cause, effect);
  log_.push_back({iteration, EditKind::kDirected, pair, score, cause, effect});
  return true;
}

bool CausalStructure::add_edge(NodeId a, NodeId b, int iteration, double score) {
  const Edge pair = Edge{a, b}.canonical();
  if (pair.u == pair.v || pair.v >= n_) throw Error(ErrorCode::kInvalidArgument, "add_edge: invalid pair");
  if (edges_.contains(pair)) return false;
  edges_[pair] = EdgeStatus::added();
  link(pair.u, pair.v);
  log_.push_back({iteration, EditKind::kAdded, pair, score, std::nullopt, std::nullopt});
  return true;
}

std::vector<AdjacencyEntry> CausalStructure::adjacency_entries() const {
  std::vector<AdjacencyEntry> entries;
  entries.reserve(2 * edges_.size());
  for (const auto& [pair, st] : edges_) {
    if (st.kind == EdgeKind::kDirected) {
      entries.push_back({st.effect, st.cause});
    } else {
      entries.push_back({pair.u, pair.v});
      entries.push_back({pair.v, pair.u});
    }
  }
  return entries;
}

std::vector<Edge> edges_incident_to(const CausalStructure& s, std::span<const NodeId> centers) {
  std::set<Edge> out;
  for (NodeId c : centers)
    for (NodeId nb : s.neighbors(c)) out.insert(Edge{c, nb}.canonical());
  return {out.begin(), out.end()};
}

std::vector<Edge> triangle_candidates(const CausalStructure& s, std::span<const NodeId> centers) {
  std::set<Edge> out;
  for (NodeId c : centers) {
    const auto& nb = s.neighbors(c);
    for (std::size_t x = 0; x < nb.size(); ++x)
      for (std::size_t y = x + 1; y < nb.size(); ++y) {
        if (!s.adjacent(nb[x], nb[y])) out.insert(Edge{nb[x], nb[y]});
      }
  }
  return {out.begin(), out.end()};
}

std::size_t apply_direction_prunes(CausalStructure& s, std::span<const DependencyScore> scores,
                                   const ThresholdStats& stats, int iteration) {
  std::size_t pruned = 0;
  for (const DependencyScore& sc : scores) {
    if (!sc.oriented() || !stats.selects(sc.delta)) continue;
    if (s.orient(*sc.cause, *sc.effect, iteration, sc.delta)) ++pruned;
  }
  return pruned;
}

std::size_t apply_edge_additions(CausalStructure& s, std::span<const MiScore> scores,
                                 const ThresholdStats& stats, int iteration) {
  std::size_t added = 0;
  for (const MiScore& sc : scores) {
    if (!stats.selects(sc.mi)) continue;
    if (s.add_edge(sc.i, sc.j, iteration, sc.mi)) ++added;
  }
  return added;
}

SparsePropagator to_propagator(const CausalStructure& s, PropagatorMode mode) {
  NormalizationMode norm = NormalizationMode::kSymmetric;
  if (mode == PropagatorMode::kInDegree || (mode == PropagatorMode::kAuto && s.has_directed())) {
    norm = NormalizationMode::kInDegree;
  }
  const auto entries = s.adjacency_entries();
  return normalize_adjacency(s.n_nodes(), entries, norm);
}

CausalStructure overlay_on(const GraphDataset& graph, const CausalStructure& learned) {
  if (learned.n_nodes() != graph.n_nodes) {
    throw Error(ErrorCode::kShape, "overlay_on: node counts differ");
  }
  CausalStructure s = CausalStructure::from_graph(graph);
  for (const auto& [pair, st] : learned.edges()) s.set_status(pair, st);
  return s;
}

void write_structure_csv(const CausalStructure& s, const std::filesystem::path& path) {
  std::map<Edge, int> last_edit;
  for (const EditRecord& r : s.log()) last_edit[r.pair] = r.iteration;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "u,v,status,cause,iteration\n";
  for (const auto& [pair, st] : s.edges()) {
    out << pair.u << ',' << pair.v << ',' << to_string(st.kind) << ',';
    if (st.kind == EdgeKind::kDirected) out << st.cause;
    out << ',';
    if (const auto it = last_edit.find(pair); it != last_edit.end()) out << it->second;
    out << '\n';
  }
}

CausalStructure read_structure_csv(const std::filesystem::path& path, std::size_t n_nodes) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "missing or unreadable file: " + path.string());
  CausalStructure s(n_nodes);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line_no == 1) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    while (f.size() < 5) f.emplace_back();
    try {
      const auto u = static_cast<NodeId>(std::stoul(f[0]));
      const auto v = static_cast<NodeId>(std::stoul(f[1]));
      if (u >= n_nodes || v >= n_nodes) throw Error(ErrorCode::kInvalidArgument, "node out of range");
      if (f[2] == "undirected") {
        s.set_status({u, v}, EdgeStatus::undirected());
      } else if (f[2] == "added") {
        s.set_status({u, v}, EdgeStatus::added());
      } else if (f[2] == "directed") {
        const auto cause = static_cast<NodeId>(std::stoul(f[3]));
        s.set_status({u, v}, EdgeStatus::directed(cause, cause == u ? v : u));
      } else {
        throw Error(ErrorCode::kFormat, "unknown status '" + f[2] + "'");
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) + ": malformed row");
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return s;
}

void write_edits_jsonl(const CausalStructure& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const EditRecord& r : s.log()) {
    json j = {{"iteration", r.iteration},
              {"kind", r.kind == EditKind::kDirected ? "directed" : "added"},
              {"u", r.pair.u},
              {"v", r.pair.v},
              {"score", r.score}};
    if (r.cause) j["cause"] = *r.cause;
    if (r.effect) j["effect"] = *r.effect;
    out << j.dump() << '\n';
  }
}

std::vector<EditRecord> read_edits_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "missing or unreadable file: " + path.string());
  std::vector<EditRecord> log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      EditRecord r;
      r.iteration = j.at("iteration").get<int>();
      r.kind = j.at("kind").get<std::string>() == "directed" ? EditKind::kDirected : EditKind::kAdded;
      r.pair = Edge{j.at("u").get<NodeId>(), j.at("v").get<NodeId>()}.canonical();
      r.score = j.at("score").get<double>();
      if (j.contains("cause")) r.cause = j["cause"].get<NodeId>();
      if (j.contains("effect")) r.effect = j["effect"].get<NodeId>();
      log.push_back(r);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
    }
  }
  return log;
}

}  // namespace causalmp
