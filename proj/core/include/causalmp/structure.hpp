#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "causalmp/dependency.hpp"
#include "causalmp/graph.hpp"
#include "causalmp/sparse.hpp"

namespace causalmp {

enum class EditKind : std::uint8_t { kDirected, kAdded };

struct EditRecord {
  int iteration = 0;
  EditKind kind = EditKind::kDirected;
  Edge pair;  // canonical
  double score = 0.0;
  // Set for kDirected.
  std::optional<NodeId> cause;
  std::optional<NodeId> effect;

  friend bool operator==(const EditRecord&, const EditRecord&) = default;
};

// Evolving causal adjacency A_c. Edits are monotone: an edge is never
// removed and a Directed edge is never re-oriented.
class CausalStructure {
 public:
  CausalStructure() = default;
  explicit CausalStructure(std::size_t n_nodes);

  // A_c^(0) = A: every original edge Undirected, empty log.
  static CausalStructure from_graph(const GraphDataset& graph);
  // init + edit log replay.
  static CausalStructure replay(const GraphDataset& graph, std::span<const EditRecord> log);

  std::size_t n_nodes() const noexcept { return n_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  const std::map<Edge, EdgeStatus>& edges() const noexcept { return edges_; }
  const std::vector<EditRecord>& log() const noexcept { return log_; }

  std::optional<EdgeStatus> status(NodeId a, NodeId b) const;
  bool adjacent(NodeId a, NodeId b) const { return status(a, b).has_value(); }
  // Nodes sharing an edge of any kind with `node`, sorted.
  const std::vector<NodeId>& neighbors(NodeId node) const { return neighbors_.at(node); }
  std::size_t count(EdgeKind kind) const;
  bool has_directed() const { return count(EdgeKind::kDirected) > 0; }

  // Undirected/Added -> Directed(cause -> effect). Returns false (no edit)
  // when the edge is already Directed.
  bool orient(NodeId cause, NodeId effect, int iteration, double score);
  // New symmetric Added edge. Returns false if the pair is already adjacent.
  bool add_edge(NodeId a, NodeId b, int iteration, double score);
  // Direct insertion used by loaders; no log entry.
  void set_status(Edge pair, EdgeStatus status);

  // Message-passing entries: both directions for Undirected/Added,
  // effect <- cause only for Directed.
  std::vector<AdjacencyEntry> adjacency_entries() const;

  friend bool operator==(const CausalStructure& a, const CausalStructure& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  void link(NodeId a, NodeId b);

  std::size_t n_ = 0;
  std::map<Edge, EdgeStatus> edges_;
  std::vector<std::vector<NodeId>> neighbors_;
  std::vector<EditRecord> log_;
};

// Edges of the structure with at least one endpoint in `centers`, canonical, sorted.
std::vector<Edge> edges_incident_to(const CausalStructure& s, std::span<const NodeId> centers);

// Non-adjacent pairs (a, b), a < b, that share a neighbour in `centers`.
std::vector<Edge> triangle_candidates(const CausalStructure& s, std::span<const NodeId> centers);

// Orients every scored edge whose delta passes the threshold. Returns the
// number of edges turned Directed.
std::size_t apply_direction_prunes(CausalStructure& s, std::span<const DependencyScore> scores,
                                   const ThresholdStats& stats, int iteration);

// Adds every candidate whose MI passes the threshold as an Added edge.
std::size_t apply_edge_additions(CausalStructure& s, std::span<const MiScore> scores,
                                 const ThresholdStats& stats, int iteration);

enum class PropagatorMode {
  kAuto,  // in-degree when any edge is Directed, symmetric otherwise
  kSymmetric,
  kInDegree,
};

SparsePropagator to_propagator(const CausalStructure& s, PropagatorMode mode = PropagatorMode::kAuto);

// Statuses of `learned` laid over the edges of `graph`: edges missing from
// `learned` stay Undirected, Added edges are carried over.
CausalStructure overlay_on(const GraphDataset& graph, const CausalStructure& learned);

// causal_structure.csv: u,v,status,cause,iteration (iteration of the last edit, blank if none)
void write_structure_csv(const CausalStructure& s, const std::filesystem::path& path);
CausalStructure read_structure_csv(const std::filesystem::path& path, std::size_t n_nodes);
// edits.jsonl: one JSON object per edit
void write_edits_jsonl(const CausalStructure& s, const std::filesystem::path& path);
std::vector<EditRecord> read_edits_jsonl(const std::filesystem::path& path);

}  // namespace causalmp
