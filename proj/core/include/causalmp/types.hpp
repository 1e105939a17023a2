#pragma once

#include <compare>
#include <cstdint>
#include <string_view>

namespace causalmp {

using NodeId = std::uint32_t;

// Node pair. Stored edges are canonical (u < v); decode inputs may be in
// either order.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  Edge canonical() const noexcept { return u < v ? Edge{u, v} : Edge{v, u}; }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class EdgeKind : std::uint8_t { kUndirected, kDirected, kAdded };

std::string_view to_string(EdgeKind kind);

// Directed edges carry the message direction cause -> effect; the other kinds
// pass messages both ways.
struct EdgeStatus {
  EdgeKind kind = EdgeKind::kUndirected;
  NodeId cause = 0;
  NodeId effect = 0;

  static EdgeStatus undirected() { return {}; }
  static EdgeStatus added() { return {EdgeKind::kAdded, 0, 0}; }
  static EdgeStatus directed(NodeId cause, NodeId effect) {
    return {EdgeKind::kDirected, cause, effect};
  }
  friend bool operator==(const EdgeStatus&, const EdgeStatus&) = default;
};

}  // namespace causalmp
