#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace liftcut {

/// Plain adjacency-list digraph on nodes 0..n-1.
using Adjacency = std::vector<std::vector<std::size_t>>;

struct SccPartition {
  std::vector<std::size_t> component;  // node -> component id
  std::size_t count = 0;
};

/// Tarjan's algorithm, iterative.
SccPartition strongly_connected_components(const Adjacency& adj);

/// True when every node reaches every other node.
bool is_strongly_connected(const Adjacency& adj);

/// Shortest path (BFS) from `from` to `to` using only nodes for which
/// `allowed[node]` is true. Returns the node sequence including both ends.
std::optional<std::vector<std::size_t>> shortest_path(const Adjacency& adj, std::size_t from,
                                                      std::size_t to,
                                                      const std::vector<bool>& allowed);

/// Period of the strongly connected component containing `node`: gcd of the
/// lengths of all closed walks through it. Returns 0 if the component has no
/// cycle.
std::size_t component_period(const Adjacency& adj, const SccPartition& scc, std::size_t node);

}  // namespace liftcut
