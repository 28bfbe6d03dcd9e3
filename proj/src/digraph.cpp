#include "liftcut/digraph.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>

namespace liftcut {

SccPartition strongly_connected_components(const Adjacency& adj) {
  const std::size_t n = adj.size();
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, kUnset), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  SccPartition out;
  out.component.assign(n, kUnset);
  std::size_t next_index = 0;

  struct Frame {
    std::size_t node;
    std::size_t edge;
  };
  std::vector<Frame> call;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < adj[f.node].size()) {
        const std::size_t w = adj[f.node][f.edge++];
        if (index[w] == kUnset) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.node] = std::min(low[f.node], index[w]);
        }
        continue;
      }
      const std::size_t v = f.node;
      call.pop_back();
      if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          out.component[w] = out.count;
        } while (w != v);
        ++out.count;
      }
    }
  }
  return out;
}

bool is_strongly_connected(const Adjacency& adj) {
  if (adj.empty()) return false;
  return strongly_connected_components(adj).count == 1;
}

std::optional<std::vector<std::size_t>> shortest_path(const Adjacency& adj, std::size_t from,
                                                      std::size_t to,
                                                      const std::vector<bool>& allowed) {
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> parent(adj.size(), kUnset);
  std::deque<std::size_t> queue{from};
  parent[from] = from;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    if (v == to) break;
    for (std::size_t w : adj[v]) {
      if (!allowed[w] || parent[w] != kUnset) continue;
      parent[w] = v;
      queue.push_back(w);
    }
  }
  if (parent[to] == kUnset) return std::nullopt;
  std::vector<std::size_t> path{to};
  while (path.back() != from) path.push_back(parent[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

std::size_t component_period(const Adjacency& adj, const SccPartition& scc, std::size_t node) {
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  const std::size_t comp = scc.component[node];
  std::vector<std::size_t> level(adj.size(), kUnset);
  std::deque<std::size_t> queue{node};
  level[node] = 0;
  std::size_t g = 0;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t w : adj[v]) {
      if (scc.component[w] != comp) continue;
      if (level[w] == kUnset) {
        level[w] = level[v] + 1;
        queue.push_back(w);
      } else {
        const auto diff = static_cast<long long>(level[v]) + 1 - static_cast<long long>(level[w]);
        g = std::gcd(g, static_cast<std::size_t>(diff < 0 ? -diff : diff));
      }
    }
  }
  return g;
}

}  // namespace liftcut
