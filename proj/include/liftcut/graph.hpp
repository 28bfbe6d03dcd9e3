#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace liftcut {

using VertexId = std::size_t;
/// Oriented edge index. Edge e gives arcs 2e (u -> v) and 2e+1 (v -> u), so
/// the inverse of an arc flips the low bit.
using ArcId = std::size_t;

inline constexpr double kWeightTolerance = 1e-12;

constexpr ArcId inverse(ArcId a) noexcept { return a ^ 1U; }
constexpr std::size_t edge_of(ArcId a) noexcept { return a >> 1U; }
constexpr bool is_reversed(ArcId a) noexcept { return (a & 1U) != 0; }

/// A probability together with the literal it was written as. Fraction
/// literals ("1/3") are preserved so that serialization round-trips exactly.
struct Weight {
  double value = 0.0;
  std::string literal;

  static Weight parse(std::string_view text);
  static Weight from_double(double v);
};

struct EdgeRecord {
  std::string id;
  VertexId u = 0;
  VertexId v = 0;
  Weight w_uv;
  Weight w_vu;
};

/// Finite weighted multigraph with loops, per-orientation weights and a
/// holding probability. Immutable once constructed; the constructor enforces
/// every structural invariant.
class WeightedMultigraph {
 public:
  WeightedMultigraph(std::vector<std::string> vertex_names, std::vector<EdgeRecord> edges,
                     Weight alpha = Weight::parse("1/2"));

  /// Parses the line-oriented graph format. ';' is accepted as a line break.
  static WeightedMultigraph parse(std::string_view text);
  static WeightedMultigraph load(const std::filesystem::path& path);

  /// Canonical text form; parse(serialize()) reproduces the graph bit-exactly.
  std::string serialize() const;
  std::uint64_t digest() const;
  std::string digest_hex() const;

  std::size_t num_vertices() const noexcept { return names_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::size_t num_arcs() const noexcept { return 2 * edges_.size(); }

  const std::string& vertex_name(VertexId v) const { return names_.at(v); }
  std::optional<VertexId> find_vertex(std::string_view name) const;
  const EdgeRecord& edge(std::size_t e) const { return edges_.at(e); }
  std::optional<std::size_t> find_edge(std::string_view id) const;

  VertexId tail(ArcId a) const { return is_reversed(a) ? edges_[edge_of(a)].v : edges_[edge_of(a)].u; }
  VertexId head(ArcId a) const { return tail(inverse(a)); }
  double weight(ArcId a) const { return arc_weight_[a]; }
  bool positive(ArcId a) const { return arc_weight_[a] > 0.0; }
  /// "<edge id>+" for u -> v, "<edge id>-" for v -> u.
  std::string arc_name(ArcId a) const;

  /// Every arc leaving v, including zero-weight ones; a loop contributes both
  /// of its orientations.
  std::span<const ArcId> out_arcs(VertexId v) const { return out_[v]; }
  /// Number of edge ends at v (a loop counts twice).
  std::size_t degree(VertexId v) const { return out_[v].size(); }
  std::size_t max_degree() const;
  double min_positive_weight() const;

  double alpha() const noexcept { return alpha_.value; }
  const Weight& alpha_weight() const noexcept { return alpha_; }
  WeightedMultigraph with_alpha(Weight alpha) const;

  /// Dense P(u, v) = alpha 1{u=v} + (1 - alpha) sum_{a: u -> v} w(a).
  Eigen::MatrixXd transition_matrix(double alpha) const;

 private:
  std::vector<std::string> names_;
  std::vector<EdgeRecord> edges_;
  Weight alpha_;
  std::vector<double> arc_weight_;
  std::vector<std::vector<ArcId>> out_;
};

struct AssumptionReport {
  bool irreducible = false;
  bool two_cycles = false;
  bool all_positive = false;
  bool some_edge_both_ways = false;
  bool every_edge_on_cycle = false;
  /// Period of the vertex chain with no holding (gcd over its strongly
  /// connected components); 0 if the chain has no cycle at all.
  std::size_t period = 0;
  /// Closed non-backtracking positive-weight walks, as arc sequences.
  std::vector<std::vector<ArcId>> witness_cycles;
};

/// Non-backtracking structure: nodes are positive-weight arcs, with an arc
/// a -> b whenever head(a) = tail(b) and b != inverse(a) and w(b) > 0.
std::vector<std::vector<std::size_t>> non_backtracking_adjacency(const WeightedMultigraph& g);

AssumptionReport check_assumptions(const WeightedMultigraph& g);

/// True when `cycle` is a closed, cyclically non-backtracking walk of
/// positive-weight arcs.
bool is_oriented_cycle(const WeightedMultigraph& g, std::span<const ArcId> cycle);
/// Cyclic-sequence equality between `a` and the inverse of `b`.
bool cycles_mutually_inverse(std::span<const ArcId> a, std::span<const ArcId> b);

struct StationaryDistribution {
  std::vector<double> p;
  double residual = 0.0;  // max_v |(pi P)(v) - pi(v)|

  double operator[](VertexId v) const { return p[v]; }
};

/// Unique invariant law of the vertex chain. Throws ReducibleChain unless the
/// chain is irreducible. The result does not depend on alpha.
StationaryDistribution stationary_distribution(const WeightedMultigraph& g);

struct CoreDecomposition {
  WeightedMultigraph core;
  std::vector<VertexId> core_to_original_vertex;
  std::vector<ArcId> core_to_original_arc;
  std::vector<VertexId> removed_vertices;
  /// Stationary fraction of steps that traverse a core arc (holding excluded).
  double core_step_fraction = 1.0;
};

/// Iterated leaf stripping with outgoing-weight renormalization. Throws
/// ValidationError if nothing survives (acyclic graph).
CoreDecomposition core(const WeightedMultigraph& g);

struct TransienceVerdict {
  enum class Kind { transient, recurrent, recurrent_finite };
  Kind kind = Kind::recurrent;
  std::string reason;

  bool transient() const noexcept { return kind == Kind::transient; }
};

TransienceVerdict is_cover_transient(const WeightedMultigraph& g);

}  // namespace liftcut
