#include "liftcut/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "liftcut/digraph.hpp"
#include "liftcut/errors.hpp"
#include "liftcut/rng.hpp"

namespace liftcut {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string shortest_repr(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

template <class Int>
bool parse_integer(std::string_view s, Int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

Weight Weight::parse(std::string_view text) {
  const std::string_view s = trim(text);
  if (s.empty()) throw ValidationError("empty numeric literal");
  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    std::uint64_t p = 0, q = 0;
    const auto num = trim(s.substr(0, slash)), den = trim(s.substr(slash + 1));
    if (!parse_integer(num, p) || !parse_integer(den, q))
      throw ValidationError("malformed fraction literal '" + std::string(s) + "'");
    if (q == 0) throw ValidationError("zero denominator in '" + std::string(s) + "'");
    Weight w;
    w.value = static_cast<double>(p) / static_cast<double>(q);
    w.literal = std::to_string(p) + "/" + std::to_string(q);
    return w;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ValidationError("malformed numeric literal '" + std::string(s) + "'");
  return from_double(v);
}

Weight Weight::from_double(double v) { return Weight{v, shortest_repr(v)}; }

WeightedMultigraph::WeightedMultigraph(std::vector<std::string> vertex_names,
                                       std::vector<EdgeRecord> edges, Weight alpha)
    : names_(std::move(vertex_names)), edges_(std::move(edges)), alpha_(std::move(alpha)) {
  if (names_.empty()) throw ValidationError("graph has no vertices");
  if (!(alpha_.value >= 0.0 && alpha_.value < 1.0))
    throw ValidationError("alpha must lie in [0,1), got " + alpha_.literal);

  std::set<std::string_view> seen;
  for (const auto& name : names_) {
    if (name.empty()) throw ValidationError("empty vertex id");
    if (!seen.insert(name).second) throw ValidationError("duplicate vertex id '" + name + "'");
  }
  seen.clear();
  out_.assign(names_.size(), {});
  arc_weight_.resize(2 * edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const EdgeRecord& rec = edges_[e];
    if (rec.id.empty()) throw ValidationError("empty edge id");
    if (!seen.insert(rec.id).second) throw ValidationError("duplicate edge id '" + rec.id + "'");
    if (rec.u >= names_.size() || rec.v >= names_.size())
      throw ValidationError("edge '" + rec.id + "' has an unknown endpoint");
    for (const Weight* w : {&rec.w_uv, &rec.w_vu}) {
      if (!(w->value >= 0.0 && w->value <= 1.0))
        throw ValidationError("weight " + w->literal + " of edge '" + rec.id + "' is not in [0,1]");
    }
    if (!(rec.w_uv.value > 0.0 || rec.w_vu.value > 0.0))
      throw ValidationError("edge '" + rec.id + "' has no orientation with positive weight");
    arc_weight_[2 * e] = rec.w_uv.value;
    arc_weight_[2 * e + 1] = rec.w_vu.value;
    out_[rec.u].push_back(2 * e);
    out_[rec.v].push_back(2 * e + 1);
  }
  for (VertexId v = 0; v < names_.size(); ++v) {
    double sum = 0.0;
    for (ArcId a : out_[v]) sum += arc_weight_[a];
    if (std::abs(sum - 1.0) > kWeightTolerance)
      throw ValidationError("outgoing weight sum " + format_number(sum) + " ≠ 1 at " + names_[v]);
  }
}

WeightedMultigraph WeightedMultigraph::parse(std::string_view text) {
  std::vector<std::string> vertices;
  struct PendingEdge {
    EdgeRecord rec;
    std::string u, v;
    std::size_t line;
  };
  std::vector<PendingEdge> pending;
  Weight alpha = Weight::parse("1/2");
  bool alpha_seen = false;

  std::size_t line_no = 1;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t stop = pos;
    while (stop < text.size() && text[stop] != '\n' && text[stop] != ';') ++stop;
    const std::string_view stmt = trim(text.substr(pos, stop - pos));
    const std::size_t this_line = line_no;
    if (stop < text.size() && text[stop] == '\n') ++line_no;
    pos = stop + 1;

    if (stmt.empty() || stmt.front() == '#') continue;
    std::istringstream in{std::string(stmt)};
    std::vector<std::string> tok;
    for (std::string t; in >> t;) tok.push_back(t);
    auto fail = [&](const std::string& msg) -> ValidationError {
      return ValidationError("line " + std::to_string(this_line) + ": " + msg);
    };
    try {
      if (tok[0] == "alpha") {
        if (tok.size() != 2) throw fail("expected 'alpha <value>'");
        if (alpha_seen) throw fail("alpha given twice");
        alpha = Weight::parse(tok[1]);
        alpha_seen = true;
      } else if (tok[0] == "vertex") {
        if (tok.size() != 2) throw fail("expected 'vertex <id>'");
        vertices.push_back(tok[1]);
      } else if (tok[0] == "edge") {
        if (tok.size() != 6) throw fail("expected 'edge <id> <u> <v> <w_uv> <w_vu>'");
        PendingEdge pe;
        pe.rec.id = tok[1];
        pe.u = tok[2];
        pe.v = tok[3];
        pe.rec.w_uv = Weight::parse(tok[4]);
        pe.rec.w_vu = Weight::parse(tok[5]);
        pe.line = this_line;
        pending.push_back(std::move(pe));
      } else {
        throw fail("unknown directive '" + tok[0] + "'");
      }
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) throw;
      throw fail(msg);
    }
  }

  std::unordered_map<std::string, VertexId> index;
  for (VertexId v = 0; v < vertices.size(); ++v) {
    if (!index.emplace(vertices[v], v).second)
      throw ValidationError("duplicate vertex id '" + vertices[v] + "'");
  }
  std::vector<EdgeRecord> edges;
  edges.reserve(pending.size());
  for (auto& pe : pending) {
    const auto iu = index.find(pe.u), iv = index.find(pe.v);
    if (iu == index.end() || iv == index.end())
      throw ValidationError("line " + std::to_string(pe.line) + ": unknown vertex '" +
                            (iu == index.end() ? pe.u : pe.v) + "'");
    pe.rec.u = iu->second;
    pe.rec.v = iv->second;
    edges.push_back(std::move(pe.rec));
  }
  return WeightedMultigraph(std::move(vertices), std::move(edges), std::move(alpha));
}

WeightedMultigraph WeightedMultigraph::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open graph file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string WeightedMultigraph::serialize() const {
  std::string out = "alpha " + alpha_.literal + "\n";
  for (const auto& name : names_) out += "vertex " + name + "\n";
  for (const auto& e : edges_) {
    out += "edge " + e.id + " " + names_[e.u] + " " + names_[e.v] + " " + e.w_uv.literal + " " +
           e.w_vu.literal + "\n";
  }
  return out;
}

std::uint64_t WeightedMultigraph::digest() const { return fnv1a(serialize()); }

std::string WeightedMultigraph::digest_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest()));
  return buf;
}

std::optional<VertexId> WeightedMultigraph::find_vertex(std::string_view name) const {
  for (VertexId v = 0; v < names_.size(); ++v)
    if (names_[v] == name) return v;
  return std::nullopt;
}

std::optional<std::size_t> WeightedMultigraph::find_edge(std::string_view id) const {
  for (std::size_t e = 0; e < edges_.size(); ++e)
    if (edges_[e].id == id) return e;
  return std::nullopt;
}

std::string WeightedMultigraph::arc_name(ArcId a) const {
  return edges_[edge_of(a)].id + (is_reversed(a) ? "-" : "+");
}

std::size_t WeightedMultigraph::max_degree() const {
  std::size_t d = 0;
  for (const auto& o : out_) d = std::max(d, o.size());
  return d;
}

double WeightedMultigraph::min_positive_weight() const {
  double m = 1.0;
  for (double w : arc_weight_)
    if (w > 0.0) m = std::min(m, w);
  return m;
}

WeightedMultigraph WeightedMultigraph::with_alpha(Weight alpha) const {
  return WeightedMultigraph(names_, edges_, std::move(alpha));
}

Eigen::MatrixXd WeightedMultigraph::transition_matrix(double alpha) const {
  const auto n = static_cast<Eigen::Index>(num_vertices());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index v = 0; v < n; ++v) p(v, v) = alpha;
  for (ArcId a = 0; a < num_arcs(); ++a)
    p(static_cast<Eigen::Index>(tail(a)), static_cast<Eigen::Index>(head(a))) += (1.0 - alpha) * weight(a);
  return p;
}

// ---------------------------------------------------------------------------
// Assumptions

namespace {

Adjacency vertex_adjacency(const WeightedMultigraph& g) {
  Adjacency adj(g.num_vertices());
  for (ArcId a = 0; a < g.num_arcs(); ++a)
    if (g.positive(a)) adj[g.tail(a)].push_back(g.head(a));
  return adj;
}

std::vector<ArcId> inverse_cycle(std::span<const ArcId> c) {
  std::vector<ArcId> out(c.rbegin(), c.rend());
  for (auto& a : out) a = inverse(a);
  return out;
}

bool cyclic_equal(std::span<const ArcId> a, std::span<const ArcId> b) {
  if (a.size() != b.size()) return false;
  if (a.empty()) return true;
  for (std::size_t shift = 0; shift < a.size(); ++shift) {
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) ok = a[i] == b[(i + shift) % b.size()];
    if (ok) return true;
  }
  return false;
}

struct CycleStructure {
  Adjacency h;
  SccPartition scc;
  std::vector<bool> cyclic;      // per component
  std::vector<bool> branching;   // per component: some node has >= 2 internal out-arcs
};

CycleStructure cycle_structure(const WeightedMultigraph& g) {
  CycleStructure cs;
  cs.h = non_backtracking_adjacency(g);
  cs.scc = strongly_connected_components(cs.h);
  std::vector<std::size_t> size(cs.scc.count, 0);
  cs.cyclic.assign(cs.scc.count, false);
  cs.branching.assign(cs.scc.count, false);
  for (std::size_t x = 0; x < cs.h.size(); ++x) ++size[cs.scc.component[x]];
  for (std::size_t x = 0; x < cs.h.size(); ++x) {
    const std::size_t c = cs.scc.component[x];
    std::size_t internal = 0;
    for (std::size_t y : cs.h[x]) {
      if (cs.scc.component[y] != c) continue;
      ++internal;
      if (size[c] > 1 || y == x) cs.cyclic[c] = true;
    }
    if (internal >= 2) cs.branching[c] = true;
  }
  return cs;
}

/// Closed walk through node `x` that starts with the H-arc x -> y.
std::vector<ArcId> cycle_through(const CycleStructure& cs, std::size_t x, std::size_t y) {
  const std::size_t comp = cs.scc.component[x];
  std::vector<bool> allowed(cs.h.size());
  for (std::size_t i = 0; i < cs.h.size(); ++i) allowed[i] = cs.scc.component[i] == comp;
  std::vector<ArcId> cycle{x};
  if (y == x) return cycle;
  auto path = shortest_path(cs.h, y, x, allowed);
  cycle.insert(cycle.end(), path->begin(), path->end() - 1);
  return cycle;
}

}  // namespace

std::vector<std::vector<std::size_t>> non_backtracking_adjacency(const WeightedMultigraph& g) {
  std::vector<std::vector<std::size_t>> h(g.num_arcs());
  for (ArcId a = 0; a < g.num_arcs(); ++a) {
    if (!g.positive(a)) continue;
    for (ArcId b : g.out_arcs(g.head(a)))
      if (b != inverse(a) && g.positive(b)) h[a].push_back(b);
  }
  return h;
}

bool is_oriented_cycle(const WeightedMultigraph& g, std::span<const ArcId> cycle) {
  if (cycle.empty()) return false;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    const ArcId a = cycle[i], b = cycle[(i + 1) % cycle.size()];
    if (a >= g.num_arcs() || !g.positive(a)) return false;
    if (g.head(a) != g.tail(b) || b == inverse(a)) return false;
  }
  return true;
}

bool cycles_mutually_inverse(std::span<const ArcId> a, std::span<const ArcId> b) {
  return cyclic_equal(a, inverse_cycle(b));
}

AssumptionReport check_assumptions(const WeightedMultigraph& g) {
  AssumptionReport r;
  r.all_positive = true;
  for (ArcId a = 0; a < g.num_arcs(); ++a) r.all_positive = r.all_positive && g.positive(a);
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    if (g.positive(2 * e) && g.positive(2 * e + 1)) r.some_edge_both_ways = true;

  const Adjacency vadj = vertex_adjacency(g);
  const SccPartition vscc = strongly_connected_components(vadj);
  r.irreducible = vscc.count == 1;
  {
    std::vector<bool> done(vscc.count, false);
    std::size_t period = 0;
    for (VertexId v = 0; v < g.num_vertices(); ++v) {
      if (done[vscc.component[v]]) continue;
      done[vscc.component[v]] = true;
      period = std::gcd(period, component_period(vadj, vscc, v));
    }
    r.period = period;
  }

  const CycleStructure cs = cycle_structure(g);
  r.every_edge_on_cycle = true;
  for (ArcId a = 0; a < g.num_arcs(); ++a)
    if (g.positive(a) && !cs.cyclic[cs.scc.component[a]]) r.every_edge_on_cycle = false;

  std::vector<std::vector<ArcId>> simple_cycles;  // one per non-branching cyclic component
  for (std::size_t c = 0; c < cs.scc.count; ++c) {
    if (!cs.cyclic[c]) continue;
    std::size_t x = 0;
    while (cs.scc.component[x] != c) ++x;
    if (cs.branching[c]) {
      if (r.two_cycles) continue;
      for (std::size_t node = 0; node < cs.h.size(); ++node) {
        if (cs.scc.component[node] != c) continue;
        std::vector<std::size_t> inside;
        for (std::size_t y : cs.h[node])
          if (cs.scc.component[y] == c) inside.push_back(y);
        if (inside.size() < 2) continue;
        auto c1 = cycle_through(cs, node, inside[0]);
        auto c2 = cycle_through(cs, node, inside[1]);
        if (cycles_mutually_inverse(c1, c2)) {
          std::vector<ArcId> joined = c1;
          joined.insert(joined.end(), c2.begin(), c2.end());
          c2 = std::move(joined);
        }
        r.witness_cycles.push_back(std::move(c1));
        r.witness_cycles.push_back(std::move(c2));
        r.two_cycles = true;
        break;
      }
    } else {
      std::vector<ArcId> cyc{x};
      for (std::size_t cur = x;;) {
        std::size_t next = cur;
        for (std::size_t y : cs.h[cur])
          if (cs.scc.component[y] == c) next = y;
        if (next == x) break;
        cyc.push_back(next);
        cur = next;
      }
      simple_cycles.push_back(std::move(cyc));
    }
  }
  if (!r.two_cycles) {
    for (std::size_t i = 0; i < simple_cycles.size() && !r.two_cycles; ++i)
      for (std::size_t j = i + 1; j < simple_cycles.size() && !r.two_cycles; ++j)
        if (!cycles_mutually_inverse(simple_cycles[i], simple_cycles[j])) {
          r.two_cycles = true;
          r.witness_cycles = {simple_cycles[i], simple_cycles[j]};
        }
    if (!r.two_cycles) r.witness_cycles = simple_cycles;
  }
  return r;
}

StationaryDistribution stationary_distribution(const WeightedMultigraph& g) {
  if (!is_strongly_connected(vertex_adjacency(g)))
    throw ReducibleChain("the random walk on the base graph is not irreducible");
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  const Eigen::MatrixXd p = g.transition_matrix(0.0);
  Eigen::MatrixXd m = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  m.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::VectorXd pi = m.fullPivLu().solve(rhs);

  StationaryDistribution out;
  out.p.assign(pi.data(), pi.data() + n);
  const Eigen::VectorXd r = p.transpose() * pi - pi;
  out.residual = r.cwiseAbs().maxCoeff();
  return out;
}

CoreDecomposition core(const WeightedMultigraph& g) {
  const std::size_t nv = g.num_vertices(), ne = g.num_edges();
  std::vector<bool> vertex_alive(nv, true), edge_alive(ne, true);
  std::vector<std::size_t> deg(nv);
  for (VertexId v = 0; v < nv; ++v) deg[v] = g.degree(v);

  std::vector<VertexId> queue;
  for (VertexId v = 0; v < nv; ++v)
    if (deg[v] <= 1) queue.push_back(v);
  std::vector<VertexId> removed;
  while (!queue.empty()) {
    const VertexId x = queue.back();
    queue.pop_back();
    if (!vertex_alive[x] || deg[x] > 1) continue;
    vertex_alive[x] = false;
    removed.push_back(x);
    for (ArcId a : g.out_arcs(x)) {
      const std::size_t e = edge_of(a);
      if (!edge_alive[e]) continue;
      edge_alive[e] = false;
      const VertexId y = g.head(a);
      if (vertex_alive[y] && --deg[y] <= 1) queue.push_back(y);
    }
  }
  if (std::none_of(vertex_alive.begin(), vertex_alive.end(), [](bool b) { return b; }))
    throw ValidationError("acyclic graph: the core is empty");
  std::sort(removed.begin(), removed.end());

  const StationaryDistribution pi = stationary_distribution(g);

  CoreDecomposition out{g, {}, {}, removed, 0.0};
  if (removed.empty()) {
    out.core_to_original_vertex.resize(nv);
    std::iota(out.core_to_original_vertex.begin(), out.core_to_original_vertex.end(), 0);
    out.core_to_original_arc.resize(g.num_arcs());
    std::iota(out.core_to_original_arc.begin(), out.core_to_original_arc.end(), 0);
    out.core_step_fraction = 1.0;
    return out;
  }

  std::vector<VertexId> new_index(nv, 0);
  std::vector<std::string> names;
  for (VertexId v = 0; v < nv; ++v) {
    if (!vertex_alive[v]) continue;
    new_index[v] = names.size();
    names.push_back(g.vertex_name(v));
    out.core_to_original_vertex.push_back(v);
  }
  std::vector<double> kept(nv, 0.0);
  std::vector<bool> lost_arc(nv, false);
  for (ArcId a = 0; a < g.num_arcs(); ++a) {
    if (edge_alive[edge_of(a)])
      kept[g.tail(a)] += g.weight(a);
    else
      lost_arc[g.tail(a)] = true;
  }
  double fraction = 0.0;
  for (VertexId v = 0; v < nv; ++v) fraction += pi[v] * kept[v];
  out.core_step_fraction = fraction;

  auto renormalized = [&](ArcId a) {
    const VertexId x = g.tail(a);
    const Weight& w = is_reversed(a) ? g.edge(edge_of(a)).w_vu : g.edge(edge_of(a)).w_uv;
    if (!lost_arc[x]) return w;
    if (kept[x] <= 0.0)
      throw ValidationError("core vertex " + g.vertex_name(x) + " has no positive outgoing weight");
    return Weight::from_double(w.value / kept[x]);
  };
  std::vector<EdgeRecord> edges;
  for (std::size_t e = 0; e < ne; ++e) {
    if (!edge_alive[e]) continue;
    const EdgeRecord& rec = g.edge(e);
    edges.push_back(EdgeRecord{rec.id, new_index[rec.u], new_index[rec.v], renormalized(2 * e),
                               renormalized(2 * e + 1)});
    out.core_to_original_arc.push_back(2 * e);
    out.core_to_original_arc.push_back(2 * e + 1);
  }
  out.core = WeightedMultigraph(std::move(names), std::move(edges), g.alpha_weight());
  return out;
}

TransienceVerdict is_cover_transient(const WeightedMultigraph& g) {
  if (!is_strongly_connected(vertex_adjacency(g)))
    throw ReducibleChain("the random walk on the base graph is not irreducible");
  TransienceVerdict v;
  std::optional<CoreDecomposition> cd;
  try {
    cd.emplace(core(g));
  } catch (const ReducibleChain&) {
    throw;
  } catch (const ValidationError&) {
    v.kind = TransienceVerdict::Kind::recurrent_finite;
    v.reason = "the base graph has no cycle, so its universal cover is finite";
    return v;
  }
  const WeightedMultigraph& c = cd->core;
  const AssumptionReport rep = check_assumptions(c);
  if (rep.two_cycles) {
    v.kind = TransienceVerdict::Kind::transient;
    v.reason = "two non-inverse cycles on the core";
    return v;
  }
  if (rep.witness_cycles.empty()) {
    v.kind = TransienceVerdict::Kind::recurrent;
    v.reason = "the core has no positive-weight oriented cycle";
    return v;
  }
  const auto& cycle = rep.witness_cycles.front();
  double forward = 1.0, backward = 1.0;
  for (ArcId a : cycle) {
    forward *= c.weight(a);
    backward *= c.weight(inverse(a));
  }
  const bool equal = std::abs(forward - backward) <= kWeightTolerance * std::max(forward, backward);
  v.kind = equal ? TransienceVerdict::Kind::recurrent : TransienceVerdict::Kind::transient;
  v.reason = "single cycle pair: w(C) = " + format_number(forward) +
             (equal ? " = " : " ≠ ") + "w(C^-1) = " + format_number(backward);
  return v;
}

}  // namespace liftcut
