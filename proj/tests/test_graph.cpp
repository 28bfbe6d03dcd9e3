#include <doctest.h>

#include <random>

#include "liftcut/errors.hpp"
#include "liftcut/graph.hpp"
#include "oracles.hpp"

using namespace liftcut;

namespace {

WeightedMultigraph load(const std::string& name) { return WeightedMultigraph::load(oracles::data(name)); }

oracles::Matrix to_rows(const Eigen::MatrixXd& p) {
  oracles::Matrix m(static_cast<std::size_t>(p.rows()), std::vector<double>(static_cast<std::size_t>(p.cols())));
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = p(i, j);
  return m;
}

}  // namespace

TEST_CASE("weights keep their literal") {
  const Weight w = Weight::parse("1/3");
  CHECK(w.value == doctest::Approx(1.0 / 3.0).epsilon(1e-16));
  CHECK(w.literal == "1/3");
  CHECK(Weight::parse("0.7").value == 0.7);
  CHECK_THROWS_AS(Weight::parse("1/0"), ValidationError);
  CHECK_THROWS_AS(Weight::parse("abc"), ValidationError);
  CHECK_THROWS_AS(Weight::parse(""), ValidationError);
}

TEST_CASE("parse and serialize round trip") {
  for (const char* f : {"theta3.g", "bouquet4.g", "c3b.g", "sym3.g", "theta3_pendant.g", "theta3_skew.g", "path3.g"}) {
    const auto g = load(f);
    const auto h = WeightedMultigraph::parse(g.serialize());
    CHECK(h.serialize() == g.serialize());
    CHECK(h.digest() == g.digest());
    for (ArcId a = 0; a < g.num_arcs(); ++a) CHECK(h.weight(a) == g.weight(a));
  }
}

TEST_CASE("inline syntax and defaults") {
  const auto g = WeightedMultigraph::parse("vertex o; edge l o o 1/2 1/2");
  CHECK(g.alpha() == 0.5);
  CHECK(g.num_vertices() == 1);
  CHECK(g.degree(0) == 2);
  CHECK(g.tail(0) == 0);
  CHECK(g.head(1) == 0);
  CHECK(g.arc_name(0) == "l+");
  CHECK(g.arc_name(1) == "l-");
  // Edges may name vertices declared later.
  CHECK_NOTHROW(WeightedMultigraph::parse("edge e a b 1 1; vertex a; vertex b"));
}

TEST_CASE("malformed graphs are rejected") {
  CHECK_THROWS_WITH_AS(WeightedMultigraph::parse("vertex a; vertex b; edge e a b 0.5 1"),
                       doctest::Contains("≠ 1 at a"), ValidationError);
  CHECK_THROWS_WITH_AS(WeightedMultigraph::parse("vertex a\nfoo"), doctest::Contains("line 2"), ValidationError);
  CHECK_THROWS_AS(WeightedMultigraph::parse("vertex a; vertex a"), ValidationError);
  CHECK_THROWS_AS(WeightedMultigraph::parse("vertex a; edge e a b 1 1"), ValidationError);
  CHECK_THROWS_AS(WeightedMultigraph::parse("vertex a; vertex b; edge e a b 0 0"), ValidationError);
  CHECK_THROWS_AS(WeightedMultigraph::parse("vertex a; vertex b; edge e a b 1.5 1"), ValidationError);
  CHECK_THROWS_AS(WeightedMultigraph::parse("alpha 1; vertex o; edge l o o 1/2 1/2"), ValidationError);
  CHECK_THROWS_AS(WeightedMultigraph::parse(""), ValidationError);
  CHECK_THROWS_AS(WeightedMultigraph::load("/nonexistent/graph.g"), ValidationError);
}

TEST_CASE("transition matrix is stochastic and lazy") {
  const auto g = load("theta3_pendant.g");
  for (double alpha : {0.0, 0.25, 0.5}) {
    const Eigen::MatrixXd p = g.transition_matrix(alpha);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(p(i, i) >= alpha);
    }
  }
}

TEST_CASE("assumption checks on the reference graphs") {
  const auto theta = check_assumptions(load("theta3.g"));
  CHECK(theta.irreducible);
  CHECK(theta.two_cycles);
  CHECK(theta.every_edge_on_cycle);
  CHECK(theta.period == 2);
  REQUIRE(theta.witness_cycles.size() == 2);
  const auto g = load("theta3.g");
  for (const auto& c : theta.witness_cycles) CHECK(is_oriented_cycle(g, c));
  CHECK_FALSE(cycles_mutually_inverse(theta.witness_cycles[0], theta.witness_cycles[1]));

  const auto c3 = check_assumptions(load("c3b.g"));
  CHECK(c3.irreducible);
  CHECK_FALSE(c3.two_cycles);  // the two orientations of one cycle
  CHECK(c3.period == 1);

  const auto path = check_assumptions(load("path3.g"));
  CHECK(path.irreducible);
  CHECK_FALSE(path.two_cycles);
  CHECK_FALSE(path.every_edge_on_cycle);
  CHECK(path.period == 2);

  const auto pend = check_assumptions(load("theta3_pendant.g"));
  CHECK(pend.two_cycles);
  CHECK_FALSE(pend.every_edge_on_cycle);

  const auto bq = check_assumptions(load("bouquet4.g"));
  CHECK(bq.two_cycles);
  CHECK(bq.period == 1);
}

TEST_CASE("a one-way edge breaks irreducibility") {
  const auto g = WeightedMultigraph::parse("vertex a; vertex b; edge s a a 1/2 0; edge e a b 1/2 0; edge l b b 1/2 1/2");
  CHECK_FALSE(check_assumptions(g).irreducible);
  CHECK_THROWS_AS(stationary_distribution(g), ReducibleChain);
}

TEST_CASE("stationary distribution against power iteration") {
  for (const char* f : {"theta3.g", "c3b.g", "theta3_pendant.g", "theta3_skew.g", "path3.g"}) {
    const auto g = load(f);
    const auto pi = stationary_distribution(g);
    const auto ref = oracles::stationary_power(to_rows(g.transition_matrix(0.5)));
    for (VertexId v = 0; v < g.num_vertices(); ++v) CHECK(pi[v] == doctest::Approx(ref[v]).epsilon(1e-9));
    CHECK(pi.residual <= 1e-12);
  }
  // Hand solution: pi(u) = 1/2, pi(v) = 3/8, pi(p) = 1/8.
  const auto pi = stationary_distribution(load("theta3_pendant.g"));
  CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(pi[1] == doctest::Approx(0.375).epsilon(1e-13));
  CHECK(pi[2] == doctest::Approx(0.125).epsilon(1e-13));
}

TEST_CASE("core of a graph with a hanging tree") {
  const auto g = load("theta3_pendant.g");
  const auto cd = core(g);
  CHECK(cd.core.num_vertices() == 2);
  CHECK(cd.core.num_edges() == 3);
  REQUIRE(cd.removed_vertices.size() == 1);
  CHECK(g.vertex_name(cd.removed_vertices[0]) == "p");
  // Renormalized: u's three core arcs carry 1/3 each.
  for (ArcId a = 0; a < cd.core.num_arcs(); ++a) CHECK(cd.core.weight(a) == doctest::Approx(1.0 / 3.0));
  // a = pi(u) 3/4 + pi(v) 1 = 3/8 + 3/8.
  CHECK(cd.core_step_fraction == doctest::Approx(0.75).epsilon(1e-13));

  const auto full = core(load("theta3.g"));
  CHECK(full.core_step_fraction == 1.0);
  CHECK(full.core.serialize() == load("theta3.g").serialize());
  CHECK_THROWS_AS(core(load("path3.g")), ValidationError);
}

TEST_CASE("transience classifier") {
  CHECK(is_cover_transient(load("c3b.g")).transient());
  CHECK(is_cover_transient(load("theta3.g")).transient());
  CHECK(is_cover_transient(load("bouquet4.g")).transient());
  CHECK(is_cover_transient(load("sym3.g")).kind == TransienceVerdict::Kind::recurrent);
  CHECK(is_cover_transient(load("path3.g")).kind == TransienceVerdict::Kind::recurrent_finite);
}

TEST_CASE("property: random regular-weight multigraphs validate and round trip") {
  std::mt19937_64 gen(12345);
  for (int trial = 0; trial < 50; ++trial) {
    const int nv = 1 + static_cast<int>(gen() % 4);
    const int ne = nv + 1 + static_cast<int>(gen() % 4);
    // Random edges; each vertex's outgoing weights are made uniform over its degree.
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < nv; ++v) edges.emplace_back(static_cast<int>(gen() % v), v);  // spanning tree
    while (static_cast<int>(edges.size()) < ne) edges.emplace_back(gen() % nv, gen() % nv);
    std::vector<int> deg(nv, 0);
    for (auto [a, b] : edges) ++deg[a], ++deg[b];
    std::string text;
    for (int v = 0; v < nv; ++v) text += "vertex v" + std::to_string(v) + "\n";
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto [a, b] = edges[e];
      text += "edge e" + std::to_string(e) + " v" + std::to_string(a) + " v" + std::to_string(b) + " 1/" +
              std::to_string(deg[a]) + " 1/" + std::to_string(deg[b]) + "\n";
    }
    const auto g = WeightedMultigraph::parse(text);
    CHECK(WeightedMultigraph::parse(g.serialize()).serialize() == g.serialize());
    const auto rep = check_assumptions(g);
    CHECK(rep.irreducible);
    for (const auto& c : rep.witness_cycles) CHECK(is_oriented_cycle(g, c));
    const auto pi = stationary_distribution(g);
    // Simple random walk: pi proportional to degree.
    for (int v = 0; v < nv; ++v) CHECK(pi[v] == doctest::Approx(deg[v] / (2.0 * ne)).epsilon(1e-10));
  }
}
