#include <doctest.h>

#include <cmath>
#include <memory>

#include "liftcut/errors.hpp"
#include "liftcut/lift.hpp"
#include "oracles.hpp"

using namespace liftcut;

namespace {

std::shared_ptr<const WeightedMultigraph> load(const std::string& name) {
  return std::make_shared<const WeightedMultigraph>(WeightedMultigraph::load(oracles::data(name)));
}

std::vector<double> outcome_frequencies(const std::shared_ptr<const WeightedMultigraph>& g, std::size_t n,
                                        std::size_t outcomes, int draws, bool sequential) {
  std::vector<double> freq(outcomes, 0.0);
  RngStream rng(2024);
  for (int i = 0; i < draws; ++i) {
    const Lift l = sequential ? generate_sequential_lift(g, n, rng) : generate_uniform_lift(g, n, rng);
    freq.at(lift_outcome_index(l)) += 1.0 / draws;
  }
  return freq;
}

}  // namespace

TEST_CASE("the 1-lift is the base graph") {
  const auto g = load("theta3_skew.g");
  RngStream rng(1);
  const Lift l = generate_uniform_lift(g, 1, rng);
  CHECK(l.num_vertices() == g->num_vertices());
  const Eigen::MatrixXd p = g->transition_matrix(0.5);
  for (LiftVertex x = 0; x < l.num_vertices(); ++x) {
    std::vector<double> row(l.num_vertices(), 0.0);
    for (auto [y, pr] : transition_row(l, x, 0.5)) row[y] += pr;
    for (LiftVertex y = 0; y < l.num_vertices(); ++y)
      CHECK(row[y] == doctest::Approx(p(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y))).epsilon(1e-15));
  }
}

TEST_CASE("lifted arcs invert and project") {
  for (const char* f : {"theta3.g", "bouquet4.g", "theta3_pendant.g"}) {
    const auto g = load(f);
    RngStream rng(7);
    for (bool seq : {false, true}) {
      const Lift l = seq ? generate_sequential_lift(g, 17, rng) : generate_uniform_lift(g, 17, rng);
      for (std::size_t e = 0; e < g->num_edges(); ++e) {
        std::vector<bool> seen(17, false);
        for (auto s : l.permutation(e)) seen.at(s) = true;
        CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
      }
      for (LiftVertex x = 0; x < l.num_vertices(); ++x)
        for (ArcId a : g->out_arcs(l.type(x))) {
          const LiftVertex y = l.neighbor(x, a);
          CHECK(l.type(y) == g->head(a));
          CHECK(l.neighbor(y, inverse(a)) == x);
        }
      const std::vector<LiftVertex> walk{0, l.neighbor(0, g->out_arcs(0)[0])};
      const auto proj = project_path(l, walk);
      CHECK(proj[1] == g->head(g->out_arcs(0)[0]));
    }
  }
}

TEST_CASE("uniform lift of the theta graph with n = 2") {
  const auto g = load("theta3.g");
  const int draws = 40000;
  const auto freq = outcome_frequencies(g, 2, 8, draws, false);
  const double se = std::sqrt((1.0 / 8.0) * (7.0 / 8.0) / draws);
  for (double f : freq) CHECK(std::abs(f - 1.0 / 8.0) <= 3.0 * se);
}

TEST_CASE("both generators are uniform on a bouquet with n = 3") {
  const auto g = load("bouquet4.g");  // two loops: 6^2 outcomes
  for (bool seq : {false, true}) {
    const auto freq = outcome_frequencies(g, 3, 36, 36000, seq);
    double tv = 0.0;
    for (double f : freq) tv += 0.5 * std::abs(f - 1.0 / 36.0);
    CHECK(tv < 0.05);
    for (double f : freq) CHECK(f > 0.0);
  }
  const auto seq = outcome_frequencies(load("theta3.g"), 2, 8, 20000, true);
  double tv = 0.0;
  for (double f : seq) tv += 0.5 * std::abs(f - 1.0 / 8.0);
  CHECK(tv < 0.05);
}

TEST_CASE("a single loop lifted twice") {
  const auto g = std::make_shared<const WeightedMultigraph>(WeightedMultigraph::parse("vertex o; edge l o o 1/2 1/2"));
  const Lift swap(g, 2, {{1, 0}});
  // Both orientations of the loop lead to the other fiber.
  auto row = transition_row(swap, 0, 0.0);
  REQUIRE(row.size() == 1);
  CHECK(row[0].first == 1);
  CHECK(row[0].second == doctest::Approx(1.0));
  const Lift id(g, 2, {{0, 1}});
  row = transition_row(id, 0, 0.25);
  REQUIRE(row.size() == 1);
  CHECK(row[0].first == 0);
  CHECK(row[0].second == doctest::Approx(1.0));
}

TEST_CASE("transition rows of a small lift") {
  const auto g = load("theta3_skew.g");
  // sigma_a = id, sigma_b = swap, sigma_c = id; u = 0, v = 1, n = 2.
  const Lift l(g, 2, {{0, 1}, {1, 0}, {0, 1}});
  const auto row = transition_row(l, l.vertex(0, 0), 0.5);
  REQUIRE(row.size() == 3);
  CHECK(row[0].first == l.vertex(0, 0));
  CHECK(row[0].second == doctest::Approx(0.5));
  CHECK(row[1].first == l.vertex(1, 0));
  CHECK(row[1].second == doctest::Approx(0.5 * (1.0 / 2.0 + 1.0 / 6.0)));
  CHECK(row[2].first == l.vertex(1, 1));
  CHECK(row[2].second == doctest::Approx(0.5 / 3.0));
  CHECK_THROWS_AS(transition_row(l, 0, 1.0), ValidationError);
  CHECK_THROWS_AS(transition_row(l, 4, 0.5), std::out_of_range);
}

TEST_CASE("lifted stationary law") {
  for (const char* f : {"theta3.g", "theta3_skew.g", "theta3_pendant.g", "c3b.g"}) {
    const auto g = load(f);
    const auto pi = stationary_distribution(*g);
    RngStream rng(11);
    const Lift l = generate_uniform_lift(g, 64, rng);
    const auto pi_n = lift_stationary(pi, 64);
    double total = 0.0;
    for (double p : pi_n) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(pi_n[l.vertex(0, 5)] == doctest::Approx(pi[0] / 64.0));
    CHECK(lift_stationary_residual(l, pi_n, 0.5) <= 1e-12);
  }
}

TEST_CASE("base eigenvalues are eigenvalues of every lift") {
  for (const char* f : {"theta3.g", "theta3_skew.g", "c3b.g", "theta3_pendant.g"}) {
    const auto g = load(f);
    RngStream rng(5);
    const Lift l = generate_uniform_lift(g, 12, rng);
    CHECK(spectrum_inheritance_check(l, 0.5) <= 1e-10);
    // Without holding the bipartite theta graph has eigenvalue -1.
    CHECK(spectrum_inheritance_check(l, 0.0) <= 1e-10);
  }
}

TEST_CASE("lift files round trip and are tied to their base") {
  const auto g = load("theta3.g");
  RngStream rng(3);
  const Lift l = generate_uniform_lift(g, 9, rng, 3);
  const Lift back = Lift::from_json(g, l.to_json());
  CHECK(back.to_json() == l.to_json());
  CHECK(back.seed() == 3);
  for (std::size_t e = 0; e < g->num_edges(); ++e) CHECK(back.permutation(e) == l.permutation(e));
  CHECK_THROWS_AS(Lift::from_json(load("theta3_skew.g"), l.to_json()), ValidationError);
  CHECK_THROWS_AS(Lift::from_json(g, "{not json"), ValidationError);
  CHECK_THROWS_AS(Lift(g, 2, {{0, 0}, {0, 1}, {0, 1}}), ValidationError);
  CHECK_THROWS_AS(Lift(g, 2, {{0, 1}}), ValidationError);
  CHECK_THROWS_AS(generate_uniform_lift(g, 0, rng), ValidationError);
}
