#include <doctest.h>

#include <cmath>

#include "liftcut/analyzer.hpp"
#include "liftcut/errors.hpp"
#include "liftcut/stats.hpp"
#include "oracles.hpp"

using namespace liftcut;

namespace {
WeightedMultigraph load(const std::string& name) { return WeightedMultigraph::load(oracles::data(name)); }
}  // namespace

TEST_CASE("theta graph hand solution") {
  const auto g = load("theta3.g");
  const auto green = solve_first_passage(g);
  for (double q : green.q) CHECK(q == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(green.residual <= 1e-12);
  const auto law = ray_law(g, green);
  for (double w : law.w_hat) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  for (double p : law.pi_hat) CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
  const auto r = entropy(g, 0.5);
  CHECK(std::abs(r.h_w - std::log(2.0)) <= 1e-9);
  CHECK(std::abs(r.s0 - 1.0 / 3.0) <= 1e-9);
  CHECK(std::abs(r.h_alpha - std::log(2.0) / 6.0) <= 1e-9);
  CHECK(std::abs(r.h_alpha_inverse_scaling - std::log(2.0) / 6.0) <= 1e-9);
  CHECK(std::abs(entropy(g, 0.0).h_alpha - std::log(2.0) / 3.0) <= 1e-9);
}

TEST_CASE("bouquets match the regular-tree closed form") {
  for (int d : {4, 6, 8}) {
    const auto g = load("bouquet" + std::to_string(d) + ".g");
    const auto r = entropy(g, 0.0);
    for (double q : r.green.q) CHECK(std::abs(q - oracles::regular_tree_q(d)) <= 1e-9);
    for (double w : r.ray.w_hat) CHECK(std::abs(w - 1.0 / d) <= 1e-9);
    CHECK(std::abs(r.h_w - std::log(d - 1.0)) <= 1e-9);
    CHECK(std::abs(r.s0 - (d - 2.0) / d) <= 1e-9);
    CHECK(std::abs(r.h_alpha - oracles::regular_h0(d)) <= 1e-9);
  }
}

TEST_CASE("biased cycle: first passage against the walk on Z") {
  const auto g = load("c3b.g");
  const auto green = solve_first_passage(g);
  for (ArcId a = 0; a < g.num_arcs(); ++a) {
    const double away = 1.0 - g.weight(a);  // probability of stepping away from head(a)
    CHECK(green.q[a] == doctest::Approx(oracles::biased_hit_below(away)).epsilon(1e-9));
  }
  const auto r = entropy(g, 0.0);
  CHECK(r.degenerate);
  CHECK(r.h_alpha == 0.0);
  CHECK(r.s0 == doctest::Approx(oracles::biased_drift(0.7)).epsilon(1e-9));
  CHECK_THROWS_AS(predict_mixing_time(r, 1000.0, 0.25), DegenerateEntropy);
}

TEST_CASE("recurrent cover walks are refused") {
  CHECK_THROWS_AS(entropy(load("sym3.g"), 0.5), RecurrentCover);
  CHECK_THROWS_AS(entropy(load("path3.g"), 0.5), RecurrentCover);
  CHECK_THROWS_AS(entropy(load("theta3.g"), 1.0), ValidationError);
}

TEST_CASE("solver preconditions and non-convergence") {
  CHECK_THROWS_AS(solve_first_passage(load("theta3_pendant.g")), ValidationError);
  SolverOptions tight;
  tight.max_iter = 3;
  try {
    solve_first_passage(load("theta3.g"), tight);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.iterations() == 3);
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("hanging trees scale the entropy by the core fraction") {
  const auto r = entropy(load("theta3_pendant.g"), 0.5);
  CHECK(r.a_frac == doctest::Approx(0.75));
  CHECK(r.h_alpha == doctest::Approx(0.75 * std::log(2.0) / 6.0).epsilon(1e-10));
}

TEST_CASE("property: the ray leaves every vertex through exactly one arc") {
  for (const char* f : {"theta3.g", "theta3_skew.g", "bouquet4.g", "c3b.g"}) {
    const auto g = load(f);
    const auto green = solve_first_passage(g);
    const auto law = ray_law(g, green);
    for (VertexId v = 0; v < g.num_vertices(); ++v) {
      double s = 0.0;
      for (ArcId a : g.out_arcs(v)) s += law.w_hat[a];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    // Q_hat rows on the support are distributions and pi_hat is invariant.
    for (ArcId e = 0; e < g.num_arcs(); ++e)
      if (law.recurrent_support[e]) CHECK(law.q_hat.row(static_cast<Eigen::Index>(e)).sum() == doctest::Approx(1.0));
    CHECK(law.stationarity_residual <= 1e-10);
    // The minimal solution is a fixed point of the sweep.
    const auto again = first_passage_sweep(g, green.q);
    for (std::size_t i = 0; i < again.size(); ++i) CHECK(std::min(again[i], 1.0) == doctest::Approx(green.q[i]).epsilon(1e-10));
  }
}

TEST_CASE("property: iteration from any start below the minimal solution reaches it") {
  const auto g = load("theta3_skew.g");
  const auto base = solve_first_passage(g);
  std::vector<double> start(base.q.size());
  for (std::size_t i = 0; i < start.size(); ++i) start[i] = 0.5 * base.q[i] * static_cast<double>(i % 3) / 2.0;
  const auto other = solve_first_passage(g, {}, start);
  for (std::size_t i = 0; i < start.size(); ++i) CHECK(other.q[i] == doctest::Approx(base.q[i]).epsilon(1e-10));
}

TEST_CASE("laziness scales entropy and speed linearly") {
  const auto g = load("theta3_skew.g");
  const auto r0 = entropy(g, 0.0);
  for (double a : {0.1, 0.5, 0.9}) {
    const auto r = entropy(g, a);
    CHECK(r.h_alpha == doctest::Approx((1.0 - a) * r0.h_alpha).epsilon(1e-12));
    CHECK(r.s_alpha == doctest::Approx((1.0 - a) * r0.s0).epsilon(1e-12));
  }
}

TEST_CASE("mixing-time prediction") {
  auto r = entropy(load("theta3.g"), 0.5);
  const double n = 4096.0;
  auto p = predict_mixing_time(r, n, 0.25);
  CHECK(p.t_center == doctest::Approx(std::log(n) * 6.0 / std::log(2.0)));
  CHECK_FALSE(p.t_lower);
  r.sigma_mc = 0.5;
  p = predict_mixing_time(r, n, 0.25);
  REQUIRE(p.t_lower);
  const double scale = 0.5 / std::pow(r.h_alpha, 1.5);
  CHECK(*p.window_scale == doctest::Approx(scale));
  // Upper-tail quantile of 1/4 is +0.6745.
  CHECK(*p.t_lower == doctest::Approx(p.t_center + 0.6744897501960817 * scale * std::sqrt(std::log(n))).epsilon(1e-9));
  CHECK(*predict_mixing_time(r, n, 0.5).t_lower == doctest::Approx(p.t_center).epsilon(1e-12));
  CHECK_THROWS_AS(predict_mixing_time(r, 1.0, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(predict_mixing_time(r, n, 1.5), std::invalid_argument);
}

TEST_CASE("chain CLT parameters against the two-state closed form") {
  for (auto [a, b] : {std::pair{0.3, 0.2}, std::pair{0.9, 0.6}, std::pair{0.05, 0.1}}) {
    Eigen::MatrixXd p(2, 2);
    p << 1 - a, a, b, 1 - b;
    const std::vector<double> pi{b / (a + b), a / (a + b)}, f{0.0, 1.0};
    const auto c = chain_clt_params(p, pi, f);
    CHECK(c.mean == doctest::Approx(pi[1]));
    CHECK(c.v_iid == doctest::Approx(pi[0] * pi[1]));
    CHECK(c.v_asymptotic == doctest::Approx(oracles::two_state_asymptotic_variance(a, b)).epsilon(1e-12));
  }
  Eigen::MatrixXd red(2, 2);
  red << 1, 0, 0, 1;
  CHECK_THROWS_AS(chain_clt_params(red, std::vector<double>{0.5, 0.5}, std::vector<double>{0, 1}), ReducibleChain);
}

TEST_CASE("statistics helpers") {
  CHECK(stats::normal_quantile(0.975) == doctest::Approx(1.959963984540054));
  CHECK(stats::normal_upper_quantile(0.25) == doctest::Approx(0.6744897501960817));
  const std::vector<double> x{1, 2, 3, 4, 5}, y{3, 5, 7, 9, 11};
  const auto fit = stats::least_squares(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(stats::variance(std::vector<double>{1, 2, 3, 4}) == doctest::Approx(5.0 / 3.0));
}
