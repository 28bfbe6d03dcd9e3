#include <doctest.h>

#include <cmath>
#include <memory>

#include "liftcut/errors.hpp"
#include "liftcut/mixing.hpp"
#include "oracles.hpp"

using namespace liftcut;

namespace {

std::shared_ptr<const WeightedMultigraph> load(const std::string& name) {
  return std::make_shared<const WeightedMultigraph>(WeightedMultigraph::load(oracles::data(name)));
}

/// Dense lift kernel built from neighbor() alone.
oracles::Matrix dense_lift(const Lift& l, double alpha) {
  const auto& g = l.base();
  oracles::Matrix p(l.num_vertices(), std::vector<double>(l.num_vertices(), 0.0));
  for (LiftVertex x = 0; x < l.num_vertices(); ++x) {
    p[x][x] += alpha;
    for (ArcId a : g.out_arcs(l.type(x))) p[x][l.neighbor(x, a)] += (1.0 - alpha) * g.weight(a);
  }
  return p;
}

/// Two-point symmetric chain [[1-a, a], [a, 1-a]].
SparseKernel two_state(double a) { return SparseKernel(2, {{{0, 1 - a}, {1, a}}, {{0, a}, {1, 1 - a}}}); }

}  // namespace

TEST_CASE("push and pull against dense products") {
  const auto g = load("theta3_skew.g");
  RngStream rng(4);
  const Lift l = generate_uniform_lift(g, 5, rng);
  const SparseKernel k = SparseKernel::from_lift(l, 0.3);
  const auto p = dense_lift(l, 0.3);
  std::vector<double> mu(l.num_vertices()), f(l.num_vertices()), out(l.num_vertices());
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = f[i] = 1.0 + static_cast<double>(i % 3);
  k.push(mu, out);
  const auto ref = oracles::step(mu, p);
  for (std::size_t i = 0; i < mu.size(); ++i) CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-14));
  k.pull(f, out);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) s += p[i][j] * f[j];
    CHECK(out[i] == doctest::Approx(s).epsilon(1e-14));
  }
}

TEST_CASE("propagation by hand") {
  const SparseKernel k = two_state(0.25);
  const auto r = propagate(k, {1.0, 0.0}, 2);
  // (3/4, 1/4) then (5/8, 3/8).
  CHECK(r.mu[0] == doctest::Approx(0.625));
  CHECK(r.mu[1] == doctest::Approx(0.375));
  CHECK(r.max_mass_drift <= 1e-15);
  CHECK(total_variation(r.mu, std::vector<double>{0.5, 0.5}) == doctest::Approx(0.125));
  CHECK_THROWS_AS(propagate(k, {1.0}, 1), std::invalid_argument);
}

TEST_CASE("1-lift propagation equals the base chain") {
  const auto g = load("theta3_pendant.g");
  RngStream rng(1);
  const Lift l = generate_uniform_lift(g, 1, rng);
  const auto p = dense_lift(l, 0.5);
  std::vector<double> mu{0.0, 0.0, 1.0}, ref = mu;
  for (int t = 0; t < 9; ++t) ref = oracles::step(ref, p);
  const auto r = propagate(l, mu, 0.5, 9);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.mu[i] == doctest::Approx(ref[i]).epsilon(1e-14));
}

TEST_CASE("projection identity") {
  for (const char* f : {"theta3.g", "theta3_pendant.g", "bouquet4.g"}) {
    const auto g = load(f);
    RngStream rng(9);
    const Lift l = generate_uniform_lift(g, 33, rng);
    CHECK(projection_identity_check(l, 5, 0.5, 40) <= 1e-12);
    CHECK(projection_identity_check(l, 0, 0.0, 40) <= 1e-12);
  }
  // Independent version on a small lift: project by hand and compare with base powers.
  const auto g = load("theta3_skew.g");
  RngStream rng(2);
  const Lift l = generate_uniform_lift(g, 4, rng);
  const auto pn = dense_lift(l, 0.5);
  oracles::Matrix pb(2, std::vector<double>(2, 0.0));
  const Eigen::MatrixXd base = g->transition_matrix(0.5);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) pb[i][j] = base(i, j);
  std::vector<double> mu(l.num_vertices(), 0.0), nu{0.0, 1.0};
  mu[l.vertex(1, 2)] = 1.0;
  for (int t = 0; t < 15; ++t) {
    mu = oracles::step(mu, pn);
    nu = oracles::step(nu, pb);
    for (VertexId v = 0; v < 2; ++v) {
      double s = 0.0;
      for (std::size_t i = 0; i < 4; ++i) s += mu[l.vertex(v, i)];
      CHECK(s == doctest::Approx(nu[v]).epsilon(1e-13));
    }
  }
}

TEST_CASE("distance to stationarity never increases") {
  const auto g = load("theta3.g");
  RngStream rng(6);
  const Lift l = generate_uniform_lift(g, 200, rng);
  const auto c = mixing_curve(l, 0, 0.5, kDefaultEps, 2000);
  CHECK(c.max_tv_increase <= 1e-12);
  CHECK_FALSE(c.cap_exceeded);
  CHECK(c.max_mass_drift <= 1e-12);
  for (std::size_t k = 1; k < c.eps.size(); ++k) CHECK(*c.t_eps[k] >= *c.t_eps[k - 1]);
  CHECK(c.tv.front() == doctest::Approx(1.0 - 1.0 / 400.0));
  const auto capped = mixing_curve(l, 0, 0.5, kDefaultEps, 3);
  CHECK(capped.cap_exceeded);
  CHECK_FALSE(capped.t_eps.back());
}

TEST_CASE("two-point chain mixes in one step") {
  const auto g = std::make_shared<const WeightedMultigraph>(
      WeightedMultigraph::parse("vertex a; vertex b; edge e a b 1 1"));
  RngStream rng(1);
  const Lift l = generate_uniform_lift(g, 1, rng);
  const std::vector<double> eps{0.25};
  // alpha = 1/2: mu_1 = (1/2, 1/2) exactly.
  const auto c = mixing_curve(l, 0, 0.5, eps, 10);
  CHECK(*c.t_eps[0] == 1);
  // alpha = 0 alternates; only the averaged curve crosses.
  const auto z = mixing_curve(l, 0, 0.0, eps, 10);
  CHECK(z.parity_warning);
  CHECK_FALSE(z.t_eps[0]);
  CHECK(*z.t_eps_avg[0] == 0);
  CHECK(z.cap_exceeded);
}

TEST_CASE("start policies") {
  CHECK(StartPolicy::parse("all").all);
  CHECK(StartPolicy::parse("sample:7").k == 7);
  CHECK(StartPolicy::parse("sample:7").to_string() == "sample:7");
  CHECK_THROWS_AS(StartPolicy::parse("sample:0"), ValidationError);
  CHECK_THROWS_AS(StartPolicy::parse("some"), ValidationError);
  const auto g = load("theta3.g");
  RngStream rng(1);
  const Lift l = generate_uniform_lift(g, 10, rng);
  RngStream srng(2);
  auto s = choose_starts(l, StartPolicy::parse("sample:8"), srng);
  std::sort(s.begin(), s.end());
  CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
  CHECK(s.size() == 8);
  CHECK(choose_starts(l, StartPolicy::parse("all"), srng).size() == 20);
  CHECK(choose_starts(l, StartPolicy::parse("sample:50"), srng).size() == 20);
}

TEST_CASE("extremes over starts") {
  MixingCurve a, b, c;
  a.t_eps = {5};
  b.t_eps = {9};
  c.t_eps = {2};
  a.start = 1, b.start = 2, c.start = 3;
  const std::vector<MixingCurve> curves{a, b, c};
  const auto ex = extremes(curves, 0);
  CHECK(*ex.t_max == 9);
  CHECK(ex.argmax == 2);
  CHECK(*ex.t_min == 2);
  CHECK(ex.argmin == 3);
  MixingCurve never;
  never.t_eps = {std::nullopt};
  const std::vector<MixingCurve> with_unreached{a, never};
  CHECK_FALSE(extremes(with_unreached, 0).t_max);
  CHECK(*extremes(with_unreached, 0).t_min == 5);
}

TEST_CASE("sweeps do not depend on the worker count") {
  const auto g = load("theta3.g");
  SweepConfig cfg;
  cfg.n_grid = {64, 128, 256};
  cfg.seeds = 3;
  cfg.starts = StartPolicy::parse("sample:3");
  cfg.workers = 1;
  const auto a = cutoff_sweep(g, cfg);
  cfg.workers = 4;
  const auto b = cutoff_sweep(g, cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].start == b.rows[i].start);
    CHECK(a.rows[i].t_mix == b.rows[i].t_mix);
  }
  CHECK(a.fit.slope == b.fit.slope);
  CHECK(a.predicted_slope == doctest::Approx(6.0 / std::log(2.0)));
  CHECK(a.max_tv_increase <= 1e-12);
  CHECK(a.windows.size() == 3);
  // eps = 0.1, 0.5, 0.9 ride along for the window statistics.
  CHECK(a.cells.front().curves.front().eps.size() == 4);
  CHECK_THROWS_AS(cutoff_sweep(load("c3b.g"), cfg), DegenerateEntropy);
}

TEST_CASE("best-case lower bound arithmetic") {
  const auto g = load("theta3.g");
  SweepConfig cfg;
  cfg.n_grid = {64};
  cfg.seeds = 2;
  const auto res = cutoff_sweep(g, cfg);
  const auto lb = lower_bound_check(res, 0.5, 0, 0.0);
  REQUIRE(lb.cells.size() == 2);
  const double h = res.h_alpha, ln = std::log(64.0);
  const double bound = ln / h + 0.6744897501960817 * 0.5 / std::pow(h, 1.5) * std::sqrt(ln);
  CHECK(lb.cells[0].bound == doctest::Approx(bound));
  CHECK(lower_bound_check(res, 0.5, 0, 3.0).cells[0].bound == doctest::Approx(bound - 3.0));
  const auto loose = lower_bound_check(res, 0.5, 0, 1000.0);
  CHECK(loose.fraction == 1.0);
}

TEST_CASE("spectral gap proxy") {
  // At n = 1 the gap of the symmetrized base chain, computed densely.
  const auto g = load("theta3_skew.g");
  RngStream rng(1);
  const Lift l1 = generate_uniform_lift(g, 1, rng);
  const auto rep = conductance_proxy(l1, 0.5);
  const auto pi = stationary_distribution(*g);
  const Eigen::MatrixXd p = g->transition_matrix(0.5);
  Eigen::MatrixXd a(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = std::sqrt(pi[i]) * p(i, j) / std::sqrt(pi[j]);
  const Eigen::MatrixXd s = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  CHECK(rep.lambda2 == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-9));
  CHECK(rep.conductance_lower == doctest::Approx(rep.gap / 2.0));
  CHECK(rep.conductance_upper == doctest::Approx(std::sqrt(2.0 * rep.gap)));

  // Two disjoint copies: flagged disconnected.
  const auto b = load("bouquet4.g");
  const Lift split(b, 2, {{0, 1}, {0, 1}});
  CHECK(conductance_proxy(split, 0.5).disconnected);
  RngStream r2(3);
  const Lift big = generate_uniform_lift(load("theta3.g"), 128, r2);
  const auto good = conductance_proxy(big, 0.5);
  CHECK_FALSE(good.disconnected);
  CHECK(good.gap > 0.0);
  CHECK(good.sigma2 < 1.0);
}
