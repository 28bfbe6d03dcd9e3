#include "liftcut/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "liftcut/digraph.hpp"
#include "liftcut/errors.hpp"
#include "liftcut/stats.hpp"

namespace liftcut {

namespace {
constexpr double kCertainReturn = 1e-9;
}  // namespace

std::vector<double> first_passage_sweep(const WeightedMultigraph& g, std::span<const double> q) {
  std::vector<double> next(g.num_arcs());
  for (ArcId b = 0; b < g.num_arcs(); ++b) {
    double branch = 0.0;
    for (ArcId c : g.out_arcs(g.tail(b)))
      if (c != b) branch += g.weight(c) * q[inverse(c)];
    next[b] = g.weight(b) + q[b] * branch;
  }
  return next;
}

GreenSolution solve_first_passage(const WeightedMultigraph& g, const SolverOptions& opts,
                                  std::span<const double> start) {
  if (!check_assumptions(g).every_edge_on_cycle)
    throw ValidationError("first-passage system requires every oriented edge on a cycle; "
                          "run it on the core");
  GreenSolution sol;
  sol.q.assign(g.num_arcs(), 0.0);
  if (!start.empty()) {
    if (start.size() != g.num_arcs()) throw std::invalid_argument("start vector has wrong size");
    sol.q.assign(start.begin(), start.end());
  }
  double update = std::numeric_limits<double>::infinity();
  while (sol.iterations < opts.max_iter) {
    std::vector<double> next = first_passage_sweep(g, sol.q);
    update = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = std::min(next[i], 1.0);
      update = std::max(update, std::abs(next[i] - sol.q[i]));
    }
    sol.q = std::move(next);
    ++sol.iterations;
    if (update < opts.tol) break;
  }
  const std::vector<double> check = first_passage_sweep(g, sol.q);
  sol.residual = 0.0;
  for (std::size_t i = 0; i < check.size(); ++i)
    sol.residual = std::max(sol.residual, std::abs(std::min(check[i], 1.0) - sol.q[i]));
  if (!(update < opts.tol))
    throw NonConvergence("first-passage iteration did not converge", sol.residual, sol.iterations);
  return sol;
}

std::vector<double> stationary_of(const Eigen::MatrixXd& p, const std::vector<std::size_t>& states) {
  const auto k = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      m(j, i) = p(static_cast<Eigen::Index>(states[i]), static_cast<Eigen::Index>(states[j])) -
                (i == j ? 1.0 : 0.0);
  m.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(k - 1) = 1.0;
  const Eigen::VectorXd x = m.fullPivLu().solve(rhs);
  std::vector<double> pi(static_cast<std::size_t>(p.rows()), 0.0);
  for (Eigen::Index i = 0; i < k; ++i) pi[states[static_cast<std::size_t>(i)]] = std::max(x(i), 0.0);
  double s = 0.0;
  for (double v : pi) s += v;
  for (double& v : pi) v /= s;
  return pi;
}

Eigen::MatrixXd ray_kernel(const WeightedMultigraph& g, std::span<const double> w_hat) {
  const auto m = static_cast<Eigen::Index>(g.num_arcs());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m, m);
  for (ArcId e = 0; e < g.num_arcs(); ++e) {
    const double denom = 1.0 - w_hat[inverse(e)];
    const auto row = static_cast<Eigen::Index>(e);
    if (w_hat[e] > 0.0 && denom > 1e-12) {
      for (ArcId f : g.out_arcs(g.head(e)))
        if (f != inverse(e)) q(row, static_cast<Eigen::Index>(f)) = w_hat[f] / denom;
      continue;
    }
    double total = 0.0;
    for (ArcId f : g.out_arcs(g.head(e)))
      if (f != inverse(e)) total += g.weight(f);
    if (total <= 0.0) continue;
    for (ArcId f : g.out_arcs(g.head(e)))
      if (f != inverse(e)) q(row, static_cast<Eigen::Index>(f)) = g.weight(f) / total;
  }
  return q;
}

namespace {

/// Fills q_hat, pi_hat and the residual from w_hat.
void complete_ray_law(const WeightedMultigraph& g, RayLaw& law) {
  law.q_hat = ray_kernel(g, law.w_hat);
  const std::size_t m = g.num_arcs();
  Adjacency adj(m);
  for (std::size_t e = 0; e < m; ++e) {
    if (law.w_hat[e] <= 0.0) continue;
    for (std::size_t f = 0; f < m; ++f)
      if (law.w_hat[f] > 0.0 && law.q_hat(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(f)) > 0.0)
        adj[e].push_back(f);
  }
  const SccPartition scc = strongly_connected_components(adj);
  std::vector<bool> leaks(scc.count, false), used(scc.count, false);
  for (std::size_t e = 0; e < m; ++e) {
    if (law.w_hat[e] <= 0.0) continue;
    used[scc.component[e]] = true;
    for (std::size_t f = 0; f < m; ++f) {
      if (law.q_hat(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(f)) <= 0.0) continue;
      if (law.w_hat[f] <= 0.0 || scc.component[f] != scc.component[e]) leaks[scc.component[e]] = true;
    }
  }
  std::optional<std::size_t> closed;
  for (std::size_t c = 0; c < scc.count; ++c) {
    if (!used[c] || leaks[c]) continue;
    if (closed) throw ValidationError("the ray kernel has several closed classes");
    closed = c;
  }
  if (!closed) throw ValidationError("the ray kernel has no closed class");
  std::vector<std::size_t> states;
  law.recurrent_support.assign(m, false);
  for (std::size_t e = 0; e < m; ++e)
    if (law.w_hat[e] > 0.0 && scc.component[e] == *closed) {
      states.push_back(e);
      law.recurrent_support[e] = true;
    }
  law.pi_hat = stationary_of(law.q_hat, states);
  const Eigen::Map<const Eigen::RowVectorXd> pi(law.pi_hat.data(), static_cast<Eigen::Index>(m));
  law.stationarity_residual = (pi * law.q_hat - pi).cwiseAbs().maxCoeff();
}

}  // namespace

RayLaw ray_law(const WeightedMultigraph& g, const GreenSolution& green) {
  const TransienceVerdict verdict = is_cover_transient(g);
  if (!verdict.transient()) throw RecurrentCover("cover walk is not transient: " + verdict.reason);

  RayLaw law;
  law.w_hat.assign(g.num_arcs(), 0.0);
  for (ArcId f = 0; f < g.num_arcs(); ++f) {
    double returning = 0.0;
    for (ArcId c : g.out_arcs(g.tail(f))) returning += g.weight(c) * green.q[inverse(c)];
    const double denom = 1.0 - returning;
    if (denom <= 1e-14)
      throw RecurrentCover("return probability equals 1 at vertex " + g.vertex_name(g.tail(f)));
    // q converges to 1 only up to the solver tolerance; treat that as certain return.
    const double escape = 1.0 - green.q[inverse(f)];
    law.w_hat[f] = escape < kCertainReturn ? 0.0 : g.weight(f) * escape / denom;
  }
  complete_ray_law(g, law);
  return law;
}

RayLaw extend_ray_law(const WeightedMultigraph& g, const CoreDecomposition& cd,
                      const RayLaw& core_law) {
  constexpr std::size_t kFar = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(g.num_vertices(), kFar);
  std::deque<VertexId> queue;
  for (VertexId v : cd.core_to_original_vertex) {
    dist[v] = 0;
    queue.push_back(v);
  }
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop_front();
    for (ArcId a : g.out_arcs(v)) {
      const VertexId w = g.head(a);
      if (dist[w] == kFar) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  RayLaw law;
  law.w_hat.assign(g.num_arcs(), 0.0);
  std::vector<bool> in_core(g.num_arcs(), false);
  for (std::size_t i = 0; i < cd.core_to_original_arc.size(); ++i) {
    law.w_hat[cd.core_to_original_arc[i]] = core_law.w_hat[i];
    in_core[cd.core_to_original_arc[i]] = true;
  }
  for (ArcId a = 0; a < g.num_arcs(); ++a)
    if (!in_core[a] && dist[g.head(a)] < dist[g.tail(a)] && g.positive(a)) law.w_hat[a] = 1.0;
  complete_ray_law(g, law);
  return law;
}

WeightEntropy weight_entropy(const WeightedMultigraph& g, const RayLaw& law) {
  WeightEntropy out;
  for (ArcId e = 0; e < g.num_arcs(); ++e) {
    if (law.pi_hat[e] <= 0.0) continue;
    // The ray enters e with conditional probability w_hat(e) / (1 - w_hat(e^-1)).
    out.h_w += law.pi_hat[e] * (std::log1p(-law.w_hat[inverse(e)]) - std::log(law.w_hat[e]));
  }
  if (out.h_w < 1e-14) {
    out.h_w = 0.0;
    out.degenerate = true;
  }
  return out;
}

double speed(const WeightedMultigraph& g, const GreenSolution& green, const RayLaw& law) {
  double inv_speed = 0.0;
  for (ArcId e = 0; e < g.num_arcs(); ++e) {
    if (law.pi_hat[e] <= 0.0) continue;
    const ArcId back = inverse(e);
    if (g.weight(back) <= 0.0) continue;
    const double q = green.q[back];
    if (q >= 1.0 - 1e-12)
      throw RecurrentCover("speed undefined: return probability 1 across " + g.arc_name(back));
    inv_speed += law.pi_hat[e] * q / (g.weight(back) * (1.0 - q));
  }
  return inv_speed > 0.0 ? 1.0 / inv_speed : 1.0;
}

EntropyReport entropy(const WeightedMultigraph& g, double alpha, const SolverOptions& opts) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in [0,1)");
  const TransienceVerdict verdict = is_cover_transient(g);
  if (!verdict.transient()) throw RecurrentCover("cover walk is not transient: " + verdict.reason);

  EntropyReport r{.alpha = alpha, .sigma_mc = {}, .sigma_mc_se = {}, .core = core(g), .green = {}, .ray = {}};
  const WeightedMultigraph& c = r.core.core;
  r.green = solve_first_passage(c, opts);
  r.ray = ray_law(c, r.green);
  const WeightEntropy hw = weight_entropy(c, r.ray);
  r.h_w = hw.h_w;
  r.s0 = speed(c, r.green, r.ray);
  r.a_frac = r.core.core_step_fraction;
  r.degenerate = hw.degenerate || !check_assumptions(c).two_cycles;
  if (r.degenerate) r.h_w = 0.0;
  r.s_alpha = (1.0 - alpha) * r.s0 * r.a_frac;
  r.h_alpha = r.s_alpha * r.h_w;
  r.h_alpha_inverse_scaling = 0.5 * r.s0 * r.h_w * r.a_frac / (2.0 * (1.0 - alpha));
  return r;
}

MixingPrediction predict_mixing_time(const EntropyReport& report, double n, double eps) {
  if (report.degenerate)
    throw DegenerateEntropy("zero cutoff entropy: no mixing-time prediction (two-cycles property fails)");
  return predict_mixing_time(report.h_alpha, report.sigma_mc, n, eps);
}

MixingPrediction predict_mixing_time(double h_alpha, std::optional<double> sigma, double n, double eps) {
  if (!(h_alpha > 0.0))
    throw DegenerateEntropy("zero cutoff entropy: no mixing-time prediction (two-cycles property fails)");
  if (!(n >= 2.0)) throw std::invalid_argument("n must be at least 2");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  MixingPrediction p;
  const double log_n = std::log(n);
  p.t_center = log_n / h_alpha;
  if (sigma) {
    p.window_scale = *sigma / std::pow(h_alpha, 1.5);
    p.t_lower = p.t_center + stats::normal_upper_quantile(eps) * *p.window_scale * std::sqrt(log_n);
  }
  return p;
}

ChainCltParams chain_clt_params(const Eigen::MatrixXd& p, std::span<const double> pi,
                                std::span<const double> f) {
  const auto n = p.rows();
  if (p.cols() != n || static_cast<Eigen::Index>(pi.size()) != n ||
      static_cast<Eigen::Index>(f.size()) != n)
    throw std::invalid_argument("chain_clt_params: dimension mismatch");
  Adjacency adj(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (p(i, j) > 0.0) adj[static_cast<std::size_t>(i)].push_back(static_cast<std::size_t>(j));
  if (!is_strongly_connected(adj)) throw ReducibleChain("chain_clt_params: chain is reducible");

  ChainCltParams out;
  for (Eigen::Index i = 0; i < n; ++i) out.mean += f[i] * pi[i];
  Eigen::VectorXd centered(n), piv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    centered(i) = f[i] - out.mean;
    piv(i) = pi[i];
    out.v_iid += pi[i] * centered(i) * centered(i);
  }
  const Eigen::MatrixXd fundamental =
      Eigen::MatrixXd::Identity(n, n) - p + Eigen::VectorXd::Ones(n) * piv.transpose();
  const Eigen::VectorXd g = fundamental.fullPivLu().solve(centered);
  for (Eigen::Index i = 0; i < n; ++i)
    out.v_asymptotic += pi[i] * (2.0 * centered(i) * g(i) - centered(i) * centered(i));
  out.v_asymptotic = std::max(out.v_asymptotic, 0.0);
  return out;
}

}  // namespace liftcut
