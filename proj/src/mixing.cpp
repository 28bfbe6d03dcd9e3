#include "liftcut/mixing.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "liftcut/analyzer.hpp"
#include "liftcut/errors.hpp"
#include "liftcut/parallel.hpp"

namespace liftcut {

SparseKernel::SparseKernel(std::size_t size,
                           const std::vector<std::vector<std::pair<std::size_t, double>>>& rows)
    : size_(size) {
  if (rows.size() != size) throw std::invalid_argument("SparseKernel: row count mismatch");
  out_offsets_.assign(size + 1, 0);
  in_offsets_.assign(size + 1, 0);
  for (std::size_t x = 0; x < size; ++x) {
    out_offsets_[x + 1] = out_offsets_[x] + rows[x].size();
    for (const auto& [y, p] : rows[x]) {
      if (y >= size) throw std::invalid_argument("SparseKernel: target out of range");
      ++in_offsets_[y + 1];
    }
  }
  for (std::size_t y = 0; y < size; ++y) in_offsets_[y + 1] += in_offsets_[y];
  const std::size_t nnz = out_offsets_[size];
  out_targets_.resize(nnz);
  out_probs_.resize(nnz);
  in_sources_.resize(nnz);
  in_probs_.resize(nnz);
  std::vector<std::size_t> fill(in_offsets_.begin(), in_offsets_.end() - 1);
  // Sources within each column end up in increasing order, which fixes the
  // summation order of push().
  for (std::size_t x = 0; x < size; ++x) {
    std::size_t k = out_offsets_[x];
    for (const auto& [y, p] : rows[x]) {
      out_targets_[k] = static_cast<std::uint32_t>(y);
      out_probs_[k++] = p;
      in_sources_[fill[y]] = static_cast<std::uint32_t>(x);
      in_probs_[fill[y]++] = p;
    }
  }
}

SparseKernel SparseKernel::from_lift(const Lift& lift, double alpha) {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(lift.num_vertices());
  for (LiftVertex x = 0; x < lift.num_vertices(); ++x) {
    for (const auto& [y, p] : transition_row(lift, x, alpha)) rows[x].emplace_back(y, p);
  }
  return SparseKernel(lift.num_vertices(), rows);
}

void SparseKernel::push(std::span<const double> mu, std::span<double> out) const {
  for (std::size_t y = 0; y < size_; ++y) {
    double s = 0.0;
    for (std::size_t k = in_offsets_[y]; k < in_offsets_[y + 1]; ++k) s += mu[in_sources_[k]] * in_probs_[k];
    out[y] = s;
  }
}

void SparseKernel::pull(std::span<const double> f, std::span<double> out) const {
  for (std::size_t x = 0; x < size_; ++x) {
    double s = 0.0;
    for (std::size_t k = out_offsets_[x]; k < out_offsets_[x + 1]; ++k) s += out_probs_[k] * f[out_targets_[k]];
    out[x] = s;
  }
}

Propagation propagate(const SparseKernel& kernel, std::vector<double> mu, std::size_t t_steps) {
  if (mu.size() != kernel.size()) throw std::invalid_argument("propagate: size mismatch");
  Propagation out;
  std::vector<double> next(mu.size());
  for (std::size_t t = 0; t < t_steps; ++t) {
    kernel.push(mu, next);
    mu.swap(next);
    const double mass = std::accumulate(mu.begin(), mu.end(), 0.0);
    out.max_mass_drift = std::max(out.max_mass_drift, std::abs(mass - 1.0));
  }
  out.mu = std::move(mu);
  return out;
}

Propagation propagate(const Lift& lift, std::vector<double> mu, double alpha, std::size_t t_steps) {
  return propagate(SparseKernel::from_lift(lift, alpha), std::move(mu), t_steps);
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

namespace {

std::vector<std::optional<std::size_t>> crossings(const std::vector<double>& tv, std::span<const double> eps) {
  std::vector<std::optional<std::size_t>> out(eps.size());
  for (std::size_t k = 0; k < eps.size(); ++k)
    for (std::size_t t = 0; t < tv.size(); ++t)
      if (tv[t] <= eps[k]) {
        out[k] = t;
        break;
      }
  return out;
}

}  // namespace

MixingCurve mixing_curve(const Lift& lift, const SparseKernel& kernel, std::span<const double> pi_n,
                         LiftVertex start, double alpha, std::span<const double> eps,
                         std::size_t t_cap) {
  if (start >= lift.num_vertices()) throw std::out_of_range("mixing_curve: start out of range");
  MixingCurve c;
  c.start = start;
  c.eps.assign(eps.begin(), eps.end());
  const bool averaged = alpha == 0.0;
  c.parity_warning = averaged && check_assumptions(lift.base()).period > 1;
  const double target = eps.empty() ? 0.0 : *std::min_element(eps.begin(), eps.end());

  std::vector<double> mu(lift.num_vertices(), 0.0), next(mu.size()), avg(mu.size());
  mu[start] = 1.0;
  c.tv.push_back(total_variation(mu, pi_n));
  bool done_raw = c.tv.back() <= target, done_avg = !averaged;
  for (std::size_t t = 0; t < t_cap && !(done_raw && done_avg); ++t) {
    kernel.push(mu, next);
    const double mass = std::accumulate(next.begin(), next.end(), 0.0);
    c.max_mass_drift = std::max(c.max_mass_drift, std::abs(mass - 1.0));
    if (averaged) {
      for (std::size_t i = 0; i < mu.size(); ++i) avg[i] = 0.5 * (mu[i] + next[i]);
      c.tv_avg.push_back(total_variation(avg, pi_n));
      done_avg = c.tv_avg.back() <= target;
    }
    mu.swap(next);
    c.tv.push_back(total_variation(mu, pi_n));
    c.max_tv_increase = std::max(c.max_tv_increase, c.tv.back() - c.tv[c.tv.size() - 2]);
    done_raw = done_raw || c.tv.back() <= target;
  }
  c.cap_exceeded = !(done_raw && done_avg);
  c.t_eps = crossings(c.tv, eps);
  if (averaged) c.t_eps_avg = crossings(c.tv_avg, eps);
  return c;
}

MixingCurve mixing_curve(const Lift& lift, LiftVertex start, double alpha, std::span<const double> eps,
                         std::size_t t_cap) {
  const SparseKernel kernel = SparseKernel::from_lift(lift, alpha);
  const auto pi_n = lift_stationary(stationary_distribution(lift.base()), lift.n());
  return mixing_curve(lift, kernel, pi_n, start, alpha, eps, t_cap);
}

StartPolicy StartPolicy::parse(std::string_view text) {
  if (text == "all") return {true, 0};
  constexpr std::string_view prefix = "sample:";
  if (text.starts_with(prefix)) {
    std::size_t k = 0;
    const auto body = text.substr(prefix.size());
    const auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), k);
    if (ec == std::errc{} && p == body.data() + body.size() && k > 0) return {false, k};
  }
  throw ValidationError("start policy must be 'all' or 'sample:k' with k >= 1, got '" + std::string(text) + "'");
}

std::string StartPolicy::to_string() const { return all ? "all" : "sample:" + std::to_string(k); }

std::vector<LiftVertex> choose_starts(const Lift& lift, const StartPolicy& policy, RngStream& rng) {
  const std::size_t total = lift.num_vertices();
  std::vector<LiftVertex> out;
  if (policy.all) {
    if (total > kAllStartsCap)
      throw ValidationError("start policy 'all' exceeds the cap of " + std::to_string(kAllStartsCap) + " states");
    out.resize(total);
    std::iota(out.begin(), out.end(), LiftVertex{0});
    return out;
  }
  const std::size_t k = std::min(policy.k, total);
  // Partial Fisher-Yates over a virtual identity array.
  std::vector<std::pair<std::size_t, std::size_t>> swapped;
  auto at = [&](std::size_t i) {
    for (auto it = swapped.rbegin(); it != swapped.rend(); ++it)
      if (it->first == i) return it->second;
    return i;
  };
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(total - i);
    const std::size_t vi = at(i), vj = at(j);
    swapped.emplace_back(i, vj);
    swapped.emplace_back(j, vi);
    out.push_back(vj);
  }
  return out;
}

ExtremeMixing extremes(std::span<const MixingCurve> curves, std::size_t eps_index) {
  ExtremeMixing out;
  bool any_unreached = false;
  for (const auto& c : curves) {
    const bool use_avg = c.parity_warning && !c.t_eps_avg.empty();
    const auto t = use_avg ? c.t_eps_avg[eps_index] : c.t_eps[eps_index];
    if (!t) {
      any_unreached = true;
      continue;
    }
    if (!out.t_max || *t > *out.t_max) {
      out.t_max = t;
      out.argmax = c.start;
    }
    if (!out.t_min || *t < *out.t_min) {
      out.t_min = t;
      out.argmin = c.start;
    }
  }
  // An unreached start means the worst case is beyond the cap.
  if (any_unreached) out.t_max.reset();
  return out;
}

ExtremeMixing worst_and_best_case(const Lift& lift, double alpha, double eps, const StartPolicy& policy,
                                  RngStream& rng, std::size_t t_cap) {
  const auto starts = choose_starts(lift, policy, rng);
  const SparseKernel kernel = SparseKernel::from_lift(lift, alpha);
  const auto pi_n = lift_stationary(stationary_distribution(lift.base()), lift.n());
  const std::vector<double> e{eps};
  std::vector<MixingCurve> curves;
  for (LiftVertex x : starts) curves.push_back(mixing_curve(lift, kernel, pi_n, x, alpha, e, t_cap));
  ExtremeMixing out = extremes(curves, 0);
  out.sampled = !policy.all;
  return out;
}

namespace {

std::size_t index_of(const std::vector<double>& v, double x) {
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
}

}  // namespace

SweepResult cutoff_sweep(std::shared_ptr<const WeightedMultigraph> g, const SweepConfig& cfg) {
  if (cfg.n_grid.empty() || cfg.seeds == 0 || cfg.eps.empty())
    throw ValidationError("sweep needs a nonempty n grid, eps list and seed count");
  const EntropyReport report = entropy(*g, cfg.alpha);
  if (report.degenerate || !(report.h_alpha > 0.0))
    throw DegenerateEntropy("cutoff sweep refused: zero cutoff entropy, the two-cycles hypothesis fails");
  SweepResult res;
  res.h_alpha = report.h_alpha;
  res.predicted_slope = 1.0 / report.h_alpha;
  res.fit_eps = cfg.eps.front();

  std::vector<double> eps_all = cfg.eps;
  for (double w : {0.1, 0.5, 0.9})
    if (std::find(eps_all.begin(), eps_all.end(), w) == eps_all.end()) eps_all.push_back(w);

  std::vector<std::size_t> grid = cfg.n_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const StationaryDistribution pi = stationary_distribution(*g);

  res.cells.resize(grid.size() * cfg.seeds);
  parallel_for(res.cells.size(), cfg.workers, [&](std::size_t idx) {
    SweepCell& cell = res.cells[idx];
    cell.n = grid[idx / cfg.seeds];
    cell.seed = idx % cfg.seeds;
    RngStream lift_rng = RngStream::derive(cfg.master_seed, "lift", cell.n, cell.seed);
    const Lift lift = generate_uniform_lift(g, cell.n, lift_rng, cfg.master_seed);
    RngStream start_rng = RngStream::derive(cfg.master_seed, "starts", cell.n, cell.seed);
    cell.starts = choose_starts(lift, cfg.starts, start_rng);
    const SparseKernel kernel = SparseKernel::from_lift(lift, cfg.alpha);
    const auto pi_n = lift_stationary(pi, cell.n);
    const double log_states = std::log(static_cast<double>(lift.num_vertices()));
    const std::size_t t_cap =
        cfg.t_cap > 0 ? cfg.t_cap : std::max<std::size_t>(200, static_cast<std::size_t>(4.0 * log_states / report.h_alpha));
    for (LiftVertex x : cell.starts) {
      cell.curves.push_back(mixing_curve(lift, kernel, pi_n, x, cfg.alpha, eps_all, t_cap));
      cell.max_mass_drift = std::max(cell.max_mass_drift, cell.curves.back().max_mass_drift);
      cell.max_tv_increase = std::max(cell.max_tv_increase, cell.curves.back().max_tv_increase);
    }
  });

  // Rows, in (n, seed, eps, start) order.
  for (const SweepCell& cell : res.cells) {
    res.max_mass_drift = std::max(res.max_mass_drift, cell.max_mass_drift);
    res.max_tv_increase = std::max(res.max_tv_increase, cell.max_tv_increase);
    for (std::size_t k = 0; k < cfg.eps.size(); ++k) {
      for (const auto& c : cell.curves) {
        const bool use_avg = c.parity_warning && !c.t_eps_avg.empty();
        SweepRow row{cell.n, cell.seed, "", cfg.eps[k], use_avg ? c.t_eps_avg[k] : c.t_eps[k]};
        row.start = g->vertex_name(c.start / cell.n) + ":" + std::to_string(c.start % cell.n + 1);
        res.rows.push_back(std::move(row));
      }
      const ExtremeMixing ex = extremes(cell.curves, k);
      res.rows.push_back({cell.n, cell.seed, "max", cfg.eps[k], ex.t_max});
      res.rows.push_back({cell.n, cell.seed, "min", cfg.eps[k], ex.t_min});
    }
  }

  // Slope of the mean sampled worst case against ln n.
  std::vector<double> xs, ys;
  bool all_reached = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sum = 0.0;
    bool ok = true;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      const auto ex = extremes(res.cells[i * cfg.seeds + s].curves, 0);
      if (!ex.t_max) {
        ok = false;
        break;
      }
      sum += static_cast<double>(*ex.t_max);
    }
    if (!ok) {
      all_reached = false;
      continue;
    }
    xs.push_back(std::log(static_cast<double>(grid[i])));
    ys.push_back(sum / static_cast<double>(cfg.seeds));
  }
  if (xs.size() >= 2) res.fit = stats::least_squares(xs, ys);
  res.slope_within_tolerance = all_reached && xs.size() >= 2 &&
                               std::abs(res.fit.slope - res.predicted_slope) <= kSlopeTolerance * res.predicted_slope;

  // Window ratios per (n, seed).
  const std::size_t i10 = index_of(eps_all, 0.1), i50 = index_of(eps_all, 0.5), i90 = index_of(eps_all, 0.9);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    WindowStats w;
    w.n = grid[i];
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      const auto& curves = res.cells[i * cfg.seeds + s].curves;
      const auto t10 = extremes(curves, i10).t_max, t50 = extremes(curves, i50).t_max,
                 t90 = extremes(curves, i90).t_max;
      if (t10 && t50 && t90 && *t50 > 0) {
        const double r = (static_cast<double>(*t10) - static_cast<double>(*t90)) / static_cast<double>(*t50);
        w.ratio_by_seed.push_back(r);
        sum += r;
        ++count;
      } else {
        w.ratio_by_seed.push_back(std::nullopt);
      }
    }
    w.mean_ratio = count > 0 ? sum / static_cast<double>(count) : 0.0;
    res.windows.push_back(std::move(w));
  }
  for (std::size_t s = 0; s < cfg.seeds; ++s) {
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < grid.size() && monotone; ++i) {
      const auto a = res.windows[i].ratio_by_seed[s], b = res.windows[i + 1].ratio_by_seed[s];
      monotone = a && b && *b <= *a + 1e-12;
    }
    if (monotone) ++res.seeds_with_monotone_window;
  }
  res.cutoff_verdict =
      res.slope_within_tolerance &&
      static_cast<double>(res.seeds_with_monotone_window) >= kWindowSeedFraction * static_cast<double>(cfg.seeds);
  return res;
}

LowerBoundReport lower_bound_check(const SweepResult& res, double sigma, std::size_t eps_index, double slack) {
  LowerBoundReport out;
  std::size_t holding = 0;
  for (const SweepCell& cell : res.cells) {
    const double eps = cell.curves.at(0).eps.at(eps_index);
    const MixingPrediction p = predict_mixing_time(res.h_alpha, sigma, static_cast<double>(cell.n), eps);
    LowerBoundCell c{cell.n, cell.seed, extremes(cell.curves, eps_index).t_min, *p.t_lower - slack, false};
    c.holds = c.t_min && static_cast<double>(*c.t_min) >= c.bound;
    if (c.holds) ++holding;
    out.cells.push_back(c);
  }
  out.fraction = out.cells.empty() ? 0.0 : static_cast<double>(holding) / static_cast<double>(out.cells.size());
  return out;
}

namespace {

struct LanczosResult {
  double top = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
};

/// Largest eigenvalue of a symmetric operator on the orthogonal complement
/// of unit vector `pin`.
template <class Op>
LanczosResult lanczos_top(Op&& op, const Eigen::VectorXd& pin, double tol, std::size_t max_iter) {
  const Eigen::Index n = pin.size();
  LanczosResult out;
  if (n <= 1) return out;
  const std::size_t m = std::min<std::size_t>(max_iter, static_cast<std::size_t>(n - 1));
  Eigen::MatrixXd basis(n, static_cast<Eigen::Index>(m));
  Eigen::VectorXd v(n);
  // Fixed, non-symmetric start vector.
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std::sin(1.0 + 0.7 * static_cast<double>(i)) + 0.1;
  v -= pin.dot(v) * pin;
  v.normalize();
  std::vector<double> diag, off;
  Eigen::VectorXd w(n);
  for (std::size_t j = 0; j < m; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    basis.col(jj) = v;
    op(v, w);
    diag.push_back(v.dot(w));
    for (int pass = 0; pass < 2; ++pass) {
      w -= pin.dot(w) * pin;
      w -= basis.leftCols(jj + 1) * (basis.leftCols(jj + 1).transpose() * w);
    }
    const double beta = w.norm();
    out.iterations = j + 1;

    const auto k = static_cast<Eigen::Index>(diag.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      t(i, i) = diag[static_cast<std::size_t>(i)];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = off[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    out.top = es.eigenvalues()(k - 1);
    out.residual = std::abs(beta * es.eigenvectors()(k - 1, k - 1));
    if (out.residual <= tol || beta <= 1e-14) return out;
    off.push_back(beta);
    v = w / beta;
  }
  if (out.iterations == static_cast<std::size_t>(n - 1)) return out;  // full Krylov space
  throw NonConvergence("Lanczos did not converge", out.residual, static_cast<long>(out.iterations));
}

}  // namespace

SpectralReport conductance_proxy(const SparseKernel& kernel, std::span<const double> pi, double tol,
                                 std::size_t max_iter) {
  const std::size_t n = kernel.size();
  if (pi.size() != n) throw std::invalid_argument("conductance_proxy: size mismatch");
  Eigen::VectorXd s(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pi[i] > 0.0)) throw ValidationError("conductance_proxy: stationary law must be positive");
    s(static_cast<Eigen::Index>(i)) = std::sqrt(pi[i]);
  }
  const Eigen::VectorXd pin = s.normalized();
  std::vector<double> buf_in(n), buf_out(n);
  // A = D^{1/2} P D^{-1/2}.
  auto apply_a = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    for (std::size_t i = 0; i < n; ++i) buf_in[i] = v(static_cast<Eigen::Index>(i)) / s(static_cast<Eigen::Index>(i));
    kernel.pull(buf_in, buf_out);
    for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = s(static_cast<Eigen::Index>(i)) * buf_out[i];
  };
  auto apply_at = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    for (std::size_t i = 0; i < n; ++i) buf_in[i] = v(static_cast<Eigen::Index>(i)) * s(static_cast<Eigen::Index>(i));
    kernel.push(buf_in, buf_out);
    for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = buf_out[i] / s(static_cast<Eigen::Index>(i));
  };
  Eigen::VectorXd tmp(static_cast<Eigen::Index>(n)), tmp2(static_cast<Eigen::Index>(n));
  auto sym = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    apply_a(v, tmp);
    apply_at(v, tmp2);
    out = 0.5 * (tmp + tmp2);
  };
  auto gram = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    apply_a(v, tmp);
    apply_at(tmp, out);
  };
  SpectralReport r;
  const LanczosResult top = lanczos_top(sym, pin, tol, max_iter);
  r.lambda2 = top.top;
  r.gap = 1.0 - top.top;
  r.residual = top.residual;
  r.iterations = top.iterations;
  const LanczosResult sv = lanczos_top(gram, pin, tol, max_iter);
  r.sigma2 = std::sqrt(std::max(sv.top, 0.0));
  r.residual = std::max(r.residual, sv.residual);
  r.conductance_lower = std::max(r.gap, 0.0) / 2.0;
  r.conductance_upper = std::sqrt(2.0 * std::max(r.gap, 0.0));
  r.disconnected = r.gap < 1e-6;
  return r;
}

SpectralReport conductance_proxy(const Lift& lift, double alpha) {
  const SparseKernel kernel = SparseKernel::from_lift(lift, alpha);
  const auto pi_n = lift_stationary(stationary_distribution(lift.base()), lift.n());
  return conductance_proxy(kernel, pi_n);
}

double projection_identity_check(const Lift& lift, LiftVertex x, double alpha, std::size_t t_max) {
  if (x >= lift.num_vertices()) throw std::out_of_range("projection_identity_check: start out of range");
  const SparseKernel kernel = SparseKernel::from_lift(lift, alpha);
  const Eigen::MatrixXd p = lift.base().transition_matrix(alpha);
  const std::size_t nb = lift.base().num_vertices();
  Eigen::RowVectorXd base = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(nb));
  base(static_cast<Eigen::Index>(lift.type(x))) = 1.0;
  std::vector<double> mu(lift.num_vertices(), 0.0), next(mu.size());
  mu[x] = 1.0;
  double worst = 0.0;
  for (std::size_t t = 0;; ++t) {
    for (std::size_t v = 0; v < nb; ++v) {
      double fiber_sum = 0.0;
      for (std::size_t i = 0; i < lift.n(); ++i) fiber_sum += mu[lift.vertex(v, i)];
      worst = std::max(worst, std::abs(fiber_sum - base(static_cast<Eigen::Index>(v))));
    }
    if (t == t_max) break;
    kernel.push(mu, next);
    mu.swap(next);
    base = base * p;
  }
  return worst;
}

}  // namespace liftcut
