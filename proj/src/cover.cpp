#include "liftcut/cover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "liftcut/errors.hpp"
#include "liftcut/parallel.hpp"

namespace liftcut {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Increment of -log W when the path is extended by `a` after `prev`.
double log_weight_term(const RayLaw& law, const ArcId* prev, ArcId a) {
  if (law.w_hat[a] <= 0.0) return kInf;
  double t = -std::log(law.w_hat[a]);
  if (prev != nullptr) t += std::log1p(-law.w_hat[inverse(*prev)]);
  return t;
}

/// Per-vertex cumulative table over positive-weight arcs.
struct StepTable {
  std::vector<std::vector<std::pair<ArcId, double>>> rows;

  explicit StepTable(const WeightedMultigraph& g) : rows(g.num_vertices()) {
    for (VertexId v = 0; v < g.num_vertices(); ++v) {
      double c = 0.0;
      for (ArcId a : g.out_arcs(v)) {
        if (!g.positive(a)) continue;
        c += g.weight(a);
        rows[v].emplace_back(a, c);
      }
    }
  }

  /// r uniform in [0, 1).
  ArcId pick(VertexId v, double r) const {
    const auto& row = rows[v];
    const double target = r * row.back().second;
    for (const auto& [arc, cum] : row)
      if (target < cum) return arc;
    return row.back().first;
  }
};

class CoverWalker {
 public:
  CoverWalker(const WeightedMultigraph& g, const StepTable& table, VertexId root, double alpha)
      : g_(g), table_(table), root_(root), alpha_(alpha) {}

  CoverStep step(RngStream& rng) {
    const double u = rng.uniform();
    if (u < alpha_) return {MoveKind::hold, 0};
    const ArcId a = table_.pick(label(), (u - alpha_) / (1.0 - alpha_));
    if (!path_.empty() && a == inverse(path_.back())) {
      path_.pop_back();
      return {MoveKind::down, a};
    }
    path_.push_back(a);
    return {MoveKind::up, a};
  }

  VertexId label() const { return path_.empty() ? root_ : g_.head(path_.back()); }
  const std::vector<ArcId>& path() const { return path_; }

 private:
  const WeightedMultigraph& g_;
  const StepTable& table_;
  VertexId root_;
  double alpha_;
  std::vector<ArcId> path_;
};

}  // namespace

bool CoverVertex::valid(const WeightedMultigraph& g) const {
  if (root >= g.num_vertices()) return false;
  VertexId at = root;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const ArcId a = path[i];
    if (a >= g.num_arcs() || !g.positive(a) || g.tail(a) != at) return false;
    if (i > 0 && a == inverse(path[i - 1])) return false;
    at = g.head(a);
  }
  return true;
}

std::vector<CoverMove> cover_moves(const WeightedMultigraph& g, const CoverVertex& v, double alpha) {
  std::vector<CoverMove> moves;
  if (alpha > 0.0) moves.push_back({MoveKind::hold, 0, alpha});
  for (ArcId a : g.out_arcs(v.label(g))) {
    if (!g.positive(a)) continue;
    const bool down = !v.path.empty() && a == inverse(v.path.back());
    moves.push_back({down ? MoveKind::down : MoveKind::up, a, (1.0 - alpha) * g.weight(a)});
  }
  return moves;
}

std::uint32_t CoverTrajectory::max_height() const {
  return heights.empty() ? 0 : *std::max_element(heights.begin(), heights.end());
}

CoverTrajectory simulate_walk(const WeightedMultigraph& g, VertexId root, std::size_t steps,
                              double alpha, RngStream& rng, const RayLaw* law) {
  if (root >= g.num_vertices()) throw std::invalid_argument("simulate_walk: root out of range");
  const StepTable table(g);
  CoverWalker walker(g, table, root, alpha);
  CoverTrajectory traj;
  traj.root = root;
  traj.steps.reserve(steps);
  traj.heights.reserve(steps + 1);
  traj.labels.reserve(steps + 1);
  traj.heights.push_back(0);
  traj.labels.push_back(root);
  std::vector<double> cum{0.0};
  if (law != nullptr) {
    traj.log_weights.reserve(steps + 1);
    traj.log_weights.push_back(0.0);
  }
  for (std::size_t t = 0; t < steps; ++t) {
    const CoverStep s = walker.step(rng);
    traj.steps.push_back(s);
    const auto& path = walker.path();
    if (law != nullptr) {
      if (s.kind == MoveKind::up) {
        const ArcId* prev = path.size() >= 2 ? &path[path.size() - 2] : nullptr;
        cum.push_back(cum.back() + log_weight_term(*law, prev, s.arc));
      } else if (s.kind == MoveKind::down) {
        cum.pop_back();
      }
      traj.log_weights.push_back(cum.back());
    }
    traj.heights.push_back(static_cast<std::uint32_t>(path.size()));
    traj.labels.push_back(walker.label());
  }
  traj.final_path = walker.path();
  return traj;
}

RayPrefix extract_ray(const CoverTrajectory& traj, std::size_t margin) {
  const std::size_t top = traj.max_height();
  if (top <= margin)
    throw ValidationError("trajectory too short: max height " + std::to_string(top) +
                          " does not exceed margin " + std::to_string(margin));
  const std::size_t final_height = traj.final_path.size();
  RayPrefix ray;
  ray.levels = final_height > margin ? final_height - margin : 0;
  ray.labels.assign(traj.final_path.begin(),
                    traj.final_path.begin() + static_cast<std::ptrdiff_t>(ray.levels));
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  ray.last_exit.assign(ray.levels + 1, kUnset);
  std::size_t missing = ray.levels + 1;
  for (std::size_t t = traj.heights.size(); t-- > 0 && missing > 0;) {
    const std::size_t h = traj.heights[t];
    if (h <= ray.levels && ray.last_exit[h] == kUnset) {
      ray.last_exit[h] = t;
      --missing;
    }
  }
  return ray;
}

double log_entropic_weight(const WeightedMultigraph& g, std::span<const ArcId> path, const RayLaw& law) {
  (void)g;
  double s = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i)
    s = s + log_weight_term(law, i > 0 ? &path[i - 1] : nullptr, path[i]);
  return s;
}

double entropic_weight(const WeightedMultigraph& g, std::span<const ArcId> path, const RayLaw& law) {
  return std::exp(-log_entropic_weight(g, path, law));
}

double level_weight_check(const WeightedMultigraph& g, const RayLaw& law, std::size_t radius,
                          std::size_t cap) {
  double worst = 0.0;
  for (VertexId root = 0; root < g.num_vertices(); ++root) {
    double total = 0.0;
    std::size_t count = 0;
    std::vector<ArcId> path;
    // Depth-first over non-backtracking positive paths; each frame holds the
    // index of the next arc to try at that depth.
    std::vector<std::size_t> next{0};
    std::vector<double> cum{0.0};
    while (!next.empty()) {
      if (path.size() == radius) {
        total += std::exp(-cum.back());
        if (++count > cap)
          throw ValidationError("level " + std::to_string(radius) + " exceeds enumeration cap");
        next.pop_back();
        cum.pop_back();
        if (!path.empty()) path.pop_back();
        continue;
      }
      const VertexId at = path.empty() ? root : g.head(path.back());
      const auto arcs = g.out_arcs(at);
      std::size_t& i = next.back();
      while (i < arcs.size() &&
             (!g.positive(arcs[i]) || (!path.empty() && arcs[i] == inverse(path.back()))))
        ++i;
      if (i == arcs.size()) {
        next.pop_back();
        cum.pop_back();
        if (!path.empty()) path.pop_back();
        continue;
      }
      const ArcId a = arcs[i++];
      cum.push_back(cum.back() + log_weight_term(law, path.empty() ? nullptr : &path.back(), a));
      path.push_back(a);
      next.push_back(0);
    }
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

void ExcursionStats::append(const ExcursionStats& other) {
  tau.insert(tau.end(), other.tau.begin(), other.tau.end());
  dw.insert(dw.end(), other.dw.begin(), other.dw.end());
  dh.insert(dh.end(), other.dh.begin(), other.dh.end());
  degenerate = std::all_of(dw.begin(), dw.end(), [](double x) { return x == 0.0; });
}

ExcursionStats excursion_decomposition(const CoverTrajectory& traj, const RayPrefix& ray,
                                       ArcId e_star, std::size_t min_excursions) {
  if (traj.log_weights.size() != traj.heights.size())
    throw std::invalid_argument("excursion_decomposition: trajectory has no log-weights");
  std::vector<std::size_t> exit_levels;
  for (std::size_t k = 0; k < ray.levels; ++k)
    if (ray.labels[k] == e_star) exit_levels.push_back(k);
  ExcursionStats out;
  for (std::size_t j = 0; j + 1 < exit_levels.size(); ++j) {
    const std::size_t a = ray.last_exit[exit_levels[j]], b = ray.last_exit[exit_levels[j + 1]];
    out.tau.push_back(static_cast<double>(b - a));
    out.dw.push_back(traj.log_weights[b] - traj.log_weights[a]);
    out.dh.push_back(static_cast<double>(exit_levels[j + 1] - exit_levels[j]));
  }
  out.degenerate = std::all_of(out.dw.begin(), out.dw.end(), [](double x) { return x == 0.0; });
  if (out.size() < min_excursions)
    throw ValidationError("too few excursions: " + std::to_string(out.size()) + " < " +
                          std::to_string(min_excursions));
  return out;
}

CltEstimate estimate_clt_params(const ExcursionStats& s) {
  const std::size_t n = s.size();
  if (n < 30) throw ValidationError("too few excursions: " + std::to_string(n) + " < 30");
  CltEstimate out;
  out.excursions = n;
  const double mean_tau = stats::mean(s.tau);
  const double mean_dw = stats::mean(s.dw);
  const double mean_dh = stats::mean(s.dh);
  out.h_est = mean_dw / mean_tau;
  out.speed_est = mean_dh / mean_tau;

  std::vector<double> y(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = s.dw[i] - out.h_est * s.tau[i];
    z[i] = s.dh[i] - out.speed_est * s.tau[i];
  }
  const double nn = static_cast<double>(n);
  out.se_h = std::sqrt(stats::variance(y) / nn) / mean_tau;
  out.se_speed = std::sqrt(stats::variance(z) / nn) / mean_tau;

  // Var(dW - h tau) = E[dW]^2 Var(Z).
  const double var_y = stats::variance(y);
  if (var_y <= 1e-24 || mean_dw == 0.0) {
    out.sigma_est = 0.0;
    out.se_sigma = 0.0;
    out.note = s.degenerate ? "deterministic ray: zero log-weight increments"
                            : "zero fluctuation of the weight (cylindrical symmetry)";
    return out;
  }
  out.sigma_est = std::sqrt(var_y / mean_tau);
  double m4 = 0.0;
  const double my = stats::mean(y);
  for (double v : y) m4 += std::pow(v - my, 4);
  m4 /= nn;
  const double se_var = std::sqrt(std::max(m4 - var_y * var_y, 0.0) / nn);
  out.se_sigma = se_var / mean_tau / (2.0 * out.sigma_est);
  return out;
}

std::vector<double> LocalizationProfile::probabilities() const {
  std::vector<double> p(exceed.size(), 0.0);
  if (samples == 0) return p;
  for (std::size_t r = 0; r < exceed.size(); ++r)
    p[r] = static_cast<double>(exceed[r]) / static_cast<double>(samples);
  return p;
}

void LocalizationProfile::merge(const LocalizationProfile& other) {
  if (exceed.size() < other.exceed.size()) exceed.resize(other.exceed.size(), 0);
  for (std::size_t r = 0; r < other.exceed.size(); ++r) exceed[r] += other.exceed[r];
  samples += other.samples;
}

LocalizationProfile ray_localization_profile(const CoverTrajectory& traj, const RayPrefix& ray,
                                             std::size_t r_max, std::size_t samples) {
  LocalizationProfile prof;
  prof.exceed.assign(r_max + 1, 0);
  // Distances are only determined while the walk stays within confirmed levels.
  std::size_t horizon = traj.heights.size();
  for (std::size_t t = 0; t < traj.heights.size(); ++t)
    if (traj.heights[t] > ray.levels) {
      horizon = t;
      break;
    }
  if (horizon == 0 || samples == 0) return prof;
  const std::size_t stride = std::max<std::size_t>(1, horizon / samples);

  std::size_t depth = 0, common = 0;
  std::vector<ArcId> path;
  for (std::size_t t = 0; t < horizon; ++t) {
    if (t > 0) {
      const CoverStep& s = traj.steps[t - 1];
      if (s.kind == MoveKind::up) {
        if (common == depth && depth < ray.levels && ray.labels[depth] == s.arc) ++common;
        ++depth;
      } else if (s.kind == MoveKind::down) {
        --depth;
        common = std::min(common, depth);
      }
    }
    if (t % stride != 0) continue;
    const std::size_t dist = depth - common;
    for (std::size_t r = 0; r <= r_max; ++r)
      if (dist > r) ++prof.exceed[r];
    ++prof.samples;
  }
  return prof;
}

stats::LinearFit localization_fit(const LocalizationProfile& profile, std::size_t r_min,
                                  std::size_t r_max) {
  const auto p = profile.probabilities();
  std::vector<double> xs, ys;
  for (std::size_t r = r_min; r <= r_max && r < p.size(); ++r) {
    if (p[r] <= 0.0) continue;
    xs.push_back(static_cast<double>(r));
    ys.push_back(std::log(p[r]));
  }
  return stats::least_squares(xs, ys);
}

ArcId default_renewal_arc(const RayLaw& law) {
  ArcId best = 0;
  for (ArcId a = 1; a < law.pi_hat.size(); ++a)
    if (law.pi_hat[a] > law.pi_hat[best]) best = a;
  return best;
}

CoverSummary run_cover_monte_carlo(const WeightedMultigraph& g, const RayLaw& law,
                                   const CoverSimOptions& opts) {
  CoverSummary out;
  out.e_star = opts.e_star.value_or(default_renewal_arc(law));
  if (law.pi_hat.at(out.e_star) <= 0.0 && law.w_hat.at(out.e_star) <= 0.0)
    throw ValidationError("renewal arc " + g.arc_name(out.e_star) + " is never on the ray");

  struct TrialOutput {
    CoverTrialRow row;
    ExcursionStats stats;
    LocalizationProfile loc;
  };
  auto run_trial = [&](std::size_t trial) {
    RngStream rng = RngStream::derive(opts.seed, "cover-trial", trial);
    const CoverTrajectory traj = simulate_walk(g, opts.root, opts.steps, opts.alpha, rng, &law);
    TrialOutput o;
    o.row.trial = trial;
    o.row.steps = opts.steps;
    o.row.final_height = traj.final_path.size();
    if (traj.max_height() <= opts.margin) return o;
    const RayPrefix ray = extract_ray(traj, opts.margin);
    o.row.ray_levels = ray.levels;
    o.stats = excursion_decomposition(traj, ray, out.e_star, 0);
    o.loc = ray_localization_profile(traj, ray, opts.r_max, opts.localization_samples);
    o.row.excursions = o.stats.size();
    for (std::size_t i = 0; i < o.stats.size(); ++i) {
      o.row.sum_tau += o.stats.tau[i];
      o.row.sum_dw += o.stats.dw[i];
      o.row.sum_dh += o.stats.dh[i];
    }
    return o;
  };

  std::size_t done = 0, target = opts.trials;
  out.localization.exceed.assign(opts.r_max + 1, 0);
  while (done < target) {
    std::vector<TrialOutput> batch(target - done);
    parallel_for(batch.size(), opts.workers,
                 [&](std::size_t i) { batch[i] = run_trial(done + i); });
    for (auto& o : batch) {
      out.trials.push_back(o.row);
      out.excursions.append(o.stats);
      out.localization.merge(o.loc);
    }
    done = target;
    if (out.excursions.size() < opts.min_excursions && done < opts.max_trials) {
      const std::size_t have = std::max<std::size_t>(out.excursions.size(), 1);
      const std::size_t more =
          std::max<std::size_t>(1, done * (opts.min_excursions - out.excursions.size()) / have + 1);
      target = std::min(opts.max_trials, done + more);
    }
  }
  out.clt = estimate_clt_params(out.excursions);
  out.localization_fit = localization_fit(out.localization, 1, opts.r_max);
  return out;
}

double root_return_frequency(const WeightedMultigraph& g, double alpha, std::size_t walks,
                             std::size_t steps, std::uint64_t seed, VertexId root) {
  const StepTable table(g);
  std::size_t returned = 0;
  for (std::size_t w = 0; w < walks; ++w) {
    RngStream rng = RngStream::derive(seed, "root-return", w);
    CoverWalker walker(g, table, root, alpha);
    for (std::size_t t = 0; t < steps; ++t) {
      const CoverStep s = walker.step(rng);
      if (s.kind == MoveKind::down && walker.path().empty()) {
        ++returned;
        break;
      }
    }
  }
  return static_cast<double>(returned) / static_cast<double>(walks);
}

}  // namespace liftcut
