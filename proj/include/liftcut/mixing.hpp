#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liftcut/lift.hpp"
#include "liftcut/stats.hpp"

namespace liftcut {

/// Stochastic matrix stored by columns ("gather" rows): entry k of column y
/// is P(sources[k], y). Both mu P and P f can be applied.
class SparseKernel {
 public:
  /// From forward rows: rows[x] lists (y, P(x, y)).
  SparseKernel(std::size_t size, const std::vector<std::vector<std::pair<std::size_t, double>>>& rows);
  static SparseKernel from_lift(const Lift& lift, double alpha);

  std::size_t size() const noexcept { return size_; }
  /// out = mu P.
  void push(std::span<const double> mu, std::span<double> out) const;
  /// out = P f.
  void pull(std::span<const double> f, std::span<double> out) const;

 private:
  std::size_t size_;
  std::vector<std::size_t> in_offsets_;
  std::vector<std::uint32_t> in_sources_;
  std::vector<double> in_probs_;
  std::vector<std::size_t> out_offsets_;
  std::vector<std::uint32_t> out_targets_;
  std::vector<double> out_probs_;
};

struct Propagation {
  std::vector<double> mu;
  /// max over steps of |sum(mu_t) - 1|; mass is never renormalized.
  double max_mass_drift = 0.0;
};

Propagation propagate(const SparseKernel& kernel, std::vector<double> mu, std::size_t t_steps);
Propagation propagate(const Lift& lift, std::vector<double> mu, double alpha, std::size_t t_steps);

double total_variation(std::span<const double> a, std::span<const double> b);

/// Default eps set.
inline const std::vector<double> kDefaultEps{0.9, 0.75, 0.5, 0.25, 0.1};

struct MixingCurve {
  LiftVertex start = 0;
  std::vector<double> tv;  // tv[t] for t = 0..T
  std::vector<double> eps;
  std::vector<std::optional<std::size_t>> t_eps;  // first t with tv <= eps
  /// Two-step averaged curve (mu_t + mu_{t+1}) / 2, filled for periodic chains
  /// without holding.
  std::vector<double> tv_avg;
  std::vector<std::optional<std::size_t>> t_eps_avg;
  bool parity_warning = false;
  bool cap_exceeded = false;
  double max_mass_drift = 0.0;
  /// Largest increase tv[t+1] - tv[t]; contraction requires <= 1e-12.
  double max_tv_increase = 0.0;
};

/// First crossing of each eps; propagation stops once every eps is reached
/// or at t_cap.
MixingCurve mixing_curve(const Lift& lift, const SparseKernel& kernel, std::span<const double> pi_n,
                         LiftVertex start, double alpha, std::span<const double> eps,
                         std::size_t t_cap);
MixingCurve mixing_curve(const Lift& lift, LiftVertex start, double alpha, std::span<const double> eps,
                         std::size_t t_cap);

/// "all" or "sample:k".
struct StartPolicy {
  bool all = false;
  std::size_t k = 5;
  static StartPolicy parse(std::string_view text);
  std::string to_string() const;
};

inline constexpr std::size_t kAllStartsCap = 20'000;

/// Start vertices under `policy`; samples are distinct and drawn from `rng`.
std::vector<LiftVertex> choose_starts(const Lift& lift, const StartPolicy& policy, RngStream& rng);

struct ExtremeMixing {
  std::optional<std::size_t> t_max, t_min;
  LiftVertex argmax = 0, argmin = 0;
  /// Sampled starts: t_max is a lower bound and t_min an upper bound.
  bool sampled = false;
};

ExtremeMixing extremes(std::span<const MixingCurve> curves, std::size_t eps_index);

ExtremeMixing worst_and_best_case(const Lift& lift, double alpha, double eps, const StartPolicy& policy,
                                  RngStream& rng, std::size_t t_cap);

struct SweepConfig {
  std::vector<std::size_t> n_grid;
  double alpha = 0.5;
  std::vector<double> eps{0.25};
  std::size_t seeds = 5;
  std::uint64_t master_seed = 1;
  StartPolicy starts;
  std::size_t t_cap = 0;  // 0: derived from the prediction
  unsigned workers = 1;
};

struct SweepRow {
  std::size_t n = 0;
  std::size_t seed = 0;
  std::string start;  // lift vertex as "name:fiber" (1-based), or "max" / "min"
  double eps = 0.0;
  std::optional<std::size_t> t_mix;
};

struct SweepCell {
  std::size_t n = 0;
  std::size_t seed = 0;
  std::vector<MixingCurve> curves;  // one per start, window eps appended to cfg.eps
  std::vector<LiftVertex> starts;
  double max_mass_drift = 0.0;
  double max_tv_increase = 0.0;
};

struct WindowStats {
  std::size_t n = 0;
  std::vector<std::optional<double>> ratio_by_seed;  // [t(0.1) - t(0.9)] / t(0.5)
  double mean_ratio = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepCell> cells;
  /// Fit of the per-n mean sampled t_max(eps_fit) against ln n.
  stats::LinearFit fit;
  double fit_eps = 0.25;
  double h_alpha = 0.0;
  double predicted_slope = 0.0;  // 1 / h(alpha)
  std::vector<WindowStats> windows;
  std::size_t seeds_with_monotone_window = 0;
  bool slope_within_tolerance = false;
  bool cutoff_verdict = false;
  double max_mass_drift = 0.0;
  double max_tv_increase = 0.0;
};

inline constexpr double kSlopeTolerance = 0.15;
inline constexpr double kWindowSeedFraction = 0.8;

/// Throws DegenerateEntropy when h(alpha) = 0. Lifts and starts come from
/// substreams keyed by (master seed, n, seed index).
SweepResult cutoff_sweep(std::shared_ptr<const WeightedMultigraph> g, const SweepConfig& cfg);

struct LowerBoundCell {
  std::size_t n = 0;
  std::size_t seed = 0;
  std::optional<std::size_t> t_min;
  double bound = 0.0;
  bool holds = false;
};

struct LowerBoundReport {
  std::vector<LowerBoundCell> cells;
  double fraction = 0.0;  // share of cells where the bound holds
};

/// Best-case check per sweep cell: t_min(eps) >= ln n / h + z(eps) sigma_hat sqrt(ln n) - slack,
/// with z the upper-tail normal quantile and sigma_hat = sigma / h^{3/2}.
LowerBoundReport lower_bound_check(const SweepResult& res, double sigma, std::size_t eps_index, double slack);

struct SpectralReport {
  double lambda2 = 0.0;           // of the additive reversibilization
  double gap = 0.0;               // 1 - lambda2
  double sigma2 = 0.0;            // second singular value of the pi-weighted kernel
  double conductance_lower = 0.0;  // gap / 2
  double conductance_upper = 0.0;  // sqrt(2 gap)
  double residual = 0.0;
  std::size_t iterations = 0;
  bool disconnected = false;      // gap below 1e-6
};

/// Lanczos with full reorthogonalization on the complement of sqrt(pi).
/// Throws NonConvergence with the achieved residual.
SpectralReport conductance_proxy(const SparseKernel& kernel, std::span<const double> pi,
                                 double tol = 1e-10, std::size_t max_iter = 300);
SpectralReport conductance_proxy(const Lift& lift, double alpha);

/// max over t <= t_max and base v of |sum_i P_n^t(x, (v, i)) - P^t(type x, v)|,
/// the base side by dense matrix powers.
double projection_identity_check(const Lift& lift, LiftVertex x, double alpha, std::size_t t_max);

}  // namespace liftcut
