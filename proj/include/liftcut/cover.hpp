#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liftcut/analyzer.hpp"
#include "liftcut/graph.hpp"
#include "liftcut/rng.hpp"
#include "liftcut/stats.hpp"

namespace liftcut {

/// Vertex of the universal cover, addressed by its non-backtracking label
/// path from the root.
struct CoverVertex {
  VertexId root = 0;
  std::vector<ArcId> path;

  std::size_t height() const noexcept { return path.size(); }
  /// Base vertex this cover vertex projects to.
  VertexId label(const WeightedMultigraph& g) const { return path.empty() ? root : g.head(path.back()); }
  /// Composable, non-backtracking, positive-weight path starting at root.
  bool valid(const WeightedMultigraph& g) const;
};

enum class MoveKind : std::uint8_t { hold, up, down };

struct CoverMove {
  MoveKind kind = MoveKind::hold;
  ArcId arc = 0;  // label of the traversed arc; unused for holds
  double probability = 0.0;
};

/// One-step law of the cover walk from v.
std::vector<CoverMove> cover_moves(const WeightedMultigraph& g, const CoverVertex& v, double alpha);

struct CoverStep {
  MoveKind kind = MoveKind::hold;
  ArcId arc = 0;
};

struct CoverTrajectory {
  VertexId root = 0;
  std::vector<CoverStep> steps;          // size T
  std::vector<std::uint32_t> heights;    // size T + 1
  std::vector<VertexId> labels;          // size T + 1
  /// -log W(X_t), filled when a ray law was supplied.
  std::vector<double> log_weights;
  std::vector<ArcId> final_path;

  std::size_t length() const noexcept { return steps.size(); }
  std::uint32_t max_height() const;
};

/// Simulates T steps from the root labelled `root`. Deterministic given the
/// stream state. `law`, when given, must be a ray law on `g` itself (see
/// extend_ray_law for graphs with hanging trees).
CoverTrajectory simulate_walk(const WeightedMultigraph& g, VertexId root, std::size_t steps,
                              double alpha, RngStream& rng, const RayLaw* law = nullptr);

/// Confirmed prefix of the ray to infinity of a finite trajectory.
struct RayPrefix {
  std::size_t levels = 0;           // L
  std::vector<ArcId> labels;        // rho_0 .. rho_{L-1}
  std::vector<std::size_t> last_exit;  // theta_0 .. theta_L
};

/// Last-exit decomposition keeping only levels at least `margin` below the
/// final height. Throws ValidationError if the walk never rose above margin.
RayPrefix extract_ray(const CoverTrajectory& traj, std::size_t margin);

/// -log W(x) summed in path order; +inf when some factor vanishes.
double log_entropic_weight(const WeightedMultigraph& g, std::span<const ArcId> path, const RayLaw& law);
double entropic_weight(const WeightedMultigraph& g, std::span<const ArcId> path, const RayLaw& law);

/// |sum of W(y) over cover vertices y at height `radius`, minus 1|, maximized over all
/// root labels. Throws ValidationError if a level exceeds `cap` vertices.
double level_weight_check(const WeightedMultigraph& g, const RayLaw& law, std::size_t radius,
                          std::size_t cap = 2'000'000);

/// Renewal excursions between consecutive exit times across arc e_star.
struct ExcursionStats {
  std::vector<double> tau;     // renewal interval lengths
  std::vector<double> dw;      // log-weight increments
  std::vector<double> dh;      // height increments
  bool degenerate = false;     // every log-weight increment is zero

  std::size_t size() const noexcept { return tau.size(); }
  void append(const ExcursionStats& other);
};

ExcursionStats excursion_decomposition(const CoverTrajectory& traj, const RayPrefix& ray,
                                       ArcId e_star, std::size_t min_excursions = 30);

struct CltEstimate {
  double h_est = 0.0;
  double se_h = 0.0;
  double sigma_est = 0.0;
  double se_sigma = 0.0;
  double speed_est = 0.0;
  double se_speed = 0.0;
  std::size_t excursions = 0;
  std::string note;
};

/// Renewal-reward estimates: h = E[dW] / E[tau],
/// sigma^2 = E[dW]^2 Var(Z) / E[tau] with Z = dW/E[dW] - tau/E[tau].
CltEstimate estimate_clt_params(const ExcursionStats& stats);

/// exceed[R] counts samples whose distance to the ray is larger than R.
struct LocalizationProfile {
  std::vector<std::size_t> exceed;
  std::size_t samples = 0;

  std::vector<double> probabilities() const;
  void merge(const LocalizationProfile& other);
};

/// Distances from X_t to the confirmed ray at `samples` evenly spaced times
/// before the walk first climbs above the confirmed prefix.
LocalizationProfile ray_localization_profile(const CoverTrajectory& traj, const RayPrefix& ray,
                                             std::size_t r_max, std::size_t samples);

/// Least-squares fit of log P(dist > R) over R in [r_min, r_max] where the
/// empirical probability is positive.
stats::LinearFit localization_fit(const LocalizationProfile& profile, std::size_t r_min,
                                  std::size_t r_max);

/// Positive-weight arc maximizing pi_hat (lowest index on ties).
ArcId default_renewal_arc(const RayLaw& law);

struct CoverSimOptions {
  double alpha = 0.5;
  std::size_t steps = 100'000;
  std::size_t trials = 10;
  std::uint64_t seed = 1;
  std::size_t margin = 25;
  VertexId root = 0;
  std::optional<ArcId> e_star;
  /// Extra trials are appended until at least this many excursions exist.
  std::size_t min_excursions = 0;
  std::size_t max_trials = 10'000;
  std::size_t r_max = 10;
  std::size_t localization_samples = 1'000;
  unsigned workers = 1;
};

struct CoverTrialRow {
  std::size_t trial = 0;
  std::size_t steps = 0;
  std::size_t final_height = 0;
  std::size_t ray_levels = 0;
  std::size_t excursions = 0;
  double sum_tau = 0.0;
  double sum_dw = 0.0;
  double sum_dh = 0.0;
};

struct CoverSummary {
  CltEstimate clt;
  LocalizationProfile localization;
  stats::LinearFit localization_fit;
  ArcId e_star = 0;
  std::vector<CoverTrialRow> trials;
  ExcursionStats excursions;
};

/// Independent trials on parallel workers; every trial draws from its own
/// substream keyed by (seed, trial index), so results do not depend on the
/// worker count.
CoverSummary run_cover_monte_carlo(const WeightedMultigraph& g, const RayLaw& law,
                                   const CoverSimOptions& opts);

/// Fraction of `walks` independent cover walks of `steps` steps that revisit
/// the root.
double root_return_frequency(const WeightedMultigraph& g, double alpha, std::size_t walks,
                             std::size_t steps, std::uint64_t seed, VertexId root = 0);

}  // namespace liftcut
