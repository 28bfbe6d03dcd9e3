#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "liftcut/graph.hpp"

namespace liftcut {

struct SolverOptions {
  double tol = 1e-12;
  long max_iter = 1'000'000;
};

/// q(a) = F_a(1): probability that the cover walk started at the tail of an
/// edge labelled `a` ever reaches its head.
struct GreenSolution {
  std::vector<double> q;
  double residual = 0.0;  // sup |q - G(q)| at the returned point
  long iterations = 0;
};

/// One Jacobi sweep G of the first-passage system at z = 1:
///   G(q)(b) = w(b) + q(b) * sum_{c out of tail(b), c != b} w(c) q(inverse(c)).
std::vector<double> first_passage_sweep(const WeightedMultigraph& g, std::span<const double> q);

/// Minimal nonnegative fixed point of the first-passage system by monotone
/// iteration. `start` defaults to all zeros; any start below the minimal
/// solution converges to it. Throws NonConvergence after max_iter sweeps and
/// ValidationError if some oriented edge of `g` lies on no cycle.
GreenSolution solve_first_passage(const WeightedMultigraph& g, const SolverOptions& opts = {},
                                  std::span<const double> start = {});

/// Law of the ray to infinity: per-arc exit probabilities w_hat, the
/// non-backtracking kernel Q_hat it induces, and its stationary law pi_hat.
struct RayLaw {
  std::vector<double> w_hat;
  Eigen::MatrixXd q_hat;
  std::vector<double> pi_hat;
  /// Arcs in the closed class carrying pi_hat.
  std::vector<bool> recurrent_support;
  double stationarity_residual = 0.0;
};

/// Throws RecurrentCover when the cover walk of `g` is recurrent.
RayLaw ray_law(const WeightedMultigraph& g, const GreenSolution& green);

/// Ray law on the full graph from the one computed on its core: arcs leading
/// back toward the core get w_hat = 1, arcs leading into hanging trees 0.
RayLaw extend_ray_law(const WeightedMultigraph& g, const CoreDecomposition& cd,
                      const RayLaw& core_law);

/// Kernel Q_hat(e, e') = w_hat(e') / (1 - w_hat(inverse(e))) on composable
/// non-backtracking pairs. Rows the ray can never occupy fall back to the
/// w-proportional non-backtracking step.
Eigen::MatrixXd ray_kernel(const WeightedMultigraph& g, std::span<const double> w_hat);

struct WeightEntropy {
  double h_w = 0.0;
  bool degenerate = false;
};

/// Entropy of the ray per level, in nats.
WeightEntropy weight_entropy(const WeightedMultigraph& g, const RayLaw& law);

/// Non-lazy rate of escape of the cover walk (levels per step).
double speed(const WeightedMultigraph& g, const GreenSolution& green, const RayLaw& law);

struct EntropyReport {
  double alpha = 0.0;
  double h_w = 0.0;
  double s0 = 0.0;
  double s_alpha = 0.0;
  double h_alpha = 0.0;
  double a_frac = 1.0;
  /// Alternative laziness rescaling h(1/2) / (2 (1 - alpha)), reported next
  /// to the speed-scaled h_alpha.
  double h_alpha_inverse_scaling = 0.0;
  bool degenerate = false;
  std::optional<double> sigma_mc;
  std::optional<double> sigma_mc_se;

  CoreDecomposition core;
  GreenSolution green;
  RayLaw ray;
};

/// Cutoff entropy h(alpha) = (1 - alpha) s0 h_W a. Throws RecurrentCover if
/// the cover walk is recurrent.
EntropyReport entropy(const WeightedMultigraph& g, double alpha, const SolverOptions& opts = {});

struct MixingPrediction {
  double t_center = 0.0;
  std::optional<double> t_lower;
  /// sigma_T / h^{3/2}, when a Monte Carlo sigma is available.
  std::optional<double> window_scale;
};

/// t_center = log(n) / h; t_lower adds z(eps) * sigma * sqrt(log n) where z is
/// the upper-tail standard normal quantile. Throws DegenerateEntropy if h = 0.
MixingPrediction predict_mixing_time(const EntropyReport& report, double n, double eps);
MixingPrediction predict_mixing_time(double h_alpha, std::optional<double> sigma, double n, double eps);

struct ChainCltParams {
  double mean = 0.0;
  double v_iid = 0.0;
  double v_asymptotic = 0.0;
};

/// CLT parameters of sum_t f(X_t) for an irreducible finite chain. The
/// asymptotic variance solves the Poisson equation (I - P) g = f - m.
ChainCltParams chain_clt_params(const Eigen::MatrixXd& p, std::span<const double> pi,
                                std::span<const double> f);

/// Stationary law of an irreducible stochastic matrix restricted to `states`.
std::vector<double> stationary_of(const Eigen::MatrixXd& p, const std::vector<std::size_t>& states);

}  // namespace liftcut
