#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liftcut/graph.hpp"
#include "liftcut/rng.hpp"

namespace liftcut {

using LiftVertex = std::size_t;  // (u, i) -> u * n + i, fibers 0-based

/// n-lift of a base graph: one permutation sigma_e of {0..n-1} per base edge.
/// The arc 2e out of (u, i) leads to (v, sigma_e(i)); the arc 2e+1 out of
/// (v, j) leads to (u, sigma_e^{-1}(j)). Loops use the same rule, so the two
/// half-edges of a loop are the two orientations.
class Lift {
 public:
  Lift(std::shared_ptr<const WeightedMultigraph> base, std::size_t n,
       std::vector<std::vector<std::uint32_t>> permutations, std::uint64_t seed = 0);

  const WeightedMultigraph& base() const noexcept { return *base_; }
  std::shared_ptr<const WeightedMultigraph> base_ptr() const noexcept { return base_; }
  std::size_t n() const noexcept { return n_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t num_vertices() const noexcept { return n_ * base_->num_vertices(); }
  std::size_t num_edges() const noexcept { return n_ * base_->num_edges(); }

  LiftVertex vertex(VertexId u, std::size_t fiber) const { return u * n_ + fiber; }
  VertexId type(LiftVertex x) const noexcept { return x / n_; }
  std::size_t fiber(LiftVertex x) const noexcept { return x % n_; }

  /// Endpoint of the lifted arc of type `a` leaving x; requires tail(a) = type(x).
  LiftVertex neighbor(LiftVertex x, ArcId a) const;

  const std::vector<std::uint32_t>& permutation(std::size_t e) const { return perm_.at(e); }

  /// {base_hash, n, seed, permutations} with 1-based fiber indices.
  std::string to_json() const;
  /// Rejects files whose base_hash does not match `base`.
  static Lift from_json(std::shared_ptr<const WeightedMultigraph> base, std::string_view text);

 private:
  std::shared_ptr<const WeightedMultigraph> base_;
  std::size_t n_;
  std::uint64_t seed_;
  std::vector<std::vector<std::uint32_t>> perm_;
  std::vector<std::vector<std::uint32_t>> inv_;
};

/// Independent Fisher-Yates permutation per base edge, in edge order.
Lift generate_uniform_lift(std::shared_ptr<const WeightedMultigraph> g, std::size_t n, RngStream& rng,
                           std::uint64_t seed = 0);

/// Half-edge matching: repeatedly pick a uniform unmatched half-edge among
/// all remaining ones and match it with a uniform unmatched half-edge of the
/// opposite end of the same base edge.
Lift generate_sequential_lift(std::shared_ptr<const WeightedMultigraph> g, std::size_t n,
                              RngStream& rng, std::uint64_t seed = 0);

/// Sparse row of the lazy lift kernel, merged by target and sorted by target.
std::vector<std::pair<LiftVertex, double>> transition_row(const Lift& lift, LiftVertex x, double alpha);

VertexId project(const Lift& lift, LiftVertex x);
std::vector<VertexId> project_path(const Lift& lift, std::span<const LiftVertex> path);

/// pi_n((x, i)) = pi(x) / n.
std::vector<double> lift_stationary(const StationaryDistribution& pi, std::size_t n);

/// max_v |(pi_n P_n)(v) - pi_n(v)|.
double lift_stationary_residual(const Lift& lift, std::span<const double> pi_n, double alpha);

/// Max over base eigenpairs (lambda, v) of ||P_n (v o proj) - lambda (v o proj)||_inf,
/// with eigenvectors normalized to unit sup-norm.
double spectrum_inheritance_check(const Lift& lift, double alpha);

/// Index of the permutation family in lexicographic order of the edges'
/// permutations, each ranked among the n! permutations. Small n only.
std::size_t lift_outcome_index(const Lift& lift);

}  // namespace liftcut
