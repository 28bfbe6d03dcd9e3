#include "liftcut/lift.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <complex>
#include <numeric>

#include "json.hpp"
#include "liftcut/errors.hpp"

namespace liftcut {

Lift::Lift(std::shared_ptr<const WeightedMultigraph> base, std::size_t n,
           std::vector<std::vector<std::uint32_t>> permutations, std::uint64_t seed)
    : base_(std::move(base)), n_(n), seed_(seed), perm_(std::move(permutations)) {
  if (!base_) throw std::invalid_argument("Lift: null base graph");
  if (n_ == 0) throw ValidationError("lift size n must be at least 1");
  if (perm_.size() != base_->num_edges())
    throw ValidationError("lift has " + std::to_string(perm_.size()) + " permutations for " +
                          std::to_string(base_->num_edges()) + " edges");
  inv_.resize(perm_.size());
  for (std::size_t e = 0; e < perm_.size(); ++e) {
    const auto& p = perm_[e];
    if (p.size() != n_) throw ValidationError("permutation of edge " + base_->edge(e).id + " has wrong length");
    auto& q = inv_[e];
    q.assign(n_, static_cast<std::uint32_t>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      if (p[i] >= n_ || q[p[i]] != n_)
        throw ValidationError("permutation of edge " + base_->edge(e).id + " is not a bijection");
      q[p[i]] = static_cast<std::uint32_t>(i);
    }
  }
}

LiftVertex Lift::neighbor(LiftVertex x, ArcId a) const {
  const std::size_t e = edge_of(a);
  const std::size_t i = fiber(x);
  const std::size_t j = is_reversed(a) ? inv_[e][i] : perm_[e][i];
  return vertex(base_->head(a), j);
}

std::string Lift::to_json() const {
  nlohmann::ordered_json j;
  j["base_hash"] = base_->digest_hex();
  j["n"] = n_;
  j["seed"] = seed_;
  nlohmann::ordered_json perms = nlohmann::ordered_json::object();
  for (std::size_t e = 0; e < perm_.size(); ++e) {
    std::vector<std::uint64_t> one(n_);
    for (std::size_t i = 0; i < n_; ++i) one[i] = perm_[e][i] + 1ULL;
    perms[base_->edge(e).id] = one;
  }
  j["permutations"] = perms;
  return j.dump(2) + "\n";
}

Lift Lift::from_json(std::shared_ptr<const WeightedMultigraph> base, std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("lift file: ") + ex.what());
  }
  try {
    if (j.at("base_hash").get<std::string>() != base->digest_hex())
      throw ValidationError("lift file was generated for a different base graph");
    const auto n = j.at("n").get<std::size_t>();
    const auto seed = j.value("seed", std::uint64_t{0});
    const auto& perms = j.at("permutations");
    std::vector<std::vector<std::uint32_t>> p(base->num_edges());
    for (std::size_t e = 0; e < base->num_edges(); ++e) {
      const auto& id = base->edge(e).id;
      if (!perms.contains(id)) throw ValidationError("lift file: no permutation for edge " + id);
      for (auto v : perms.at(id).get<std::vector<std::int64_t>>()) {
        if (v < 1 || static_cast<std::size_t>(v) > n)
          throw ValidationError("lift file: fiber index out of range for edge " + id);
        p[e].push_back(static_cast<std::uint32_t>(v - 1));
      }
    }
    return Lift(std::move(base), n, std::move(p), seed);
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("lift file: ") + ex.what());
  }
}

Lift generate_uniform_lift(std::shared_ptr<const WeightedMultigraph> g, std::size_t n, RngStream& rng,
                           std::uint64_t seed) {
  if (n == 0) throw ValidationError("lift size n must be at least 1");
  std::vector<std::vector<std::uint32_t>> perms(g->num_edges());
  for (auto& p : perms) {
    p.resize(n);
    std::iota(p.begin(), p.end(), 0U);
    for (std::size_t i = n; i-- > 1;) std::swap(p[i], p[rng.below(i + 1)]);
  }
  return Lift(std::move(g), n, std::move(perms), seed);
}

Lift generate_sequential_lift(std::shared_ptr<const WeightedMultigraph> g, std::size_t n,
                              RngStream& rng, std::uint64_t seed) {
  if (n == 0) throw ValidationError("lift size n must be at least 1");
  const std::size_t m = g->num_edges();
  // Unmatched half-edges of each edge type, split by end; swap-removal keeps
  // both pools contiguous.
  std::vector<std::vector<std::uint32_t>> tail_pool(m), head_pool(m);
  for (std::size_t e = 0; e < m; ++e) {
    tail_pool[e].resize(n);
    std::iota(tail_pool[e].begin(), tail_pool[e].end(), 0U);
    head_pool[e] = tail_pool[e];
  }
  auto take = [&](std::vector<std::uint32_t>& pool, std::size_t k) {
    const std::uint32_t v = pool[k];
    pool[k] = pool.back();
    pool.pop_back();
    return v;
  };
  std::vector<std::vector<std::uint32_t>> perms(m, std::vector<std::uint32_t>(n));
  std::size_t remaining = 2 * n * m;
  while (remaining > 0) {
    // Uniform unmatched half-edge over all types and ends.
    std::size_t k = rng.below(remaining);
    std::size_t e = 0;
    bool from_tail = true;
    for (; e < m; ++e) {
      if (k < tail_pool[e].size()) break;
      k -= tail_pool[e].size();
      if (k < head_pool[e].size()) {
        from_tail = false;
        break;
      }
      k -= head_pool[e].size();
    }
    if (from_tail) {
      const std::uint32_t i = take(tail_pool[e], k);
      const std::uint32_t j = take(head_pool[e], rng.below(head_pool[e].size()));
      perms[e][i] = j;
    } else {
      const std::uint32_t j = take(head_pool[e], k);
      const std::uint32_t i = take(tail_pool[e], rng.below(tail_pool[e].size()));
      perms[e][i] = j;
    }
    remaining -= 2;
  }
  return Lift(std::move(g), n, std::move(perms), seed);
}

std::vector<std::pair<LiftVertex, double>> transition_row(const Lift& lift, LiftVertex x, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ValidationError("alpha must be < 1 and nonnegative");
  if (x >= lift.num_vertices()) throw std::out_of_range("transition_row: lift vertex out of range");
  const auto& g = lift.base();
  std::vector<std::pair<LiftVertex, double>> row;
  if (alpha > 0.0) row.emplace_back(x, alpha);
  for (ArcId a : g.out_arcs(lift.type(x)))
    if (g.positive(a)) row.emplace_back(lift.neighbor(x, a), (1.0 - alpha) * g.weight(a));
  std::sort(row.begin(), row.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  std::vector<std::pair<LiftVertex, double>> merged;
  for (const auto& [y, p] : row) {
    if (!merged.empty() && merged.back().first == y)
      merged.back().second += p;
    else
      merged.emplace_back(y, p);
  }
  return merged;
}

VertexId project(const Lift& lift, LiftVertex x) {
  if (x >= lift.num_vertices()) throw std::out_of_range("project: lift vertex out of range");
  return lift.type(x);
}

std::vector<VertexId> project_path(const Lift& lift, std::span<const LiftVertex> path) {
  std::vector<VertexId> out;
  out.reserve(path.size());
  for (LiftVertex x : path) out.push_back(project(lift, x));
  return out;
}

std::vector<double> lift_stationary(const StationaryDistribution& pi, std::size_t n) {
  if (n == 0) throw ValidationError("lift size n must be at least 1");
  std::vector<double> out(pi.p.size() * n);
  for (std::size_t u = 0; u < pi.p.size(); ++u)
    for (std::size_t i = 0; i < n; ++i) out[u * n + i] = pi.p[u] / static_cast<double>(n);
  return out;
}

double lift_stationary_residual(const Lift& lift, std::span<const double> pi_n, double alpha) {
  std::vector<double> next(lift.num_vertices(), 0.0);
  for (LiftVertex x = 0; x < lift.num_vertices(); ++x)
    for (const auto& [y, p] : transition_row(lift, x, alpha)) next[y] += pi_n[x] * p;
  double worst = 0.0;
  for (LiftVertex x = 0; x < lift.num_vertices(); ++x) worst = std::max(worst, std::abs(next[x] - pi_n[x]));
  return worst;
}

double spectrum_inheritance_check(const Lift& lift, double alpha) {
  const Eigen::MatrixXd p = lift.base().transition_matrix(alpha);
  Eigen::EigenSolver<Eigen::MatrixXd> es(p);
  if (es.info() != Eigen::Success) throw NonConvergence("base eigendecomposition failed", 0.0, 0);
  const Eigen::VectorXcd lambda = es.eigenvalues();
  const Eigen::MatrixXcd vecs = es.eigenvectors();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    Eigen::VectorXcd v = vecs.col(k);
    v /= v.cwiseAbs().maxCoeff();
    for (LiftVertex x = 0; x < lift.num_vertices(); ++x) {
      std::complex<double> pv = 0.0;
      for (const auto& [y, w] : transition_row(lift, x, alpha)) pv += w * v(static_cast<Eigen::Index>(lift.type(y)));
      worst = std::max(worst, std::abs(pv - lambda(k) * v(static_cast<Eigen::Index>(lift.type(x)))));
    }
  }
  return worst;
}

std::size_t lift_outcome_index(const Lift& lift) {
  const std::size_t n = lift.n();
  if (n > 10) throw std::invalid_argument("lift_outcome_index: n too large");
  std::size_t factorial = 1;
  for (std::size_t i = 2; i <= n; ++i) factorial *= i;
  std::size_t index = 0;
  for (std::size_t e = 0; e < lift.base().num_edges(); ++e) {
    const auto& p = lift.permutation(e);
    // Lehmer code.
    std::size_t rank = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t smaller = 0;
      for (std::size_t j = i + 1; j < n; ++j)
        if (p[j] < p[i]) ++smaller;
      std::size_t f = 1;
      for (std::size_t k = 2; k < n - i; ++k) f *= k;
      rank += smaller * f;
    }
    index = index * factorial + rank;
  }
  return index;
}

}  // namespace liftcut
