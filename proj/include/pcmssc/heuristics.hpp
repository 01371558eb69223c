#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "pcmssc/bounds.hpp"
#include "pcmssc/core.hpp"

namespace pcmssc {

using Rng = std::mt19937_64;

/// Independent generator for restart `stream` of a run seeded with `seed`.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9U};
  return Rng(seq);
}

/// Weighted k-means++ seeding. When fewer distinct locations than k exist the
/// extra centroids duplicate points drawn by weight.
inline Matrix kmeanspp_seed(const CollapsedInstance& inst, std::size_t k, Rng& rng) {
  const std::size_t n = inst.size();
  Matrix centroids(k, inst.dim());
  std::vector<double> weights(n);
  for (std::size_t s = 0; s < n; ++s) weights[s] = inst.weight(s);

  std::discrete_distribution<std::size_t> first(weights.begin(), weights.end());
  std::size_t pick = first(rng);
  std::copy(inst.point(pick).begin(), inst.point(pick).end(), centroids.row(0).begin());

  std::vector<double> nearest(n);
  for (std::size_t s = 0; s < n; ++s) nearest[s] = squared_distance(inst.point(s), centroids.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    std::vector<double> score(n);
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      score[s] = weights[s] * nearest[s];
      total += score[s];
    }
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> next(score.begin(), score.end());
      pick = next(rng);
    } else {
      pick = first(rng);
    }
    std::copy(inst.point(pick).begin(), inst.point(pick).end(), centroids.row(c).begin());
    for (std::size_t s = 0; s < n; ++s)
      nearest[s] = std::min(nearest[s], squared_distance(inst.point(s), centroids.row(c)));
  }
  return centroids;
}

struct CopResult {
  std::optional<Solution> solution;
  /// Objective after each accepted Lloyd iteration; non-increasing.
  std::vector<double> cost_trace;
};

/// COP-k-means on a collapsed instance: Lloyd iterations whose assignment step
/// is the CL-respecting greedy colouring. Fails when the first assignment
/// pass blocks; later passes that block or fail to improve end the run.
inline CopResult cop_kmeans(const CollapsedInstance& inst, std::size_t k, Rng& rng, std::size_t max_iters = 100) {
  CopResult out;
  std::optional<CollapsedInstance> resized;
  if (k != inst.k()) resized = inst.with_k(k);
  const CollapsedInstance& model = resized ? *resized : inst;
  Matrix centroids = kmeanspp_seed(model, k, rng);
  for (std::size_t it = 0; it < std::max<std::size_t>(max_iters, 1); ++it) {
    auto assigned = color_assign(model, centroids);
    if (!assigned.solution) break;
    if (out.solution && !(assigned.cost < out.solution->objective)) break;
    Solution next = std::move(*assigned.solution);
    next.centroids = weighted_means(model, next.assignment, centroids);
    next.objective = recompute_objective(model, next);
    out.cost_trace.push_back(next.objective);
    centroids = next.centroids;
    out.solution = std::move(next);
  }
  return out;
}

/// Best of `restarts` COP-k-means runs, each from its own derived stream.
inline std::optional<Solution> multi_restart(const CollapsedInstance& inst, std::size_t k, std::size_t restarts,
                                             std::uint64_t seed, std::size_t max_iters = 100) {
  std::optional<Solution> best;
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng = derive_rng(seed, r);
    auto run = cop_kmeans(inst, k, rng, max_iters);
    if (run.solution && (!best || run.solution->objective < best->objective)) best = std::move(run.solution);
  }
  return best;
}

}  // namespace pcmssc
