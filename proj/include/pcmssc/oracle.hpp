#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "pcmssc/core.hpp"
#include "pcmssc/geometry.hpp"

// Exhaustive solvers for tiny instances. Kept deliberately naive: they are
// the ground truth the branch-and-bound is checked against.

namespace pcmssc {

struct OracleResult {
  double cost = kInf;
  Solution solution;
};

namespace detail {

inline double enumeration_size(std::size_t k, std::size_t n) {
  return std::pow(static_cast<double>(k), static_cast<double>(n));
}

/// Visits every assignment in {0..k-1}^n in lexicographic order.
template <typename Visit>
void for_each_assignment(std::size_t n, std::size_t k, Visit&& visit) {
  std::vector<int> a(n, 0);
  while (true) {
    visit(a);
    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (++a[pos] < static_cast<int>(k)) break;
      a[pos] = 0;
      if (pos == 0) return;
    }
    if (n == 0) return;
  }
}

/// Weighted SSE about per-cluster weighted means; means are written into
/// `centroids` (empty clusters get `fallback`).
inline double weighted_cost(const Matrix& points, std::span<const double> weights, std::span<const int> a,
                            std::size_t k, std::span<const double> fallback, Matrix& centroids) {
  const std::size_t d = points.cols();
  centroids = Matrix(k, d);
  std::vector<double> mass(k, 0.0);
  for (std::size_t s = 0; s < points.rows(); ++s) {
    const auto c = static_cast<std::size_t>(a[s]);
    mass[c] += weights[s];
    for (std::size_t i = 0; i < d; ++i) centroids(c, i) += weights[s] * points(s, i);
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < d; ++i)
      centroids(c, i) = mass[c] > 0.0 ? centroids(c, i) / mass[c] : fallback[i];
  }
  double cost = 0.0;
  for (std::size_t s = 0; s < points.rows(); ++s)
    cost += weights[s] * squared_distance(points.row(s), centroids.row(static_cast<std::size_t>(a[s])));
  return cost;
}

inline bool strictly_better(double candidate, double best) {
  if (!std::isfinite(best)) return candidate < best;
  return candidate < best - 1e-12 * (1.0 + std::abs(best));
}

}  // namespace detail

/// Exhaustive optimum of the collapsed instance (constant included).
/// Ties resolve to the lexicographically smallest assignment.
inline OracleResult brute_force(const CollapsedInstance& inst) {
  const std::size_t n = inst.size();
  const std::size_t k = inst.k();
  if (detail::enumeration_size(k, n) > 1e7) throw Error(ErrorCode::TooLarge, "k^n exceeds 10^7");
  std::vector<double> weights(n);
  for (std::size_t s = 0; s < n; ++s) weights[s] = inst.weight(s);
  std::vector<double> fallback(inst.dim(), 0.0);
  for (std::size_t i = 0; i < inst.dim(); ++i) fallback[i] = inst.point(0)[i];

  OracleResult best;
  Matrix centroids;
  detail::for_each_assignment(n, k, [&](const std::vector<int>& a) {
    for (const auto& [u, v] : inst.cl_edges())
      if (a[u] == a[v]) return;
    const double cost = detail::weighted_cost(inst.points(), weights, a, k, fallback, centroids) + inst.constant();
    if (detail::strictly_better(cost, best.cost)) {
      best.cost = cost;
      best.solution = Solution{centroids, a, cost, true};
    }
  });
  return best;
}

/// Exhaustive optimum of the raw ML/CL-constrained problem on original points.
inline OracleResult brute_force(const Dataset& data, const ConstraintSet& cons, std::size_t k) {
  const std::size_t n = data.n();
  if (detail::enumeration_size(k, n) > 1e7) throw Error(ErrorCode::TooLarge, "k^n exceeds 10^7");
  std::vector<double> weights(n, 1.0);
  std::vector<double> fallback(data.points.row(0).begin(), data.points.row(0).end());
  OracleResult best;
  Matrix centroids;
  detail::for_each_assignment(n, k, [&](const std::vector<int>& a) {
    for (const auto& [u, v] : cons.ml_pairs)
      if (a[u] != a[v]) return;
    for (const auto& [u, v] : cons.cl_pairs)
      if (a[u] == a[v]) return;
    const double cost = detail::weighted_cost(data.points, weights, a, k, fallback, centroids);
    if (detail::strictly_better(cost, best.cost)) {
      best.cost = cost;
      best.solution = Solution{centroids, a, cost, true};
    }
  });
  return best;
}

struct GridOracleResult {
  /// Minimum over grid centroid tuples; an upper bound on z(M).
  double value = kInf;
  /// z(M) >= value - slack.
  double slack = 0.0;
  Matrix argmin;
  bool cl_enforced = false;
};

/// Dense-grid estimate of z(M) = min over mu in M of the constrained cost.
/// CL is enforced exactly when the instance has at most 10 samples and
/// relaxed otherwise.
inline GridOracleResult brute_force_in_region(const CollapsedInstance& inst, const CentroidRegion& region,
                                              double grid_step, const std::optional<ViableSets>& viable = {}) {
  const std::size_t k = inst.k();
  const std::size_t d = inst.dim();
  const std::size_t n = inst.size();
  const std::size_t coords = k * d;
  std::vector<std::vector<double>> axes(coords);
  double total = 1.0;
  for (std::size_t j = 0; j < coords; ++j) {
    const double lo = region.lower.values()[j];
    const double hi = region.upper.values()[j];
    const auto steps = static_cast<std::size_t>(std::floor((hi - lo) / grid_step + 1e-9));
    for (std::size_t t = 0; t <= steps; ++t) axes[j].push_back(std::min(hi, lo + static_cast<double>(t) * grid_step));
    if (axes[j].back() < hi) axes[j].push_back(hi);
    total *= static_cast<double>(axes[j].size());
  }
  if (total > 1e7) throw Error(ErrorCode::TooLarge, "grid has more than 10^7 centroid tuples");

  const ViableSets masks = viable ? *viable : ViableSets::full(n, k);
  const bool enforce_cl = inst.has_cl() && n <= 10;

  GridOracleResult out;
  out.cl_enforced = enforce_cl;
  Matrix mu(k, d);
  std::vector<std::size_t> idx(coords, 0);
  std::vector<double> dist(n * k);
  std::vector<int> a(n, -1);

  // Depth-first search over CL-feasible assignments with an optimistic bound.
  std::vector<double> best_rest(n + 1, 0.0);
  double best_assign = kInf;
  auto search = [&](auto&& self, std::size_t s, double acc) -> void {
    if (acc + best_rest[s] >= best_assign) return;
    if (s == n) {
      best_assign = acc;
      return;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (!has_bit(masks.mask[s], c)) continue;
      bool clash = false;
      for (std::size_t t : inst.neighbors(s))
        if (t < s && a[t] == static_cast<int>(c)) clash = true;
      if (clash) continue;
      a[s] = static_cast<int>(c);
      self(self, s + 1, acc + dist[s * k + c]);
      a[s] = -1;
    }
  };

  while (true) {
    for (std::size_t j = 0; j < coords; ++j) mu.values()[j] = axes[j][idx[j]];
    double cost = inst.constant();
    std::vector<double> per_sample(n, kInf);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t c = 0; c < k; ++c) {
        dist[s * k + c] = inst.weight(s) * squared_distance(inst.point(s), mu.row(c));
        if (has_bit(masks.mask[s], c)) per_sample[s] = std::min(per_sample[s], dist[s * k + c]);
      }
    }
    if (enforce_cl) {
      for (std::size_t s = n; s-- > 0;) best_rest[s] = best_rest[s + 1] + per_sample[s];
      best_assign = kInf;
      search(search, 0, 0.0);
      cost += best_assign;
    } else {
      for (double v : per_sample) cost += v;
    }
    if (cost < out.value) {
      out.value = cost;
      out.argmin = mu;
    }
    std::size_t j = 0;
    while (j < coords) {
      if (++idx[j] < axes[j].size()) break;
      idx[j] = 0;
      ++j;
    }
    if (j == coords) break;
  }

  // Every point of a box lies within half the local grid spacing (per axis)
  // of a grid point.
  double radius_sq = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const auto& axis = axes[c * d + i];
      double spacing = 0.0;
      for (std::size_t t = 1; t < axis.size(); ++t) spacing = std::max(spacing, axis[t] - axis[t - 1]);
      acc += 0.25 * spacing * spacing;
    }
    radius_sq = std::max(radius_sq, acc);
  }
  const double radius = std::sqrt(radius_sq);
  for (std::size_t s = 0; s < n; ++s) {
    double reach = 0.0;
    for (std::size_t c = 0; c < k; ++c) reach = std::max(reach, d_max(inst.point(s), region.box(c)));
    out.slack += inst.weight(s) * (2.0 * std::sqrt(reach) * radius + radius_sq);
  }
  return out;
}

}  // namespace pcmssc
