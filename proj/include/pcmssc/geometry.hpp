#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "pcmssc/core.hpp"

namespace pcmssc {

using ClusterMask = std::uint64_t;

inline ClusterMask full_mask(std::size_t k) { return k >= 64 ? ~ClusterMask{0} : (ClusterMask{1} << k) - 1; }
inline ClusterMask bit(std::size_t c) { return ClusterMask{1} << c; }
inline bool has_bit(ClusterMask m, std::size_t c) { return (m >> c) & 1U; }

/// Admissible clusters per pseudo-sample. forced[s] >= 0 implies
/// mask[s] == bit(forced[s]).
struct ViableSets {
  std::vector<ClusterMask> mask;
  std::vector<int> forced;

  static ViableSets full(std::size_t n, std::size_t k) {
    ViableSets v;
    v.mask.assign(n, full_mask(k));
    v.forced.assign(n, k == 1 ? 0 : -1);
    return v;
  }

  std::size_t size() const noexcept { return mask.size(); }
  std::size_t forced_count() const {
    std::size_t c = 0;
    for (int f : forced) c += f >= 0;
    return c;
  }
  bool operator==(const ViableSets&) const = default;
};

enum class NodeStatus { Live, Infeasible };

/// Coordinate-wise bounding box of the data, repeated for every cluster.
inline CentroidRegion root_region(const CollapsedInstance& inst) {
  CentroidRegion region(inst.k(), inst.dim());
  for (std::size_t i = 0; i < inst.dim(); ++i) {
    double lo = inst.point(0)[i];
    double hi = lo;
    for (std::size_t s = 1; s < inst.size(); ++s) {
      lo = std::min(lo, inst.point(s)[i]);
      hi = std::max(hi, inst.point(s)[i]);
    }
    for (std::size_t c = 0; c < inst.k(); ++c) {
      region.lower(c, i) = lo;
      region.upper(c, i) = hi;
    }
  }
  return region;
}

/// Smallest squared distance from x to any point of the box.
inline double d_min(std::span<const double> x, BoxView box) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double gap = 0.0;
    if (x[i] < box.lower[i]) {
      gap = box.lower[i] - x[i];
    } else if (x[i] > box.upper[i]) {
      gap = x[i] - box.upper[i];
    }
    acc += gap * gap;
  }
  return acc;
}

/// Largest squared distance from x to any point of the box (a corner).
inline double d_max(std::span<const double> x, BoxView box) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] - box.lower[i];
    const double b = x[i] - box.upper[i];
    acc += std::max(a * a, b * b);
  }
  return acc;
}

struct EliminationRule {
  double incumbent = kInf;
  /// Literal per-sample threshold rule; opt-in only.
  bool paper_rho_rule = false;
  /// Largest per-sample squared distance in the incumbent solution.
  double rho = kInf;
};

namespace detail {

/// Marks singleton masks as forced; reports an empty mask.
inline bool settle_singletons(ViableSets& viable) {
  for (std::size_t s = 0; s < viable.size(); ++s) {
    const ClusterMask m = viable.mask[s];
    if (m == 0) return false;
    if (viable.forced[s] < 0 && std::has_single_bit(m)) viable.forced[s] = std::countr_zero(m);
  }
  return true;
}

inline double incumbent_threshold(double incumbent) {
  return incumbent + 1e-12 * (1.0 + std::abs(incumbent));
}

}  // namespace detail

/// Drops cluster c from sample s when even the most optimistic completion
/// with s in c costs more than the incumbent:
///   constant + w_s d_min(x_s, M_c) + sum_{s' != s} w_s' min_{k in mask} d_min(x_s', M_k) > incumbent.
inline NodeStatus eliminate_assignments(ViableSets& viable, const CentroidRegion& region,
                                        const CollapsedInstance& inst, const EliminationRule& rule,
                                        bool* changed = nullptr) {
  const bool use_slack = std::isfinite(rule.incumbent);
  const bool use_rho = rule.paper_rho_rule && std::isfinite(rule.rho);
  if (!use_slack && !use_rho) return NodeStatus::Live;
  const std::size_t n = inst.size();
  const std::size_t k = inst.k();
  std::vector<double> dist(n * k, kInf);
  std::vector<double> best(n, kInf);
  double total = inst.constant();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < k; ++c) {
      if (!has_bit(viable.mask[s], c)) continue;
      const double v = d_min(inst.point(s), region.box(c));
      dist[s * k + c] = v;
      best[s] = std::min(best[s], v);
    }
    total += inst.weight(s) * best[s];
  }
  const double threshold = detail::incumbent_threshold(rule.incumbent);
  for (std::size_t s = 0; s < n; ++s) {
    const double w = inst.weight(s);
    const double rest = total - w * best[s];
    ClusterMask m = viable.mask[s];
    for (std::size_t c = 0; c < k; ++c) {
      if (!has_bit(m, c)) continue;
      const double dc = dist[s * k + c];
      const bool drop = (use_slack && rest + w * dc > threshold) || (use_rho && dc > rule.rho);
      if (drop) m &= ~bit(c);
    }
    if (m == viable.mask[s]) continue;
    if (changed) *changed = true;
    viable.mask[s] = m;
    if (m == 0) return NodeStatus::Infeasible;
    double nb = kInf;
    for (std::size_t c = 0; c < k; ++c)
      if (has_bit(m, c)) nb = std::min(nb, dist[s * k + c]);
    total += w * (nb - best[s]);
    best[s] = nb;
  }
  return detail::settle_singletons(viable) ? NodeStatus::Live : NodeStatus::Infeasible;
}

/// Fixes sample s to cluster c+ when every centroid in M_{c+} is strictly
/// closer than any centroid in the other viable boxes. A sample with CL
/// neighbours is only fixed when none of them may still occupy c+, since
/// otherwise an optimal solution can be pushed away from its nearest box.
inline bool force_assignments(ViableSets& viable, const CentroidRegion& region, const CollapsedInstance& inst) {
  bool changed = false;
  const std::size_t k = inst.k();
  for (std::size_t s = 0; s < inst.size(); ++s) {
    if (viable.forced[s] >= 0) continue;
    const ClusterMask m = viable.mask[s];
    std::size_t nearest = k;
    double first = kInf;
    double second = kInf;
    for (std::size_t c = 0; c < k; ++c) {
      if (!has_bit(m, c)) continue;
      const double v = d_min(inst.point(s), region.box(c));
      if (v < first) {
        second = first;
        first = v;
        nearest = c;
      } else if (v < second) {
        second = v;
      }
    }
    if (nearest == k) continue;
    if (!(d_max(inst.point(s), region.box(nearest)) < second)) continue;
    bool blocked = false;
    for (std::size_t t : inst.neighbors(s)) {
      if (has_bit(viable.mask[t], nearest)) {
        blocked = true;
        break;
      }
    }
    if (blocked) continue;
    viable.forced[s] = static_cast<int>(nearest);
    viable.mask[s] = bit(nearest);
    changed = true;
  }
  return changed;
}

/// Cannot-link propagation to a fixed point: a forced endpoint removes its
/// cluster from the other endpoint's mask.
inline NodeStatus propagate_links(ViableSets& viable, const CollapsedInstance& inst, bool* changed = nullptr) {
  if (!detail::settle_singletons(viable)) return NodeStatus::Infeasible;
  std::vector<std::size_t> work;
  for (std::size_t s = 0; s < viable.size(); ++s)
    if (viable.forced[s] >= 0 && !inst.neighbors(s).empty()) work.push_back(s);
  while (!work.empty()) {
    const std::size_t a = work.back();
    work.pop_back();
    const auto c = static_cast<std::size_t>(viable.forced[a]);
    for (std::size_t b : inst.neighbors(a)) {
      if (viable.forced[b] == static_cast<int>(c)) return NodeStatus::Infeasible;
      if (!has_bit(viable.mask[b], c)) continue;
      viable.mask[b] &= ~bit(c);
      if (changed) *changed = true;
      if (viable.mask[b] == 0) return NodeStatus::Infeasible;
      if (std::has_single_bit(viable.mask[b])) {
        viable.forced[b] = std::countr_zero(viable.mask[b]);
        work.push_back(b);
      }
    }
  }
  return NodeStatus::Live;
}

/// Elimination, forcing and link propagation repeated until nothing changes.
inline NodeStatus determine_samples(ViableSets& viable, const CentroidRegion& region, const CollapsedInstance& inst,
                                    const EliminationRule& rule, bool* changed_out = nullptr) {
  for (int round = 0; round < 64; ++round) {
    bool changed = false;
    if (eliminate_assignments(viable, region, inst, rule, &changed) == NodeStatus::Infeasible)
      return NodeStatus::Infeasible;
    changed |= force_assignments(viable, region, inst);
    if (propagate_links(viable, inst, &changed) == NodeStatus::Infeasible) return NodeStatus::Infeasible;
    if (changed_out) *changed_out |= changed;
    if (!changed) break;
  }
  return NodeStatus::Live;
}

}  // namespace pcmssc
