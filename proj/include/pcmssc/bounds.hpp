#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "pcmssc/core.hpp"
#include "pcmssc/geometry.hpp"

namespace pcmssc {

/// constant + sum_s w_s min_{k in mask(s)} d_min(x_s, M_k).
inline double lower_bound_basic(const CollapsedInstance& inst, const CentroidRegion& region,
                                const ViableSets& viable) {
  double total = inst.constant();
  for (std::size_t s = 0; s < inst.size(); ++s) {
    double best = kInf;
    for (std::size_t c = 0; c < inst.k(); ++c) {
      if (has_bit(viable.mask[s], c)) best = std::min(best, d_min(inst.point(s), region.box(c)));
    }
    total += inst.weight(s) * best;
  }
  return total;
}

struct Grouping {
  std::vector<std::vector<std::size_t>> groups;
};

/// CL components are laid out first in breadth-first order so that linked
/// samples share a group, then unconstrained samples in index order; the
/// sequence is cut into blocks of group_size_max.
inline Grouping build_grouping(const CollapsedInstance& inst, std::size_t group_size_max) {
  if (group_size_max == 0) throw Error(ErrorCode::InvalidConfig, "group_size_max must be positive");
  std::vector<std::size_t> sequence;
  sequence.reserve(inst.size());
  std::vector<char> placed(inst.size(), 0);
  for (std::size_t start = 0; start < inst.size(); ++start) {
    if (placed[start] || inst.neighbors(start).empty()) continue;
    const std::size_t head0 = sequence.size();
    sequence.push_back(start);
    placed[start] = 1;
    for (std::size_t head = head0; head < sequence.size(); ++head) {
      for (std::size_t u : inst.neighbors(sequence[head])) {
        if (!placed[u]) {
          placed[u] = 1;
          sequence.push_back(u);
        }
      }
    }
  }
  for (std::size_t s = 0; s < inst.size(); ++s)
    if (!placed[s]) sequence.push_back(s);

  Grouping out;
  for (std::size_t pos = 0; pos < sequence.size(); pos += group_size_max) {
    const std::size_t end = std::min(sequence.size(), pos + group_size_max);
    out.groups.emplace_back(sequence.begin() + static_cast<std::ptrdiff_t>(pos),
                            sequence.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

/// Group members plus the CL edges internal to the group, as member positions.
struct GroupSpec {
  std::vector<std::size_t> members;
  std::vector<std::pair<std::size_t, std::size_t>> local_cl;
};

inline GroupSpec prepare_group(const CollapsedInstance& inst, std::vector<std::size_t> members) {
  GroupSpec spec;
  spec.members = std::move(members);
  for (std::size_t p = 0; p < spec.members.size(); ++p) {
    for (std::size_t t : inst.neighbors(spec.members[p])) {
      for (std::size_t q = p + 1; q < spec.members.size(); ++q) {
        if (spec.members[q] == t) spec.local_cl.emplace_back(p, q);
      }
    }
  }
  return spec;
}

struct GroupSolution {
  double value = kInf;
  Matrix centroids;
  /// Weight assigned to each cluster by the minimizing assignment.
  std::vector<double> mass;
  std::vector<int> assignment;
};

namespace detail {

/// min over mu in box of  Q - 2 S.mu + W |mu|^2 + c.mu ; writes the minimizer.
inline double cluster_term(double mass, std::span<const double> sum, double sumsq, std::span<const double> c,
                           BoxView box, std::span<double> mu) {
  double value = 0.0;
  if (mass > 0.0) {
    value = sumsq;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double m = std::clamp((sum[i] - 0.5 * c[i]) / mass, box.lower[i], box.upper[i]);
      mu[i] = m;
      value += m * (mass * m - 2.0 * sum[i] + c[i]);
    }
    return value;
  }
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double m = c[i] < 0.0 ? box.upper[i] : box.lower[i];
    mu[i] = m;
    value += c[i] * m;
  }
  return value;
}

}  // namespace detail

/// Cluster statistics of every joint assignment of a group that respects the
/// masks and intra-group CL. Independent of the multipliers, so one table
/// serves all subgradient iterations at a node.
struct GroupTable {
  std::size_t k = 0;
  std::size_t d = 0;
  std::size_t m = 0;
  /// Per row: mass[k], sumsq[k], sum[k*d], then the member assignment.
  std::vector<double> stats;
  std::vector<int> assignments;
  std::size_t rows = 0;

  std::size_t stride() const { return 2 * k + k * d; }
  const double* row(std::size_t r) const { return stats.data() + r * stride(); }
  std::span<const int> assignment(std::size_t r) const { return {assignments.data() + r * m, m}; }
};

/// Returns nullopt when no joint assignment survives.
inline std::optional<GroupTable> tabulate_group(const CollapsedInstance& inst, const GroupSpec& group,
                                                const ViableSets& viable) {
  const std::size_t k = inst.k();
  const std::size_t d = inst.dim();
  const std::size_t m = group.members.size();

  std::vector<std::vector<int>> options(m);
  double combos = 1.0;
  for (std::size_t p = 0; p < m; ++p) {
    const ClusterMask mask = viable.mask[group.members[p]];
    for (std::size_t cl = 0; cl < k; ++cl)
      if (has_bit(mask, cl)) options[p].push_back(static_cast<int>(cl));
    if (options[p].empty()) return std::nullopt;
    combos *= static_cast<double>(options[p].size());
  }
  if (combos > 1e7) throw Error(ErrorCode::TooLarge, "group enumeration exceeds 10^7 joint assignments");

  GroupTable table;
  table.k = k;
  table.d = d;
  table.m = m;
  const std::size_t stride = table.stride();

  // Members with a single option contribute fixed statistics.
  std::vector<double> base(stride, 0.0);
  auto add = [&](std::vector<double>& row, std::size_t s, std::size_t cl) {
    const double w = inst.weight(s);
    auto x = inst.point(s);
    row[cl] += w;
    double* sum = row.data() + 2 * k + cl * d;
    for (std::size_t i = 0; i < d; ++i) {
      sum[i] += w * x[i];
      row[k + cl] += w * x[i] * x[i];
    }
  };
  std::vector<std::size_t> free_members;
  for (std::size_t p = 0; p < m; ++p) {
    if (options[p].size() > 1)
      free_members.push_back(p);
    else
      add(base, group.members[p], static_cast<std::size_t>(options[p][0]));
  }

  std::vector<int> current(m);
  for (std::size_t p = 0; p < m; ++p) current[p] = options[p][0];
  std::vector<std::size_t> odometer(free_members.size(), 0);
  std::vector<double> row(stride);
  while (true) {
    bool ok = true;
    for (const auto& [p, q] : group.local_cl) {
      if (current[p] == current[q]) {
        ok = false;
        break;
      }
    }
    if (ok) {
      row = base;
      for (std::size_t p : free_members) add(row, group.members[p], static_cast<std::size_t>(current[p]));
      table.stats.insert(table.stats.end(), row.begin(), row.end());
      table.assignments.insert(table.assignments.end(), current.begin(), current.end());
      ++table.rows;
    }
    std::size_t pos = 0;
    while (pos < free_members.size()) {
      const std::size_t p = free_members[pos];
      if (++odometer[pos] < options[p].size()) {
        current[p] = options[p][odometer[pos]];
        break;
      }
      odometer[pos] = 0;
      current[p] = options[p][0];
      ++pos;
    }
    if (pos == free_members.size()) break;
  }
  if (table.rows == 0) return std::nullopt;
  return table;
}

/// Minimizes the tabulated group objective for multipliers c. `mu` is scratch
/// of shape k x d. Returns the best row; its centroids are left in `best_mu`.
inline std::size_t evaluate_group(const GroupTable& table, const CentroidRegion& region, const Matrix& c, Matrix& mu,
                                  Matrix& best_mu, double& best_value) {
  const std::size_t k = table.k;
  const std::size_t d = table.d;
  best_value = kInf;
  std::size_t best = 0;
  for (std::size_t r = 0; r < table.rows; ++r) {
    const double* row = table.row(r);
    double value = 0.0;
    for (std::size_t cl = 0; cl < k; ++cl)
      value += detail::cluster_term(row[cl], {row + 2 * k + cl * d, d}, row[k + cl], c.row(cl), region.box(cl),
                                    mu.row(cl));
    if (value < best_value) {
      best_value = value;
      best = r;
      std::swap(mu, best_mu);
    }
  }
  return best;
}

/// Exact minimum over mu_g in M of sum_{s in g} w_s min_{k in mask(s)} |x_s - mu_k|^2 + <c, mu>,
/// enumerating joint assignments that respect masks and intra-group CL.
/// Returns nullopt when no joint assignment survives.
inline std::optional<GroupSolution> solve_group_subproblem(const CollapsedInstance& inst, const GroupSpec& group,
                                                           const CentroidRegion& region, const ViableSets& viable,
                                                           const Matrix& c) {
  const auto table = tabulate_group(inst, group, viable);
  if (!table) return std::nullopt;
  GroupSolution best;
  Matrix mu(inst.k(), inst.dim());
  best.centroids = Matrix(inst.k(), inst.dim());
  const std::size_t r = evaluate_group(*table, region, c, mu, best.centroids, best.value);
  best.mass.assign(table->row(r), table->row(r) + inst.k());
  const auto a = table->assignment(r);
  best.assignment.assign(a.begin(), a.end());
  return best;
}

/// Multipliers of one decomposition, keyed by the chain links they price.
struct MultiplierState {
  std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>> links;
  std::vector<Matrix> lambda;
};

struct LagrangianResult {
  /// Best dual value seen, constant included.
  double bound = -kInf;
  /// Dual value at the starting multipliers (zero unless warm-started),
  /// constant included.
  double value_at_zero = -kInf;
  /// Mass-weighted averages of the group centroids, one per iteration.
  std::vector<Matrix> candidates;
  std::size_t iterations = 0;
  /// Multipliers at the best dual value.
  MultiplierState best_lambda;
};

/// The blocks the decomposition runs over at one node: the root grouping, or,
/// with aggregate_forced, all forced samples as one block followed by the
/// root groups restricted to unforced samples.
/// `ids`, when given, receives the root group index of each block (-1 for
/// the forced block).
inline std::vector<GroupSpec> node_blocks(const CollapsedInstance& inst, const ViableSets& viable,
                                          const Grouping& grouping, bool aggregate_forced,
                                          std::vector<std::ptrdiff_t>* ids = nullptr) {
  std::vector<GroupSpec> blocks;
  if (ids) ids->clear();
  if (!aggregate_forced) {
    for (std::size_t g = 0; g < grouping.groups.size(); ++g) {
      blocks.push_back(prepare_group(inst, grouping.groups[g]));
      if (ids) ids->push_back(static_cast<std::ptrdiff_t>(g));
    }
    return blocks;
  }
  std::vector<std::size_t> forced;
  for (std::size_t s = 0; s < inst.size(); ++s)
    if (viable.forced[s] >= 0) forced.push_back(s);
  if (!forced.empty()) {
    // Forced endpoints already sit in distinct clusters, so no CL check is needed.
    GroupSpec block;
    block.members = std::move(forced);
    blocks.push_back(std::move(block));
    if (ids) ids->push_back(-1);
  }
  for (std::size_t g = 0; g < grouping.groups.size(); ++g) {
    std::vector<std::size_t> members;
    for (std::size_t s : grouping.groups[g])
      if (viable.forced[s] < 0) members.push_back(s);
    if (!members.empty()) {
      blocks.push_back(prepare_group(inst, std::move(members)));
      if (ids) ids->push_back(static_cast<std::ptrdiff_t>(g));
    }
  }
  return blocks;
}


/// Grouped Lagrangian decomposition bound. Group copies of the centroids are
/// chained by mu_g = mu_{g+1}; the chain is dualized and the dual maximized by
/// diminishing subgradient steps ld_step0 / t, from zero or from the links
/// `warm` shares with this node's chain. Returns nullopt when some block has
/// no admissible joint assignment.
inline std::optional<LagrangianResult> lower_bound_lagrangian(const CollapsedInstance& inst,
                                                              const CentroidRegion& region, const ViableSets& viable,
                                                              const Grouping& grouping, const SolverConfig& config,
                                                              double cutoff = kInf,
                                                              const MultiplierState* warm = nullptr) {
  const std::size_t k = inst.k();
  const std::size_t d = inst.dim();
  std::vector<std::ptrdiff_t> ids;
  const auto blocks = node_blocks(inst, viable, grouping, config.aggregate_forced, &ids);
  const std::size_t g_count = blocks.size();

  LagrangianResult out;
  std::vector<Matrix> lambda(g_count > 0 ? g_count - 1 : 0, Matrix(k, d));
  std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>> links;
  for (std::size_t g = 0; g + 1 < g_count; ++g) links.emplace_back(ids[g], ids[g + 1]);
  if (warm) {
    // Links that survived since the parent keep their multipliers.
    for (std::size_t g = 0; g < links.size(); ++g) {
      const auto it = std::find(warm->links.begin(), warm->links.end(), links[g]);
      if (it != warm->links.end()) lambda[g] = warm->lambda[static_cast<std::size_t>(it - warm->links.begin())];
    }
  }
  out.best_lambda.links = links;
  std::vector<Matrix> mu(g_count);
  Matrix c(k, d);
  const Matrix midpoint = region.midpoint();
  std::vector<GroupTable> tables;
  tables.reserve(g_count);
  for (const auto& block : blocks) {
    auto table = tabulate_group(inst, block, viable);
    if (!table) return std::nullopt;
    tables.push_back(std::move(*table));
  }
  Matrix scratch(k, d);
  for (auto& m : mu) m = Matrix(k, d);

  for (std::size_t t = 0; t <= config.ld_iterations; ++t) {
    if (t > 0) {
      const double step = config.ld_step0 / static_cast<double>(t);
      double norm = 0.0;
      for (std::size_t g = 0; g + 1 < g_count; ++g) {
        auto& lam = lambda[g].values();
        const auto& a = mu[g].values();
        const auto& b = mu[g + 1].values();
        for (std::size_t i = 0; i < lam.size(); ++i) {
          const double sub = a[i] - b[i];
          norm += sub * sub;
          lam[i] += step * sub;
        }
      }
      // Zero subgradient: the dual is maximized already.
      if (norm == 0.0) break;
    }

    double value = inst.constant();
    Matrix weighted(k, d);
    std::vector<double> mass(k, 0.0);
    for (std::size_t g = 0; g < g_count; ++g) {
      auto& cv = c.values();
      for (std::size_t i = 0; i < cv.size(); ++i) {
        double v = 0.0;
        if (g < lambda.size()) v += lambda[g].values()[i];
        if (g > 0) v -= lambda[g - 1].values()[i];
        cv[i] = v;
      }
      double group_value = 0.0;
      const std::size_t r = evaluate_group(tables[g], region, c, scratch, mu[g], group_value);
      value += group_value;
      const double* row = tables[g].row(r);
      for (std::size_t cl = 0; cl < k; ++cl) {
        mass[cl] += row[cl];
        for (std::size_t i = 0; i < d; ++i) weighted(cl, i) += row[cl] * mu[g](cl, i);
      }
    }
    if (t == 0) out.value_at_zero = value;
    if (value > out.bound) {
      out.bound = value;
      out.best_lambda.lambda = lambda;
    }
    out.iterations = t;

    Matrix candidate = midpoint;
    for (std::size_t cl = 0; cl < k; ++cl) {
      if (mass[cl] <= 0.0) continue;
      for (std::size_t i = 0; i < d; ++i) candidate(cl, i) = weighted(cl, i) / mass[cl];
    }
    out.candidates.push_back(region.clamp(candidate));
    if (out.bound >= cutoff) break;
  }
  return out;
}

struct UpperBound {
  double cost = kInf;
  std::optional<Solution> solution;
};

/// Greedy proper colouring of the CL graph guided by the centroids: samples in
/// CL-degree/weight order take the nearest cluster not used by an
/// already-placed CL neighbour. A blocked sample makes the candidate +inf.
inline UpperBound color_assign(const CollapsedInstance& inst, const Matrix& centroids) {
  const std::size_t k = inst.k();
  std::vector<int> assignment(inst.size(), -1);
  double cost = inst.constant();
  for (std::size_t s : inst.coloring_order()) {
    ClusterMask used = 0;
    for (std::size_t t : inst.neighbors(s))
      if (assignment[t] >= 0) used |= bit(static_cast<std::size_t>(assignment[t]));
    int choice = -1;
    double best = kInf;
    for (std::size_t cl = 0; cl < k; ++cl) {
      if (has_bit(used, cl)) continue;
      const double v = squared_distance(inst.point(s), centroids.row(cl));
      if (v < best) {
        best = v;
        choice = static_cast<int>(cl);
      }
    }
    if (choice < 0) return {};
    assignment[s] = choice;
    cost += inst.weight(s) * best;
  }
  UpperBound out;
  out.cost = cost;
  out.solution = Solution{centroids, std::move(assignment), cost, true};
  return out;
}

/// Best colouring bound over a pool of candidate centroid sets.
inline UpperBound upper_bound_kcoloring(const CollapsedInstance& inst, std::span<const Matrix> candidates) {
  UpperBound best;
  for (const auto& candidate : candidates) {
    auto ub = color_assign(inst, candidate);
    if (ub.cost < best.cost) best = std::move(ub);
  }
  return best;
}

/// Nearest-centroid assignment (ties to the lowest index); valid only without CL edges.
inline UpperBound upper_bound_ml_closed_form(const CollapsedInstance& inst, const Matrix& centroids) {
  if (inst.has_cl()) throw Error(ErrorCode::PreconditionViolated, "closed-form bound needs an instance without CL edges");
  return color_assign(inst, centroids);
}

/// Constrained Lloyd polish: weighted-mean update, then colouring
/// reassignment followed by a refit. Steps are kept only while the cost
/// strictly drops.
inline Solution polish_lloyd_constrained(const CollapsedInstance& inst, Solution sol, std::size_t max_iters) {
  for (std::size_t it = 0; it < max_iters; ++it) {
    bool improved = false;
    Solution refit = sol;
    refit.centroids = weighted_means(inst, sol.assignment, sol.centroids);
    refit.objective = recompute_objective(inst, refit);
    if (refit.objective < sol.objective) {
      sol = std::move(refit);
      improved = true;
    }
    auto reassigned = color_assign(inst, sol.centroids);
    if (reassigned.solution) {
      Solution next = std::move(*reassigned.solution);
      next.centroids = weighted_means(inst, next.assignment, sol.centroids);
      next.objective = recompute_objective(inst, next);
      if (next.objective < sol.objective) {
        sol = std::move(next);
        improved = true;
      }
    }
    if (!improved) break;
  }
  return sol;
}

}  // namespace pcmssc
