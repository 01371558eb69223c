#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <queue>
#include <thread>
#include <utility>
#include <vector>

#include "pcmssc/bounds.hpp"
#include "pcmssc/core.hpp"
#include "pcmssc/geometry.hpp"
#include "pcmssc/heuristics.hpp"
#include "pcmssc/preprocess.hpp"

namespace pcmssc {

enum class SolveStatus { Optimal, GapLimit, TimeLimit, NodeLimit, Infeasible };

inline const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::GapLimit: return "GapLimit";
    case SolveStatus::TimeLimit: return "TimeLimit";
    case SolveStatus::NodeLimit: return "NodeLimit";
    case SolveStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

struct SolveNode {
  CentroidRegion region;
  ViableSets viable;
  double lb = -kInf;
  std::size_t depth = 0;
  std::uint64_t id = 0;
  /// Parent's multipliers, shared by both children (warm start only).
  std::shared_ptr<const MultiplierState> multipliers;
};

struct HistoryPoint {
  double time_s = 0.0;
  double value = 0.0;
};

struct SolveStats {
  std::size_t nodes_processed = 0;
  std::size_t nodes_pruned = 0;
  std::size_t nodes_exact = 0;
  std::size_t max_depth = 0;
  double wall_time_s = 0.0;
  double time_per_node_s = 0.0;
  double core_hours = 0.0;
  std::size_t threads = 1;
  std::vector<HistoryPoint> lb_history;
  std::vector<HistoryPoint> ub_history;
};

struct SolveResult {
  /// Incumbent on original sample indices (when the instance was collapsed
  /// from a dataset) or on pseudo-samples otherwise.
  Solution best;
  /// Incumbent on pseudo-sample indices.
  Solution collapsed_best;
  double lb = -kInf;
  double ub = kInf;
  double rel_gap = kInf;
  SolveStatus status = SolveStatus::Infeasible;
  SolveStats stats;
  /// Lower bound of every node discarded because its bound met the incumbent.
  std::vector<double> pruned_lbs;
};

struct ProgressEvent {
  double time_s = 0.0;
  double lb = -kInf;
  double ub = kInf;
  double gap = kInf;
  std::size_t nodes = 0;
  std::size_t open = 0;
};

using ProgressCallback = std::function<void(const ProgressEvent&)>;

/// (ub - lb) / min(ub, lb); +inf without an incumbent; |ub - lb| when the
/// smaller bound is not positive.
inline double relative_gap(double ub, double lb) {
  if (!std::isfinite(ub)) return kInf;
  if (ub == lb) return 0.0;
  if (!std::isfinite(lb)) return kInf;
  const double denom = std::min(ub, lb);
  if (denom <= 0.0) return std::abs(ub - lb);
  return (ub - lb) / denom;
}

inline bool is_degenerate(const CentroidRegion& region, double tol = 1e-12) { return region.diameter() <= tol; }

/// Bisects the longest box edge over all (cluster, coordinate) pairs at its
/// midpoint; ties go to the lowest cluster, then the lowest coordinate.
inline std::pair<SolveNode, SolveNode> branch_region(const SolveNode& node) {
  const auto& region = node.region;
  std::size_t best_c = 0;
  std::size_t best_i = 0;
  double best_len = -1.0;
  for (std::size_t c = 0; c < region.k(); ++c) {
    for (std::size_t i = 0; i < region.dim(); ++i) {
      const double len = region.upper(c, i) - region.lower(c, i);
      if (len > best_len) {
        best_len = len;
        best_c = c;
        best_i = i;
      }
    }
  }
  if (best_len <= 1e-12) throw Error(ErrorCode::DegenerateRegion, "every box edge is below 1e-12");
  const double mid = 0.5 * (region.lower(best_c, best_i) + region.upper(best_c, best_i));
  SolveNode left = node;
  SolveNode right = node;
  left.region.upper(best_c, best_i) = mid;
  right.region.lower(best_c, best_i) = mid;
  left.depth = right.depth = node.depth + 1;
  return {std::move(left), std::move(right)};
}

/// Restricts boxes to centroid tuples ordered by their first coordinate,
/// mu_{0,0} <= mu_{1,0} <= ... . Labels are interchangeable, so some optimal
/// labelling always survives. Returns false when the region becomes empty.
inline bool apply_symmetry_breaking(CentroidRegion& region) {
  const std::size_t k = region.k();
  for (std::size_t c = 1; c < k; ++c) region.lower(c, 0) = std::max(region.lower(c, 0), region.lower(c - 1, 0));
  for (std::size_t c = k - 1; c-- > 0;) region.upper(c, 0) = std::min(region.upper(c, 0), region.upper(c + 1, 0));
  for (std::size_t c = 0; c < k; ++c)
    if (region.lower(c, 0) > region.upper(c, 0)) return false;
  return true;
}

/// Relabels clusters so that centroids ascend in their first coordinate (ties
/// keep the existing order). The objective is unchanged.
inline Solution order_clusters(const Solution& sol) {
  const std::size_t k = sol.centroids.rows();
  if (k == 0 || sol.centroids.cols() == 0) return sol;
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sol.centroids(a, 0) < sol.centroids(b, 0); });
  std::vector<int> relabel(k);
  Solution out = sol;
  for (std::size_t pos = 0; pos < k; ++pos) {
    relabel[order[pos]] = static_cast<int>(pos);
    auto src = sol.centroids.row(order[pos]);
    std::copy(src.begin(), src.end(), out.centroids.row(pos).begin());
  }
  for (int& a : out.assignment) a = relabel[static_cast<std::size_t>(a)];
  return out;
}

/// Maps a pseudo-sample solution back to the original samples.
inline Solution expand_solution(const CollapsedInstance& inst, const Solution& sol) {
  if (sol.assignment.empty()) return sol;
  Solution out = sol;
  out.assignment.assign(inst.total_weight(), -1);
  for (std::size_t s = 0; s < inst.size(); ++s) {
    for (std::size_t member : inst.members(s)) out.assignment.at(member) = sol.assignment[s];
  }
  return out;
}

/// Largest per-sample squared distance in a solution.
inline double per_sample_max_cost(const CollapsedInstance& inst, const Solution& sol) {
  double rho = 0.0;
  for (std::size_t s = 0; s < inst.size(); ++s)
    rho = std::max(rho, squared_distance(inst.point(s), sol.centroids.row(static_cast<std::size_t>(sol.assignment[s]))));
  return rho;
}

struct EngineOptions {
  /// Solve a node exactly when the product of unforced mask sizes is at most this.
  double exact_enumeration_limit = 4096.0;
  /// Record every pruned lower bound in the result (for audits).
  bool record_pruned = false;
};

namespace detail {

struct NodeOrder {
  bool operator()(const SolveNode& a, const SolveNode& b) const {
    if (a.lb != b.lb) return a.lb > b.lb;
    return a.id > b.id;
  }
};

struct NodeOutcome {
  bool closed = false;
  double lb = -kInf;
  std::optional<Solution> improved;
  std::vector<SolveNode> children;
  bool exact = false;
};

inline bool fathomed(double lb, double ub) { return lb >= ub - 1e-11 * (1.0 + std::abs(ub)); }

inline double log_enumeration(const ViableSets& viable) {
  double acc = 0.0;
  for (auto m : viable.mask) acc += std::log(static_cast<double>(std::popcount(m)));
  return acc;
}

class Processor {
 public:
  Processor(const CollapsedInstance& inst, const SolverConfig& config, const EngineOptions& options)
      : inst_(inst), config_(config), options_(options), grouping_(build_grouping(inst, config.group_size_max)) {
    everything_.members.resize(inst.size());
    for (std::size_t s = 0; s < inst.size(); ++s) everything_.members[s] = s;
    everything_ = prepare_group(inst, everything_.members);
  }

  NodeOutcome process(SolveNode node, double ub, const std::optional<Solution>& incumbent) const {
    NodeOutcome out;
    out.lb = node.lb;
    if (config_.symmetry_breaking && !apply_symmetry_breaking(node.region)) return close(out);

    EliminationRule rule;
    rule.incumbent = ub;
    if (config_.paper_rho_rule && incumbent) {
      rule.paper_rho_rule = true;
      rule.rho = per_sample_max_cost(inst_, *incumbent);
    }
    if (determine_samples(node.viable, node.region, inst_, rule) == NodeStatus::Infeasible) return close(out);

    out.lb = std::max(out.lb, lower_bound_basic(inst_, node.region, node.viable));
    if (fathomed(out.lb, ub)) return close(out);

    std::vector<Matrix> candidates;
    if (log_enumeration(node.viable) <= std::log(options_.exact_enumeration_limit)) {
      // Few joint assignments remain: the node optimum is computed exactly.
      auto exact = solve_group_subproblem(inst_, everything_, node.region, node.viable, Matrix(inst_.k(), inst_.dim()));
      out.exact = true;
      if (!exact) return close(out);
      Solution sol{exact->centroids, exact->assignment, 0.0, true};
      sol.objective = recompute_objective(inst_, sol);
      out.lb = std::max(out.lb, exact->value + inst_.constant());
      offer(out, std::move(sol), ub);
      return close(out);
    }

    const MultiplierState* warm = config_.ld_warm_start ? node.multipliers.get() : nullptr;
    auto ld = lower_bound_lagrangian(inst_, node.region, node.viable, grouping_, config_, ub, warm);
    if (!ld) return close(out);
    node.multipliers.reset();
    if (config_.ld_warm_start) node.multipliers = std::make_shared<const MultiplierState>(std::move(ld->best_lambda));
    out.lb = std::max(out.lb, ld->bound);
    candidates = std::move(ld->candidates);
    candidates.push_back(node.region.midpoint());
    if (incumbent) candidates.push_back(node.region.clamp(incumbent->centroids));

    auto found = upper_bound_kcoloring(inst_, candidates);
    if (found.solution) offer(out, polish_lloyd_constrained(inst_, std::move(*found.solution), config_.polish_iterations), ub);

    const double local_ub = out.improved ? std::min(ub, out.improved->objective) : ub;
    if (fathomed(out.lb, local_ub)) return close(out);
    if (is_degenerate(node.region)) {
      // A point region: its cost is fixed by the centroids; keep the bound.
      out.exact = true;
      return close(out);
    }
    node.lb = out.lb;
    auto [left, right] = branch_region(node);
    out.children.push_back(std::move(left));
    out.children.push_back(std::move(right));
    return out;
  }

  SolveNode root() const {
    SolveNode node;
    node.region = root_region(inst_);
    node.viable = ViableSets::full(inst_.size(), inst_.k());
    node.lb = inst_.constant();
    return node;
  }

 private:
  static NodeOutcome& close(NodeOutcome& out) {
    out.closed = true;
    return out;
  }

  static void offer(NodeOutcome& out, Solution sol, double ub) {
    if (sol.objective < ub && (!out.improved || sol.objective < out.improved->objective)) out.improved = std::move(sol);
  }

  const CollapsedInstance& inst_;
  const SolverConfig& config_;
  const EngineOptions& options_;
  Grouping grouping_;
  GroupSpec everything_;
};

}  // namespace detail

/// Best-bound branch-and-bound over centroid boxes.
inline SolveResult solve(const CollapsedInstance& inst, const SolverConfig& config, const ProgressCallback& progress = {},
                         const EngineOptions& options = {}) {
  config.validate();
  if (config.k != inst.k()) throw Error(ErrorCode::InvalidConfig, "config.k differs from instance k");
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  SolveResult result;
  result.stats.threads = config.threads;

  auto finish = [&](SolveStatus status) {
    result.status = status;
    result.rel_gap = relative_gap(result.ub, result.lb);
    result.stats.wall_time_s = elapsed();
    result.stats.time_per_node_s =
        result.stats.nodes_processed ? result.stats.wall_time_s / static_cast<double>(result.stats.nodes_processed) : 0.0;
    result.stats.core_hours = result.stats.wall_time_s * static_cast<double>(config.threads) / 3600.0;
    if (result.collapsed_best.feasible) {
      result.collapsed_best = order_clusters(result.collapsed_best);
      result.best = expand_solution(inst, result.collapsed_best);
    }
    return result;
  };

  const auto cert = check_root_feasibility(inst);
  if (cert.status == RootFeasibility::Infeasible) return finish(SolveStatus::Infeasible);

  std::mutex mutex;
  std::condition_variable wake;
  std::priority_queue<SolveNode, std::vector<SolveNode>, detail::NodeOrder> open;
  std::optional<Solution> incumbent = multi_restart(inst, inst.k(), config.heuristic_restarts, config.seed);
  double ub = incumbent ? incumbent->objective : kInf;
  if (incumbent) {
    *incumbent = polish_lloyd_constrained(inst, std::move(*incumbent), config.polish_iterations);
    ub = incumbent->objective;
    result.stats.ub_history.push_back({elapsed(), ub});
  }

  const detail::Processor processor(inst, config, options);
  std::uint64_t next_id = 0;
  {
    SolveNode root = processor.root();
    root.id = next_id++;
    open.push(std::move(root));
  }

  std::vector<double> in_flight(config.threads, kInf);
  std::size_t active = 0;
  bool stop = false;
  std::optional<SolveStatus> stop_status;
  double last_progress = -kInf;
  double lb_reported = -kInf;

  // Caller holds the lock.
  auto global_lb = [&]() {
    double lb = ub;
    if (!open.empty()) lb = std::min(lb, open.top().lb);
    for (double v : in_flight) lb = std::min(lb, v);
    return lb;
  };

  auto worker = [&](std::size_t slot) {
    std::unique_lock lock(mutex);
    while (true) {
      wake.wait(lock, [&] { return stop || !open.empty() || active == 0; });
      if (stop) return;
      if (open.empty()) {
        // Nothing queued and nobody working: the tree is exhausted.
        if (active == 0) {
          stop = true;
          wake.notify_all();
          return;
        }
        continue;
      }
      SolveNode node = open.top();
      open.pop();
      if (detail::fathomed(node.lb, ub)) {
        ++result.stats.nodes_pruned;
        if (options.record_pruned) result.pruned_lbs.push_back(node.lb);
        continue;
      }
      if (result.stats.nodes_processed >= config.max_nodes) {
        open.push(std::move(node));
        stop_status = SolveStatus::NodeLimit;
        stop = true;
        wake.notify_all();
        return;
      }
      if (elapsed() >= config.time_limit_s) {
        open.push(std::move(node));
        stop_status = SolveStatus::TimeLimit;
        stop = true;
        wake.notify_all();
        return;
      }
      ++active;
      ++result.stats.nodes_processed;
      result.stats.max_depth = std::max(result.stats.max_depth, node.depth);
      in_flight[slot] = node.lb;
      const double ub_snapshot = ub;
      const std::optional<Solution> inc_snapshot = incumbent;
      lock.unlock();

      detail::NodeOutcome outcome = processor.process(std::move(node), ub_snapshot, inc_snapshot);

      lock.lock();
      --active;
      in_flight[slot] = kInf;
      if (outcome.exact) ++result.stats.nodes_exact;
      if (outcome.improved && outcome.improved->objective < ub) {
        ub = outcome.improved->objective;
        incumbent = std::move(outcome.improved);
        result.stats.ub_history.push_back({elapsed(), ub});
      }
      if (outcome.closed && options.record_pruned) result.pruned_lbs.push_back(outcome.lb);
      for (auto& child : outcome.children) {
        if (detail::fathomed(child.lb, ub)) {
          ++result.stats.nodes_pruned;
          if (options.record_pruned) result.pruned_lbs.push_back(child.lb);
          continue;
        }
        child.id = next_id++;
        open.push(std::move(child));
      }
      const double lb_now = std::max(lb_reported, global_lb());
      if (lb_now > lb_reported) {
        lb_reported = lb_now;
        result.stats.lb_history.push_back({elapsed(), lb_now});
      }
      const double now = elapsed();
      if (progress && now - last_progress >= config.progress_interval_s) {
        last_progress = now;
        progress({now, lb_reported, ub, relative_gap(ub, lb_reported), result.stats.nodes_processed, open.size()});
      }
      if (!open.empty() && relative_gap(ub, lb_reported) <= config.rel_gap_tol) {
        stop_status = SolveStatus::GapLimit;
        stop = true;
      }
      wake.notify_all();
    }
  };

  if (config.threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < config.threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  result.ub = ub;
  if (incumbent) result.collapsed_best = *incumbent;
  result.lb = open.empty() ? ub : std::max(lb_reported, global_lb());
  result.lb = std::min(result.lb, result.ub);
  if (progress) progress({elapsed(), result.lb, ub, relative_gap(ub, result.lb), result.stats.nodes_processed, open.size()});

  if (!incumbent && open.empty()) return finish(SolveStatus::Infeasible);
  if (stop_status) return finish(*stop_status);
  return finish(SolveStatus::Optimal);
}

/// Collapses must-link components, then solves. A CL pair inside an ML
/// component yields an Infeasible result rather than an exception.
inline SolveResult solve(const Dataset& data, const ConstraintSet& cons, const SolverConfig& config,
                         const ProgressCallback& progress = {}, const EngineOptions& options = {}) {
  CollapsedInstance inst;
  try {
    inst = collapse(data, cons, config.k);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RootInfeasible) throw;
    SolveResult infeasible;
    infeasible.status = SolveStatus::Infeasible;
    infeasible.stats.threads = config.threads;
    return infeasible;
  }
  return solve(inst, config, progress, options);
}

}  // namespace pcmssc
