#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "pcmssc/core.hpp"

namespace pcmssc {

struct MlComponents {
  std::vector<std::size_t> component_id;
  /// Members of each component in ascending index order; components are
  /// ordered by their smallest member.
  std::vector<std::vector<std::size_t>> component_members;
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned char> rank_;
};

inline MlComponents build_ml_components(std::size_t n, const std::vector<IndexPair>& ml_pairs) {
  DisjointSets sets(n);
  for (const auto& [a, b] : ml_pairs) {
    if (a >= n || b >= n) throw Error(ErrorCode::IndexOutOfRange, "must-link index beyond n");
    sets.unite(a, b);
  }
  MlComponents out;
  out.component_id.assign(n, 0);
  std::vector<std::size_t> root_to_component(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (root_to_component[root] == n) {
      root_to_component[root] = out.component_members.size();
      out.component_members.emplace_back();
    }
    const std::size_t c = root_to_component[root];
    out.component_id[i] = c;
    out.component_members[c].push_back(i);
  }
  return out;
}

struct CollapsedSamples {
  std::vector<WeightedPoint> samples;
  double constant = 0.0;
};

/// One pseudo-sample per component at the member mean, weighted by member
/// count. The constant is the summed squared deviation of members from their
/// component mean.
inline CollapsedSamples collapse_components(const Dataset& data, const MlComponents& comps) {
  CollapsedSamples out;
  out.samples.reserve(comps.component_members.size());
  const std::size_t d = data.d();
  for (const auto& members : comps.component_members) {
    WeightedPoint p;
    p.coords.assign(d, 0.0);
    p.weight = members.size();
    p.members = members;
    for (std::size_t i : members) {
      auto x = data.points.row(i);
      for (std::size_t j = 0; j < d; ++j) p.coords[j] += x[j];
    }
    for (double& v : p.coords) v /= static_cast<double>(members.size());
    if (members.size() > 1) {
      for (std::size_t i : members) out.constant += squared_distance(data.points.row(i), p.coords);
    }
    out.samples.push_back(std::move(p));
  }
  return out;
}

/// Maps CL pairs onto component indices. Throws RootInfeasible when a pair
/// lies inside one component.
inline std::vector<IndexPair> inherit_cl_edges(const MlComponents& comps, const std::vector<IndexPair>& cl_pairs) {
  std::vector<IndexPair> edges;
  edges.reserve(cl_pairs.size());
  for (const auto& [a, b] : cl_pairs) {
    if (a >= comps.component_id.size() || b >= comps.component_id.size())
      throw Error(ErrorCode::IndexOutOfRange, "cannot-link index beyond n");
    std::size_t ca = comps.component_id[a];
    std::size_t cb = comps.component_id[b];
    if (ca == cb)
      throw Error(ErrorCode::RootInfeasible, "cannot-link (" + std::to_string(a) + "," + std::to_string(b) +
                                                 ") joins samples of one must-link component");
    if (ca > cb) std::swap(ca, cb);
    edges.emplace_back(ca, cb);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

enum class RootFeasibility { Feasible, Infeasible, Unknown };

struct FeasibilityCertificate {
  RootFeasibility status = RootFeasibility::Feasible;
  /// Pseudo-sample indices that cannot be properly K-coloured: a (K+1)-clique
  /// when one exists, otherwise the offending CL component.
  std::vector<std::size_t> witness;
  std::string reason;
};

namespace detail {

inline bool greedy_colorable(const CollapsedInstance& inst, const std::vector<std::size_t>& vertices, std::size_t k) {
  std::vector<std::size_t> order = vertices;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return inst.neighbors(a).size() > inst.neighbors(b).size(); });
  std::vector<int> color(inst.size(), -1);
  for (std::size_t v : order) {
    std::uint64_t used = 0;
    for (std::size_t u : inst.neighbors(v))
      if (color[u] >= 0) used |= std::uint64_t{1} << color[u];
    int c = 0;
    while (c < static_cast<int>(k) && (used >> c & 1U)) ++c;
    if (c == static_cast<int>(k)) return false;
    color[v] = c;
  }
  return true;
}

inline bool exact_colorable(const CollapsedInstance& inst, const std::vector<std::size_t>& vertices, std::size_t k) {
  std::vector<int> color(inst.size(), -1);
  std::vector<std::size_t> order = vertices;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return inst.neighbors(a).size() > inst.neighbors(b).size(); });
  std::function<bool(std::size_t, int)> assign = [&](std::size_t pos, int colors_used) -> bool {
    if (pos == order.size()) return true;
    const std::size_t v = order[pos];
    std::uint64_t used = 0;
    for (std::size_t u : inst.neighbors(v))
      if (color[u] >= 0) used |= std::uint64_t{1} << color[u];
    // Colours are interchangeable: never open more than one new colour.
    const int limit = std::min(static_cast<int>(k), colors_used + 1);
    for (int c = 0; c < limit; ++c) {
      if (used >> c & 1U) continue;
      color[v] = c;
      if (assign(pos + 1, std::max(colors_used, c + 1))) return true;
    }
    color[v] = -1;
    return false;
  };
  return assign(0, 0);
}

inline std::vector<std::size_t> find_clique(const CollapsedInstance& inst, const std::vector<std::size_t>& vertices,
                                            std::size_t size) {
  std::vector<std::size_t> current;
  auto adjacent = [&](std::size_t a, std::size_t b) {
    const auto& nb = inst.neighbors(a);
    return std::find(nb.begin(), nb.end(), b) != nb.end();
  };
  std::function<bool(std::size_t)> extend = [&](std::size_t start) -> bool {
    if (current.size() == size) return true;
    for (std::size_t p = start; p < vertices.size(); ++p) {
      const std::size_t v = vertices[p];
      if (!std::all_of(current.begin(), current.end(), [&](std::size_t u) { return adjacent(u, v); })) continue;
      current.push_back(v);
      if (extend(p + 1)) return true;
      current.pop_back();
    }
    return false;
  };
  if (extend(0)) return current;
  return {};
}

}  // namespace detail

/// Best-effort K-colourability test of the CL graph, per connected component:
/// greedy largest-degree-first first, exact backtracking for components of at
/// most 20 vertices, Unknown otherwise.
inline FeasibilityCertificate check_root_feasibility(const CollapsedInstance& inst, std::size_t exact_limit = 20) {
  FeasibilityCertificate cert;
  const std::size_t k = inst.k();
  std::vector<char> seen(inst.size(), 0);
  for (std::size_t start = 0; start < inst.size(); ++start) {
    if (seen[start] || inst.neighbors(start).empty()) continue;
    std::vector<std::size_t> component{start};
    seen[start] = 1;
    for (std::size_t head = 0; head < component.size(); ++head) {
      for (std::size_t u : inst.neighbors(component[head])) {
        if (!seen[u]) {
          seen[u] = 1;
          component.push_back(u);
        }
      }
    }
    std::sort(component.begin(), component.end());
    if (detail::greedy_colorable(inst, component, k)) continue;
    if (component.size() > exact_limit) {
      cert.status = RootFeasibility::Unknown;
      cert.reason = "greedy colouring failed on a CL component too large for the exact check";
      continue;
    }
    if (detail::exact_colorable(inst, component, k)) continue;
    cert.status = RootFeasibility::Infeasible;
    cert.witness = detail::find_clique(inst, component, k + 1);
    if (cert.witness.empty()) {
      cert.witness = component;
      cert.reason = "CL component is not " + std::to_string(k) + "-colourable";
    } else {
      cert.reason = std::to_string(k + 1) + "-clique in the CL graph";
    }
    return cert;
  }
  return cert;
}

/// Validates the raw instance and collapses must-link components.
/// Throws RootInfeasible when a CL pair falls inside an ML component.
inline CollapsedInstance collapse(const Dataset& data, ConstraintSet cons, std::size_t k) {
  cons.normalize();
  validate_instance(data, cons, k);
  const MlComponents comps = build_ml_components(data.n(), cons.ml_pairs);
  auto collapsed = collapse_components(data, comps);
  auto edges = inherit_cl_edges(comps, cons.cl_pairs);
  return CollapsedInstance(std::move(collapsed.samples), std::move(edges), collapsed.constant, k);
}

}  // namespace pcmssc
