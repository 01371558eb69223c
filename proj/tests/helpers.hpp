#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pcmssc/pcmssc.hpp"

namespace pcmssc::testing {

inline Dataset dataset(const std::vector<std::vector<double>>& rows) {
  Dataset data;
  data.points = Matrix(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) data.points(i, j) = rows[i][j];
  return data;
}

inline CollapsedInstance instance(const std::vector<std::vector<double>>& rows, std::vector<std::size_t> weights,
                                  std::vector<IndexPair> cl, double constant, std::size_t k) {
  std::vector<WeightedPoint> pts;
  std::size_t next = 0;
  for (std::size_t s = 0; s < rows.size(); ++s) {
    const std::size_t w = weights.empty() ? 1 : weights[s];
    std::vector<std::size_t> members(w);
    for (auto& m : members) m = next++;
    pts.push_back({rows[s], w, std::move(members)});
  }
  return CollapsedInstance(std::move(pts), std::move(cl), constant, k);
}

inline CentroidRegion region(const std::vector<std::pair<std::vector<double>, std::vector<double>>>& boxes) {
  CentroidRegion r(boxes.size(), boxes[0].first.size());
  for (std::size_t c = 0; c < boxes.size(); ++c)
    for (std::size_t i = 0; i < boxes[c].first.size(); ++i) {
      r.lower(c, i) = boxes[c].first[i];
      r.upper(c, i) = boxes[c].second[i];
    }
  return r;
}

inline Matrix matrix(const std::vector<std::vector<double>>& rows) { return dataset(rows).points; }

/// The four-point instance with one cannot-link pair used throughout.
inline CollapsedInstance f2_instance() { return instance({{0, 0}, {0, 1}, {10, 0}, {10, 1}}, {}, {{0, 1}}, 0.0, 2); }

struct RandomSpec {
  std::size_t n_min = 4;
  std::size_t n_max = 9;
  std::size_t d = 2;
  std::size_t k = 2;
  std::size_t max_ml = 2;
  std::size_t max_cl = 2;
  double spread = 5.0;
};

/// Small random dataset with a handful of random ML/CL pairs (no pair in both).
inline std::pair<Dataset, ConstraintSet> random_problem(std::mt19937_64& rng, const RandomSpec& spec) {
  std::uniform_int_distribution<std::size_t> n_dist(spec.n_min, spec.n_max);
  const std::size_t n = n_dist(rng);
  std::uniform_real_distribution<double> coord(-spec.spread, spec.spread);
  Dataset data;
  data.points = Matrix(n, spec.d);
  for (double& v : data.points.values()) v = coord(rng);
  ConstraintSet cons;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<std::size_t> ml_count(0, spec.max_ml);
  std::uniform_int_distribution<std::size_t> cl_count(0, spec.max_cl);
  const std::size_t n_ml = ml_count(rng);
  const std::size_t n_cl = cl_count(rng);
  auto draw = [&]() {
    std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    return IndexPair{std::min(a, b), std::max(a, b)};
  };
  for (std::size_t i = 0; i < n_ml; ++i) cons.ml_pairs.push_back(draw());
  for (std::size_t i = 0; i < n_cl; ++i) {
    const auto p = draw();
    if (std::find(cons.ml_pairs.begin(), cons.ml_pairs.end(), p) == cons.ml_pairs.end()) cons.cl_pairs.push_back(p);
  }
  cons.normalize();
  return {std::move(data), std::move(cons)};
}

/// Random sub-box of the root region containing `inside` when given.
inline CentroidRegion random_subregion(const CentroidRegion& root, std::mt19937_64& rng) {
  CentroidRegion r = root;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < r.lower.values().size(); ++i) {
    const double lo = root.lower.values()[i];
    const double hi = root.upper.values()[i];
    double a = lo + (hi - lo) * u(rng);
    double b = lo + (hi - lo) * u(rng);
    if (a > b) std::swap(a, b);
    r.lower.values()[i] = a;
    r.upper.values()[i] = b;
  }
  return r;
}

/// Uniform point of a region.
inline Matrix random_point(const CentroidRegion& r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix mu = r.lower;
  for (std::size_t i = 0; i < mu.values().size(); ++i)
    mu.values()[i] = r.lower.values()[i] + (r.upper.values()[i] - r.lower.values()[i]) * u(rng);
  return mu;
}

/// Constrained cost of fixed centroids: min over CL-proper labelings respecting
/// the masks of sum w_s |x_s - mu_a(s)|^2, plus the constant. Exhaustive.
inline double fixed_centroid_cost(const CollapsedInstance& inst, const Matrix& mu,
                                  const std::optional<ViableSets>& viable = {}) {
  const std::size_t n = inst.size();
  const std::size_t k = inst.k();
  double best = kInf;
  std::vector<int> a(n, 0);
  while (true) {
    bool ok = true;
    for (const auto& [u, v] : inst.cl_edges()) ok = ok && a[u] != a[v];
    if (viable)
      for (std::size_t s = 0; s < n; ++s) ok = ok && has_bit(viable->mask[s], static_cast<std::size_t>(a[s]));
    if (ok) {
      double cost = inst.constant();
      for (std::size_t s = 0; s < n; ++s)
        cost += inst.weight(s) * squared_distance(inst.point(s), mu.row(static_cast<std::size_t>(a[s])));
      best = std::min(best, cost);
    }
    std::size_t pos = 0;
    while (pos < n) {
      if (++a[pos] < static_cast<int>(k)) break;
      a[pos] = 0;
      ++pos;
    }
    if (pos == n) break;
  }
  return best;
}

}  // namespace pcmssc::testing
