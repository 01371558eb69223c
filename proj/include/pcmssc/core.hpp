#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcmssc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
  IndexOutOfRange,
  DuplicatePair,
  MlClConflict,
  NonFiniteCoordinate,
  ShapeMismatch,
  RootInfeasible,
  PreconditionViolated,
  TooLarge,
  ParseError,
  RaggedRows,
  Unsatisfiable,
  InvalidConfig,
  DegenerateRegion,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DuplicatePair: return "DuplicatePair";
    case ErrorCode::MlClConflict: return "MlClConflict";
    case ErrorCode::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::RootInfeasible: return "RootInfeasible";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::Unsatisfiable: return "Unsatisfiable";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DegenerateRegion: return "DegenerateRegion";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, long line = -1)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  /// 1-based input line for parse errors, -1 otherwise.
  long line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  long line_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

struct Dataset {
  Matrix points;
  std::optional<std::vector<int>> labels;

  std::size_t n() const noexcept { return points.rows(); }
  std::size_t d() const noexcept { return points.cols(); }
};

using IndexPair = std::pair<std::size_t, std::size_t>;

struct ConstraintSet {
  std::vector<IndexPair> ml_pairs;
  std::vector<IndexPair> cl_pairs;

  /// Orders every pair as (min, max), sorts and removes duplicates.
  /// Self-pairs are kept so that validation can report them.
  void normalize() {
    auto fix = [](std::vector<IndexPair>& pairs) {
      for (auto& [a, b] : pairs) {
        if (a > b) std::swap(a, b);
      }
      std::sort(pairs.begin(), pairs.end());
      pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    };
    fix(ml_pairs);
    fix(cl_pairs);
  }

  bool empty() const noexcept { return ml_pairs.empty() && cl_pairs.empty(); }
};

struct WeightedPoint {
  std::vector<double> coords;
  std::size_t weight = 0;
  std::vector<std::size_t> members;
};

/// Weighted pseudo-samples with cannot-link edges and the additive variance
/// constant left over from must-link collapse. Immutable once built.
class CollapsedInstance {
 public:
  CollapsedInstance() = default;

  CollapsedInstance(std::vector<WeightedPoint> samples, std::vector<IndexPair> cl_edges, double constant,
                    std::size_t k)
      : cl_edges_(std::move(cl_edges)), constant_(constant), k_(k) {
    if (samples.empty()) throw Error(ErrorCode::ShapeMismatch, "instance needs at least one sample");
    if (k_ == 0 || k_ > 64) throw Error(ErrorCode::InvalidConfig, "k must lie in [1, 64]");
    if (!(constant_ >= 0.0) || !std::isfinite(constant_))
      throw Error(ErrorCode::PreconditionViolated, "additive constant must be finite and nonnegative");
    const std::size_t d = samples.front().coords.size();
    if (d == 0) throw Error(ErrorCode::ShapeMismatch, "samples need at least one coordinate");
    points_ = Matrix(samples.size(), d);
    weights_.reserve(samples.size());
    members_.reserve(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
      auto& sample = samples[s];
      if (sample.coords.size() != d) throw Error(ErrorCode::ShapeMismatch, "ragged pseudo-sample coordinates");
      if (sample.weight == 0) throw Error(ErrorCode::PreconditionViolated, "pseudo-sample weight must be positive");
      if (!sample.members.empty() && sample.members.size() != sample.weight)
        throw Error(ErrorCode::PreconditionViolated, "weight must equal member count");
      std::copy(sample.coords.begin(), sample.coords.end(), points_.row(s).begin());
      weights_.push_back(static_cast<double>(sample.weight));
      total_weight_ += sample.weight;
      members_.push_back(std::move(sample.members));
    }
    adjacency_.assign(samples.size(), {});
    for (auto& [a, b] : cl_edges_) {
      if (a > b) std::swap(a, b);
      if (a == b) throw Error(ErrorCode::RootInfeasible, "cannot-link inside one must-link component");
      if (b >= samples.size()) throw Error(ErrorCode::IndexOutOfRange, "cannot-link edge index");
    }
    std::sort(cl_edges_.begin(), cl_edges_.end());
    cl_edges_.erase(std::unique(cl_edges_.begin(), cl_edges_.end()), cl_edges_.end());
    for (const auto& [a, b] : cl_edges_) {
      adjacency_[a].push_back(b);
      adjacency_[b].push_back(a);
    }
    coloring_order_.resize(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) coloring_order_[s] = s;
    std::stable_sort(coloring_order_.begin(), coloring_order_.end(), [&](std::size_t a, std::size_t b) {
      if (adjacency_[a].size() != adjacency_[b].size()) return adjacency_[a].size() > adjacency_[b].size();
      if (weights_[a] != weights_[b]) return weights_[a] > weights_[b];
      return a < b;
    });
  }

  std::size_t size() const noexcept { return points_.rows(); }
  std::size_t dim() const noexcept { return points_.cols(); }
  std::size_t k() const noexcept { return k_; }
  double constant() const noexcept { return constant_; }
  std::size_t total_weight() const noexcept { return total_weight_; }

  const Matrix& points() const noexcept { return points_; }
  std::span<const double> point(std::size_t s) const { return points_.row(s); }
  double weight(std::size_t s) const { return weights_[s]; }
  const std::vector<std::size_t>& members(std::size_t s) const { return members_[s]; }

  const std::vector<IndexPair>& cl_edges() const noexcept { return cl_edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t s) const { return adjacency_[s]; }
  bool has_cl() const noexcept { return !cl_edges_.empty(); }

  /// Samples sorted by CL degree desc, weight desc, index asc.
  const std::vector<std::size_t>& coloring_order() const noexcept { return coloring_order_; }

  WeightedPoint sample(std::size_t s) const {
    auto row = points_.row(s);
    return {std::vector<double>(row.begin(), row.end()), static_cast<std::size_t>(weights_[s]), members_[s]};
  }

  /// Same samples and edges with a different cluster count.
  CollapsedInstance with_k(std::size_t k) const {
    CollapsedInstance copy = *this;
    if (k == 0 || k > 64) throw Error(ErrorCode::InvalidConfig, "k must lie in [1, 64]");
    copy.k_ = k;
    return copy;
  }

 private:
  Matrix points_;
  std::vector<double> weights_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<IndexPair> cl_edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<std::size_t> coloring_order_;
  double constant_ = 0.0;
  std::size_t k_ = 1;
  std::size_t total_weight_ = 0;
};

struct BoxView {
  std::span<const double> lower;
  std::span<const double> upper;
};

/// K axis-aligned boxes, one per cluster centroid.
struct CentroidRegion {
  Matrix lower;
  Matrix upper;

  CentroidRegion() = default;
  CentroidRegion(std::size_t k, std::size_t d) : lower(k, d), upper(k, d) {}

  std::size_t k() const noexcept { return lower.rows(); }
  std::size_t dim() const noexcept { return lower.cols(); }
  BoxView box(std::size_t c) const { return {lower.row(c), upper.row(c)}; }

  bool valid() const {
    for (std::size_t i = 0; i < lower.values().size(); ++i) {
      const double l = lower.values()[i];
      const double u = upper.values()[i];
      if (!std::isfinite(l) || !std::isfinite(u) || l > u) return false;
    }
    return true;
  }

  /// Largest edge length over all boxes.
  double diameter() const {
    double best = 0.0;
    for (std::size_t i = 0; i < lower.values().size(); ++i)
      best = std::max(best, upper.values()[i] - lower.values()[i]);
    return best;
  }

  bool contains(const Matrix& centroids, double tol = 0.0) const {
    for (std::size_t i = 0; i < lower.values().size(); ++i) {
      const double v = centroids.values()[i];
      if (v < lower.values()[i] - tol || v > upper.values()[i] + tol) return false;
    }
    return true;
  }

  /// Clamps every centroid coordinate into its box.
  Matrix clamp(const Matrix& centroids) const {
    Matrix out = centroids;
    for (std::size_t i = 0; i < out.values().size(); ++i)
      out.values()[i] = std::clamp(out.values()[i], lower.values()[i], upper.values()[i]);
    return out;
  }

  Matrix midpoint() const {
    Matrix out(k(), dim());
    for (std::size_t i = 0; i < out.values().size(); ++i)
      out.values()[i] = 0.5 * (lower.values()[i] + upper.values()[i]);
    return out;
  }
};

struct Solution {
  Matrix centroids;
  std::vector<int> assignment;
  double objective = kInf;
  bool feasible = false;
};

struct SolverConfig {
  std::size_t k = 2;
  double rel_gap_tol = 1e-3;
  double time_limit_s = kInf;
  std::size_t max_nodes = std::numeric_limits<std::size_t>::max();
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  std::size_t group_size_max = 4;
  std::size_t ld_iterations = 20;
  double ld_step0 = 1.0;
  /// Start each child's subgradient ascent from the parent's best multipliers
  /// instead of zero.
  bool ld_warm_start = false;
  std::size_t heuristic_restarts = 100;
  bool paper_rho_rule = false;
  bool symmetry_breaking = true;
  /// Pull samples with a single viable cluster out of their root group and
  /// bound them jointly, one centroid per cluster.
  bool aggregate_forced = true;
  std::size_t polish_iterations = 20;
  double progress_interval_s = 1.0;

  void validate() const {
    if (k == 0 || k > 64) throw Error(ErrorCode::InvalidConfig, "k must lie in [1, 64]");
    if (!(rel_gap_tol > 0.0 && rel_gap_tol <= 1.0))
      throw Error(ErrorCode::InvalidConfig, "rel_gap_tol must lie in (0, 1]");
    if (!(time_limit_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "time limit must be positive");
    if (threads == 0) throw Error(ErrorCode::InvalidConfig, "threads must be positive");
    if (group_size_max == 0) throw Error(ErrorCode::InvalidConfig, "group_size_max must be positive");
    if (std::pow(static_cast<double>(k), static_cast<double>(group_size_max)) > 1e6)
      throw Error(ErrorCode::InvalidConfig, "k^group_size_max exceeds 10^6 joint assignments");
    if (!(ld_step0 > 0.0)) throw Error(ErrorCode::InvalidConfig, "ld_step0 must be positive");
    if (heuristic_restarts == 0) throw Error(ErrorCode::InvalidConfig, "heuristic_restarts must be positive");
  }
};

/// Throws on the first violated invariant of (data, cons, k). Constraint
/// pairs are expected in normalized form (i < j, sorted).
inline void validate_instance(const Dataset& data, const ConstraintSet& cons, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be at least 1");
  if (data.n() == 0 || data.d() == 0) throw Error(ErrorCode::ShapeMismatch, "dataset must be nonempty");
  for (std::size_t i = 0; i < data.points.values().size(); ++i) {
    if (!std::isfinite(data.points.values()[i]))
      throw Error(ErrorCode::NonFiniteCoordinate, "row " + std::to_string(i / data.d()));
  }
  if (data.labels && data.labels->size() != data.n())
    throw Error(ErrorCode::ShapeMismatch, "label count differs from row count");

  auto sorted_pairs = [&](const std::vector<IndexPair>& pairs, const char* kind) {
    std::vector<IndexPair> out;
    out.reserve(pairs.size());
    for (auto [a, b] : pairs) {
      if (a >= data.n() || b >= data.n())
        throw Error(ErrorCode::IndexOutOfRange, std::string(kind) + " pair index beyond n");
      if (a == b) throw Error(ErrorCode::IndexOutOfRange, std::string(kind) + " self-pair (" + std::to_string(a) + ")");
      out.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(out.begin(), out.end());
    if (std::adjacent_find(out.begin(), out.end()) != out.end())
      throw Error(ErrorCode::DuplicatePair, std::string(kind) + " pair listed twice");
    return out;
  };
  const auto ml = sorted_pairs(cons.ml_pairs, "ML");
  const auto cl = sorted_pairs(cons.cl_pairs, "CL");
  std::vector<IndexPair> both;
  std::set_intersection(ml.begin(), ml.end(), cl.begin(), cl.end(), std::back_inserter(both));
  if (!both.empty())
    throw Error(ErrorCode::MlClConflict,
                "pair (" + std::to_string(both[0].first) + "," + std::to_string(both[0].second) + ")");
}

/// Weighted SSE of the solution's assignment plus the instance constant.
inline double recompute_objective(const CollapsedInstance& inst, const Solution& sol) {
  if (sol.assignment.size() != inst.size())
    throw Error(ErrorCode::ShapeMismatch, "assignment length differs from sample count");
  if (sol.centroids.rows() != inst.k() || sol.centroids.cols() != inst.dim())
    throw Error(ErrorCode::ShapeMismatch, "centroid matrix shape");
  double sse = 0.0;
  for (std::size_t s = 0; s < inst.size(); ++s) {
    const int c = sol.assignment[s];
    if (c < 0 || static_cast<std::size_t>(c) >= inst.k())
      throw Error(ErrorCode::ShapeMismatch, "cluster index out of range");
    sse += inst.weight(s) * squared_distance(inst.point(s), sol.centroids.row(static_cast<std::size_t>(c)));
  }
  return sse + inst.constant();
}

/// True when no cannot-link edge joins two samples of one cluster.
inline bool cl_feasible(const CollapsedInstance& inst, std::span<const int> assignment) {
  for (const auto& [a, b] : inst.cl_edges()) {
    if (assignment[a] == assignment[b]) return false;
  }
  return true;
}

/// Plain SSE of raw points against centroids under an assignment.
inline double sse(const Dataset& data, const Matrix& centroids, std::span<const int> assignment) {
  if (assignment.size() != data.n()) throw Error(ErrorCode::ShapeMismatch, "assignment length");
  double acc = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i)
    acc += squared_distance(data.points.row(i), centroids.row(static_cast<std::size_t>(assignment[i])));
  return acc;
}

/// Every ML pair shares a label and every CL pair does not.
inline bool satisfies(const ConstraintSet& cons, std::span<const int> assignment) {
  for (const auto& [a, b] : cons.ml_pairs)
    if (assignment[a] != assignment[b]) return false;
  for (const auto& [a, b] : cons.cl_pairs)
    if (assignment[a] == assignment[b]) return false;
  return true;
}

/// Weighted means of each nonempty cluster; empty clusters keep `fallback`.
inline Matrix weighted_means(const CollapsedInstance& inst, std::span<const int> assignment, const Matrix& fallback) {
  Matrix sums(inst.k(), inst.dim());
  std::vector<double> mass(inst.k(), 0.0);
  for (std::size_t s = 0; s < inst.size(); ++s) {
    const auto c = static_cast<std::size_t>(assignment[s]);
    const double w = inst.weight(s);
    mass[c] += w;
    auto x = inst.point(s);
    auto row = sums.row(c);
    for (std::size_t i = 0; i < x.size(); ++i) row[i] += w * x[i];
  }
  Matrix out = fallback;
  for (std::size_t c = 0; c < inst.k(); ++c) {
    if (mass[c] <= 0.0) continue;
    for (std::size_t i = 0; i < inst.dim(); ++i) out(c, i) = sums(c, i) / mass[c];
  }
  return out;
}

}  // namespace pcmssc
