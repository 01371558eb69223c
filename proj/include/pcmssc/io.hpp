#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pcmssc/core.hpp"
#include "pcmssc/engine.hpp"

namespace pcmssc {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline bool parse_double(std::string_view field, double& out) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

template <typename Int>
bool parse_int(std::string_view field, Int& out) {
  if (field.empty()) return false;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

}  // namespace detail

/// Comma-separated numeric rows. A non-numeric first row is a header. With
/// labels_last the final column holds integer class labels.
inline Dataset parse_csv(std::istream& in, bool labels_last = false) {
  Dataset data;
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  long line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    const auto fields = detail::split(view, ',');
    if (first) {
      first = false;
      double probe = 0.0;
      bool numeric = true;
      for (auto f : fields) numeric = numeric && detail::parse_double(f, probe);
      if (!numeric) continue;
    }
    if (cols == 0) {
      cols = fields.size();
      if (cols < (labels_last ? 2U : 1U)) throw Error(ErrorCode::ParseError, "too few columns", line_no);
    } else if (fields.size() != cols) {
      throw Error(ErrorCode::RaggedRows,
                  "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(cols),
                  line_no);
    }
    const std::size_t coords = labels_last ? cols - 1 : cols;
    for (std::size_t j = 0; j < coords; ++j) {
      double v = 0.0;
      if (!detail::parse_double(fields[j], v))
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": '" + std::string(fields[j]) + "'",
                    line_no);
      if (!std::isfinite(v))
        throw Error(ErrorCode::NonFiniteCoordinate, "line " + std::to_string(line_no), line_no);
      values.push_back(v);
    }
    if (labels_last) {
      int label = 0;
      if (!detail::parse_int(fields.back(), label))
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": label '" +
                                               std::string(fields.back()) + "' is not an integer",
                    line_no);
      labels.push_back(label);
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::ParseError, "no data rows");
  const std::size_t d = labels_last ? cols - 1 : cols;
  data.points = Matrix(rows, d);
  data.points.values() = std::move(values);
  if (labels_last) data.labels = std::move(labels);
  return data;
}

inline Dataset load_csv(const std::string& path, bool labels_last = false) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return parse_csv(in, labels_last);
}

/// Lines `ML i j` / `CL i j`; `#` starts a comment. Indices are 0-based.
inline ConstraintSet parse_constraints(std::istream& in, std::size_t n) {
  ConstraintSet cons;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    std::istringstream fields{std::string(view)};
    std::string kind;
    if (!(fields >> kind)) continue;
    std::string a_text;
    std::string b_text;
    std::string extra;
    std::size_t a = 0;
    std::size_t b = 0;
    if (!(fields >> a_text >> b_text) || (fields >> extra) || !detail::parse_int(a_text, a) ||
        !detail::parse_int(b_text, b))
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected '<ML|CL> i j'", line_no);
    if (a >= n || b >= n)
      throw Error(ErrorCode::IndexOutOfRange,
                  "line " + std::to_string(line_no) + ": index beyond n=" + std::to_string(n), line_no);
    if (a == b) throw Error(ErrorCode::IndexOutOfRange, "line " + std::to_string(line_no) + ": self-pair", line_no);
    if (kind == "ML" || kind == "ml") {
      cons.ml_pairs.emplace_back(a, b);
    } else if (kind == "CL" || kind == "cl") {
      cons.cl_pairs.emplace_back(a, b);
    } else {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unknown kind '" + kind + "'", line_no);
    }
  }
  cons.normalize();
  std::vector<IndexPair> both;
  std::set_intersection(cons.ml_pairs.begin(), cons.ml_pairs.end(), cons.cl_pairs.begin(), cons.cl_pairs.end(),
                        std::back_inserter(both));
  if (!both.empty())
    throw Error(ErrorCode::MlClConflict,
                "pair (" + std::to_string(both[0].first) + "," + std::to_string(both[0].second) + ")");
  return cons;
}

inline ConstraintSet load_constraints(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return parse_constraints(in, n);
}

inline void write_constraints(std::ostream& out, const ConstraintSet& cons) {
  for (const auto& [a, b] : cons.ml_pairs) out << "ML " << a << ' ' << b << '\n';
  for (const auto& [a, b] : cons.cl_pairs) out << "CL " << a << ' ' << b << '\n';
}

inline void write_csv(std::ostream& out, const Dataset& data, bool with_labels) {
  out.precision(17);
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.d(); ++j) {
      if (j) out << ',';
      out << data.points(i, j);
    }
    if (with_labels && data.labels) out << ',' << (*data.labels)[i];
    out << '\n';
  }
}

inline std::vector<int> parse_labels(std::istream& in) {
  std::vector<int> labels;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    int v = 0;
    if (!detail::parse_int(view, v)) {
      if (labels.empty() && line_no == 1) continue;
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": label is not an integer", line_no);
    }
    labels.push_back(v);
  }
  return labels;
}

/// Isotropic unit-variance Gaussian blobs; means uniform in [-spread, spread]^d.
/// Blob sizes are n / k_true with the remainder going to the last blob.
inline Dataset generate_synthetic(std::size_t n, std::size_t d, std::size_t k_true, std::uint64_t seed,
                                  double spread = 10.0) {
  if (k_true == 0 || n < k_true) throw Error(ErrorCode::InvalidConfig, "need n >= k_true >= 1");
  if (d == 0) throw Error(ErrorCode::InvalidConfig, "d must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-spread, spread);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix means(k_true, d);
  for (double& v : means.values()) v = uniform(rng);
  Dataset data;
  data.points = Matrix(n, d);
  std::vector<int> labels(n);
  const std::size_t per = n / k_true;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t blob = std::min(i / per, k_true - 1);
    labels[i] = static_cast<int>(blob);
    for (std::size_t j = 0; j < d; ++j) data.points(i, j) = means(blob, j) + normal(rng);
  }
  data.labels = std::move(labels);
  return data;
}

/// Random-pair sampling: uniform pairs become ML when labels agree and CL when
/// they differ, until both counts are met. Pairs of a kind already satisfied
/// are discarded and redrawn.
inline ConstraintSet generate_constraints(const std::vector<int>& labels, std::size_t count_ml, std::size_t count_cl,
                                          std::uint64_t seed) {
  const std::size_t n = labels.size();
  std::map<int, std::size_t> class_sizes;
  for (int l : labels) ++class_sizes[l];
  double same = 0.0;
  for (const auto& [label, size] : class_sizes) same += 0.5 * static_cast<double>(size) * static_cast<double>(size - 1);
  const double all = 0.5 * static_cast<double>(n) * static_cast<double>(n > 0 ? n - 1 : 0);
  if (static_cast<double>(count_ml) > same)
    throw Error(ErrorCode::Unsatisfiable, "not enough same-label pairs for " + std::to_string(count_ml) + " ML");
  if (static_cast<double>(count_cl) > all - same)
    throw Error(ErrorCode::Unsatisfiable, "not enough cross-label pairs for " + std::to_string(count_cl) + " CL");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::set<IndexPair> ml;
  std::set<IndexPair> cl;
  ConstraintSet cons;
  while (ml.size() < count_ml || cl.size() < count_cl) {
    std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (labels[a] == labels[b]) {
      if (ml.size() < count_ml && ml.insert({a, b}).second) cons.ml_pairs.emplace_back(a, b);
    } else {
      if (cl.size() < count_cl && cl.insert({a, b}).second) cons.cl_pairs.emplace_back(a, b);
    }
  }
  return cons;
}

struct ClusteringMetrics {
  double ari = 0.0;
  double nmi = 0.0;
  double purity = 0.0;
};

/// Adjusted Rand index, NMI with arithmetic-mean normalization, and purity.
inline ClusteringMetrics external_metrics(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw Error(ErrorCode::ShapeMismatch, "label vectors differ in length");
  if (pred.empty()) throw Error(ErrorCode::ShapeMismatch, "empty label vectors");
  const auto n = static_cast<double>(pred.size());
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    table[{pred[i], truth[i]}] += 1.0;
    rows[pred[i]] += 1.0;
    cols[truth[i]] += 1.0;
  }
  auto comb2 = [](double x) { return 0.5 * x * (x - 1.0); };
  double sum_cells = 0.0;
  for (const auto& [key, v] : table) sum_cells += comb2(v);
  double sum_rows = 0.0;
  for (const auto& [key, v] : rows) sum_rows += comb2(v);
  double sum_cols = 0.0;
  for (const auto& [key, v] : cols) sum_cols += comb2(v);
  const double expected = sum_rows * sum_cols / comb2(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  ClusteringMetrics m;
  m.ari = max_index == expected ? 1.0 : (sum_cells - expected) / (max_index - expected);

  double mi = 0.0;
  for (const auto& [key, v] : table) mi += (v / n) * std::log(n * v / (rows[key.first] * cols[key.second]));
  auto entropy = [&](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [key, v] : counts) h -= (v / n) * std::log(v / n);
    return h;
  };
  const double h_pred = entropy(rows);
  const double h_truth = entropy(cols);
  if (h_pred == 0.0 && h_truth == 0.0) {
    m.nmi = 1.0;
  } else {
    const double norm = 0.5 * (h_pred + h_truth);
    m.nmi = norm > 0.0 ? std::max(0.0, mi) / norm : 0.0;
  }

  std::map<int, double> best_in_cluster;
  for (const auto& [key, v] : table) best_in_cluster[key.first] = std::max(best_in_cluster[key.first], v);
  double hit = 0.0;
  for (const auto& [key, v] : best_in_cluster) hit += v;
  m.purity = hit / n;
  return m;
}

inline nlohmann::ordered_json config_json(const SolverConfig& c) {
  nlohmann::ordered_json j;
  j["k"] = c.k;
  j["rel_gap_tol"] = c.rel_gap_tol;
  j["time_limit_s"] = std::isfinite(c.time_limit_s) ? nlohmann::ordered_json(c.time_limit_s) : nullptr;
  j["max_nodes"] = c.max_nodes;
  j["threads"] = c.threads;
  j["seed"] = c.seed;
  j["group_size_max"] = c.group_size_max;
  j["ld_iterations"] = c.ld_iterations;
  j["ld_step0"] = c.ld_step0;
  j["ld_warm_start"] = c.ld_warm_start;
  j["heuristic_restarts"] = c.heuristic_restarts;
  j["paper_rho_rule"] = c.paper_rho_rule;
  j["symmetry_breaking"] = c.symmetry_breaking;
  return j;
}

namespace detail {
inline nlohmann::ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}
}  // namespace detail

/// JSON report. Non-finite bounds are written as null.
inline nlohmann::ordered_json make_report(const Dataset& data, const SolveResult& result, const SolverConfig& config,
                                          double constant) {
  nlohmann::ordered_json j;
  j["status"] = to_string(result.status);
  j["objective"] = detail::number_or_null(result.best.feasible ? result.best.objective : kInf);
  j["lower_bound"] = detail::number_or_null(result.lb);
  j["upper_bound"] = detail::number_or_null(result.ub);
  j["rel_gap"] = detail::number_or_null(result.rel_gap);
  j["constant_term"] = constant;
  j["k"] = config.k;
  j["n"] = data.n();
  j["d"] = data.d();
  j["nodes"] = result.stats.nodes_processed;
  j["wall_time_s"] = result.stats.wall_time_s;
  j["time_per_node_s"] = result.stats.time_per_node_s;
  j["core_hours"] = result.stats.core_hours;
  j["threads"] = config.threads;
  j["seed"] = config.seed;
  auto centroids = nlohmann::ordered_json::array();
  auto assignment = nlohmann::ordered_json::array();
  if (result.best.feasible) {
    for (std::size_t c = 0; c < result.best.centroids.rows(); ++c) {
      auto row = result.best.centroids.row(c);
      centroids.push_back(std::vector<double>(row.begin(), row.end()));
    }
    for (int a : result.best.assignment) assignment.push_back(a);
  }
  j["centroids"] = centroids;
  j["assignment"] = assignment;
  if (data.labels && result.best.feasible) {
    const auto m = external_metrics(result.best.assignment, *data.labels);
    j["metrics"] = {{"ari", m.ari}, {"nmi", m.nmi}, {"purity", m.purity}};
  }
  j["config"] = config_json(config);
  return j;
}

}  // namespace pcmssc
