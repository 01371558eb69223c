#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"

using namespace pcmssc;
using namespace pcmssc::testing;

namespace {
Dataset csv(const std::string& text, bool labels_last = false) {
  std::istringstream in(text);
  return parse_csv(in, labels_last);
}
ConstraintSet cons_text(const std::string& text, std::size_t n) {
  std::istringstream in(text);
  return parse_constraints(in, n);
}
}  // namespace

TEST(Csv, PlainRows) {
  const auto data = csv("0,0\n2,0\n");
  EXPECT_EQ(data.n(), 2U);
  EXPECT_EQ(data.d(), 2U);
  EXPECT_EQ(data.points(1, 0), 2.0);
}

TEST(Csv, HeaderSkipped) {
  const auto data = csv("x,y\n1,2\n3,4\n");
  EXPECT_EQ(data.n(), 2U);
  EXPECT_EQ(data.points(0, 1), 2.0);
}

TEST(Csv, RaggedRowsReportLine) {
  try {
    csv("1,2\n3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RaggedRows);
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(Csv, BadNumberReportsLine) {
  try {
    csv("1,2\n3,abc\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(Csv, LabelsLast) {
  const auto data = csv("a,b,label\n1.5,2,0\n3,4,2\n", true);
  EXPECT_EQ(data.d(), 2U);
  ASSERT_TRUE(data.labels);
  EXPECT_EQ(*data.labels, (std::vector<int>{0, 2}));
}

TEST(Csv, IrisFileLoads) {
  const auto data = load_csv(std::string(PCMSSC_DATA_DIR) + "/iris.csv", true);
  EXPECT_EQ(data.n(), 150U);
  EXPECT_EQ(data.d(), 4U);
  EXPECT_EQ(data.labels->size(), 150U);
}

TEST(Constraints, BothKinds) {
  const auto c = cons_text("ML 0 1\nCL 1 2\n", 3);
  EXPECT_EQ(c.ml_pairs.size(), 1U);
  EXPECT_EQ(c.cl_pairs.size(), 1U);
}

TEST(Constraints, CommentsAndNormalization) {
  const auto c = cons_text("# comment\n\nCL 2 1\n", 3);
  EXPECT_EQ(c.cl_pairs, (std::vector<IndexPair>{{1, 2}}));
}

TEST(Constraints, IndexOutOfRange) {
  try {
    cons_text("ML 0 9\n", 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
}

TEST(Constraints, ConflictDetected) {
  try {
    cons_text("ML 0 1\nCL 1 0\n", 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MlClConflict);
  }
}

TEST(Constraints, RoundTrip) {
  const auto c = cons_text("ML 3 1\nCL 0 2\nML 0 4\n", 5);
  std::ostringstream out;
  write_constraints(out, c);
  const auto again = cons_text(out.str(), 5);
  EXPECT_EQ(again.ml_pairs, c.ml_pairs);
  EXPECT_EQ(again.cl_pairs, c.cl_pairs);
}

TEST(Synthetic, Deterministic) {
  const auto a = generate_synthetic(50, 3, 2, 9);
  const auto b = generate_synthetic(50, 3, 2, 9);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(*a.labels, *b.labels);
}

TEST(Synthetic, OnePointPerBlob) {
  const auto a = generate_synthetic(3, 2, 3, 1);
  EXPECT_EQ(*a.labels, (std::vector<int>{0, 1, 2}));
}

TEST(Synthetic, BlobCounts) {
  const auto a = generate_synthetic(1200, 2, 3, 1);
  std::vector<int> counts(3, 0);
  for (int l : *a.labels) ++counts[static_cast<std::size_t>(l)];
  EXPECT_EQ(counts, (std::vector<int>{400, 400, 400}));
}

TEST(GenerateConstraints, CountsAndKinds) {
  const auto data = generate_synthetic(200, 2, 3, 2);
  const auto c = generate_constraints(*data.labels, 50, 0, 3);
  EXPECT_EQ(c.ml_pairs.size(), 50U);
  EXPECT_TRUE(c.cl_pairs.empty());
  for (auto [a, b] : c.ml_pairs) EXPECT_EQ((*data.labels)[a], (*data.labels)[b]);
  const auto d = generate_constraints(*data.labels, 0, 50, 3);
  for (auto [a, b] : d.cl_pairs) EXPECT_NE((*data.labels)[a], (*data.labels)[b]);
  auto copy = c;
  copy.normalize();
  EXPECT_EQ(copy.ml_pairs.size(), 50U);
}

TEST(GenerateConstraints, Unsatisfiable) {
  try {
    generate_constraints(std::vector<int>(10, 0), 0, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unsatisfiable);
  }
}

TEST(GenerateConstraints, Deterministic) {
  const auto data = generate_synthetic(100, 2, 2, 2);
  const auto a = generate_constraints(*data.labels, 10, 10, 7);
  const auto b = generate_constraints(*data.labels, 10, 10, 7);
  EXPECT_EQ(a.ml_pairs, b.ml_pairs);
  EXPECT_EQ(a.cl_pairs, b.cl_pairs);
}

TEST(Metrics, PerfectAgreement) {
  const std::vector<int> t{0, 0, 1, 1, 2, 2};
  const auto m = external_metrics(t, t);
  EXPECT_DOUBLE_EQ(m.ari, 1.0);
  EXPECT_NEAR(m.nmi, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.purity, 1.0);
}

TEST(Metrics, SingleClusterPrediction) {
  const std::vector<int> truth{0, 0, 1, 1};
  const auto m = external_metrics({5, 5, 5, 5}, truth);
  EXPECT_DOUBLE_EQ(m.purity, 0.5);
  EXPECT_NEAR(m.ari, 0.0, 1e-12);
}

TEST(Metrics, PermutationInvariant) {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2};
  const auto m = external_metrics({2, 2, 0, 0, 1, 1}, truth);
  EXPECT_DOUBLE_EQ(m.ari, 1.0);
  EXPECT_NEAR(m.nmi, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.purity, 1.0);
}

TEST(Metrics, KnownPartialAgreement) {
  // Pair counting by hand: 6 points, pred {0,0,0,1,1,1}, truth {0,0,1,1,2,2}.
  const std::vector<int> pred{0, 0, 0, 1, 1, 1};
  const std::vector<int> truth{0, 0, 1, 1, 2, 2};
  // Contingency cells: (0,0)=2,(0,1)=1,(1,1)=1,(1,2)=2.
  const double index = 1 + 1;          // sum C(n_ij,2)
  const double rows = 3 + 3;           // sum C(a_i,2)
  const double cols = 1 + 1 + 1;       // sum C(b_j,2)
  const double expected = rows * cols / 15.0;
  const double ari = (index - expected) / (0.5 * (rows + cols) - expected);
  const auto m = external_metrics(pred, truth);
  EXPECT_NEAR(m.ari, ari, 1e-12);
  EXPECT_NEAR(m.purity, 4.0 / 6.0, 1e-12);
  EXPECT_THROW(external_metrics({0}, {0, 1}), Error);
}

TEST(Report, KeysAndNulls) {
  const Dataset data = dataset({{0, 0}, {1, 0}, {0, 1}});
  ConstraintSet cons;
  cons.cl_pairs = {{0, 1}, {1, 2}, {0, 2}};
  SolverConfig config;
  const auto result = solve(data, cons, config);
  const auto report = make_report(data, result, config, 0.0);
  std::vector<std::string> keys;
  for (auto it = report.begin(); it != report.end(); ++it) keys.push_back(it.key());
  const std::vector<std::string> expected{"status", "objective", "lower_bound", "upper_bound", "rel_gap",
                                          "constant_term", "k", "n", "d", "nodes", "wall_time_s", "time_per_node_s",
                                          "core_hours", "threads", "seed", "centroids", "assignment", "config"};
  EXPECT_EQ(keys, expected);
  EXPECT_EQ(report["status"], "Infeasible");
  EXPECT_TRUE(report["upper_bound"].is_null());
}
