#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace pcmssc;
using namespace pcmssc::testing;

TEST(BruteForce, SinglePoint) {
  EXPECT_DOUBLE_EQ(brute_force(instance({{2, 2}}, {}, {}, 0.0, 1)).cost, 0.0);
  EXPECT_DOUBLE_EQ(brute_force(instance({{2, 2}}, {3}, {}, 4.5, 1)).cost, 4.5);
}

TEST(BruteForce, FourPointExample) {
  const auto best = brute_force(f2_instance());
  EXPECT_NEAR(best.cost, 202.0 / 3.0, 1e-9);
  // Lexicographically first optimum: (0,0) alone in cluster 1.
  EXPECT_EQ(best.solution.assignment, (std::vector<int>{0, 1, 0, 0}));
}

TEST(BruteForce, AllMustLinkedIsGrandMeanSse) {
  const Dataset data = dataset({{0, 0}, {2, 1}, {4, 5}, {1, 1}});
  ConstraintSet cons;
  cons.ml_pairs = {{0, 1}, {1, 2}, {2, 3}};
  std::vector<double> mean(2, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) mean[j] += data.points(i, j) / 4.0;
  double total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) total += squared_distance(data.points.row(i), mean);
  for (std::size_t k = 1; k <= 3; ++k) EXPECT_NEAR(brute_force(data, cons, k).cost, total, 1e-12);
}

TEST(BruteForce, RawAndCollapsedAgree) {
  std::mt19937_64 rng(8);
  RandomSpec spec;
  for (int trial = 0; trial < 30; ++trial) {
    auto [data, cons] = random_problem(rng, spec);
    CollapsedInstance inst;
    try {
      inst = collapse(data, cons, spec.k);
    } catch (const Error&) {
      continue;
    }
    EXPECT_NEAR(brute_force(data, cons, spec.k).cost, brute_force(inst).cost, 1e-9);
  }
}

TEST(BruteForce, TooLargeThrows) {
  std::vector<std::vector<double>> rows(30, std::vector<double>{0.0});
  EXPECT_THROW(brute_force(instance(rows, {}, {}, 0.0, 3)), Error);
}

TEST(GridOracle, DegenerateRegionIsExact) {
  const auto inst = f2_instance();
  const Matrix mu = matrix({{10, 0.5}, {0, 0.5}});
  CentroidRegion r(2, 2);
  r.lower = mu;
  r.upper = mu;
  const auto out = brute_force_in_region(inst, r, 0.1);
  EXPECT_DOUBLE_EQ(out.value, fixed_centroid_cost(inst, mu));
  EXPECT_DOUBLE_EQ(out.slack, 0.0);
}

TEST(GridOracle, FinerGridNeverWorse) {
  const auto inst = instance({{0, 0}, {1, 3}, {4, 1}}, {}, {}, 0.0, 2);
  const auto r = region({{{0, 0}, {1, 1}}, {{2, 1}, {4, 3}}});
  const double coarse = brute_force_in_region(inst, r, 0.5).value;
  const double fine = brute_force_in_region(inst, r, 0.25).value;
  EXPECT_LE(fine, coarse);
}

TEST(GridOracle, AgreesWithEnumerationNearOptimum) {
  const auto inst = instance({{0, 0}, {0, 1}, {3, 0}}, {}, {{0, 1}}, 0.0, 2);
  const auto best = brute_force(inst);
  CentroidRegion r(2, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    r.lower.values()[i] = best.solution.centroids.values()[i] - 0.05;
    r.upper.values()[i] = best.solution.centroids.values()[i] + 0.05;
  }
  const auto out = brute_force_in_region(inst, r, 1e-2);
  EXPECT_TRUE(out.cl_enforced);
  EXPECT_NEAR(out.value, best.cost, 1e-2);
  EXPECT_GE(out.value, best.cost - 1e-12);
}
