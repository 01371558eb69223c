#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace pcmssc;
using namespace pcmssc::testing;

TEST(BasicBound, DegenerateRegionIsExactCost) {
  const auto inst = instance({{0, 0}, {3, 1}, {5, 5}}, {1, 2, 1}, {}, 0.5, 2);
  const Matrix mu = matrix({{1, 0}, {4, 4}});
  CentroidRegion r(2, 2);
  r.lower = mu;
  r.upper = mu;
  double expected = 0.5;
  for (std::size_t s = 0; s < 3; ++s)
    expected += inst.weight(s) * std::min(squared_distance(inst.point(s), mu.row(0)),
                                          squared_distance(inst.point(s), mu.row(1)));
  EXPECT_DOUBLE_EQ(lower_bound_basic(inst, r, ViableSets::full(3, 2)), expected);
}

TEST(BasicBound, RootRegionGivesConstant) {
  const auto inst = instance({{0, 0}, {3, 1}, {5, 5}}, {}, {}, 1.25, 2);
  EXPECT_DOUBLE_EQ(lower_bound_basic(inst, root_region(inst), ViableSets::full(3, 2)), 1.25);
}

TEST(BasicBound, SeparatedBoxes) {
  const auto inst = instance({{0, 0}, {10, 0}}, {}, {}, 0.0, 2);
  const auto r = region({{{0, 0}, {1, 1}}, {{9, -1}, {11, 1}}});
  EXPECT_DOUBLE_EQ(lower_bound_basic(inst, r, ViableSets::full(2, 2)), 0.0);
}

TEST(Grouping, IndexOrderWithoutCl) {
  const auto inst = instance({{0}, {1}, {2}, {3}, {4}, {5}}, {}, {}, 0.0, 2);
  const auto g = build_grouping(inst, 3);
  EXPECT_EQ(g.groups, (std::vector<std::vector<std::size_t>>{{0, 1, 2}, {3, 4, 5}}));
}

TEST(Grouping, ClEndpointsShareAGroup) {
  const auto inst = instance({{0}, {1}, {2}, {3}, {4}, {5}}, {}, {{0, 5}}, 0.0, 2);
  const auto g = build_grouping(inst, 2);
  ASSERT_FALSE(g.groups.empty());
  EXPECT_EQ(g.groups[0], (std::vector<std::size_t>{0, 5}));
  std::size_t total = 0;
  for (const auto& grp : g.groups) total += grp.size();
  EXPECT_EQ(total, 6U);
}

TEST(Grouping, SizeOneIsPerSample) {
  const auto inst = instance({{0}, {1}, {2}, {3}}, {}, {{1, 2}}, 0.0, 2);
  EXPECT_EQ(build_grouping(inst, 1).groups.size(), 4U);
}

TEST(GroupSubproblem, SingletonReducesToBoxDistance) {
  const auto inst = instance({{2, 3}}, {3}, {}, 0.0, 2);
  const auto r = region({{{0, 0}, {1, 1}}, {{5, 5}, {6, 6}}});
  const auto spec = prepare_group(inst, {0});
  const auto sol = solve_group_subproblem(inst, spec, r, ViableSets::full(1, 2), Matrix(2, 2));
  ASSERT_TRUE(sol);
  EXPECT_DOUBLE_EQ(sol->value, 3.0 * std::min(d_min(inst.point(0), r.box(0)), d_min(inst.point(0), r.box(1))));
  EXPECT_EQ(sol->assignment, (std::vector<int>{0}));
  EXPECT_DOUBLE_EQ(sol->centroids(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(sol->centroids(0, 1), 1.0);
}

TEST(GroupSubproblem, CannotLinkForcesDistinctClusters) {
  const auto inst = instance({{0, 0}, {0.5, 0}}, {}, {{0, 1}}, 0.0, 2);
  const auto r = region({{{-1, -1}, {1, 1}}, {{-1, -1}, {1, 1}}});
  const auto sol = solve_group_subproblem(inst, prepare_group(inst, {0, 1}), r, ViableSets::full(2, 2), Matrix(2, 2));
  ASSERT_TRUE(sol);
  EXPECT_NE(sol->assignment[0], sol->assignment[1]);
  EXPECT_DOUBLE_EQ(sol->value, d_min(inst.point(0), r.box(0)) + d_min(inst.point(1), r.box(1)));
  // Brute force over the four labelings with identical boxes.
  double best = kInf;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      if (a == b) continue;
      best = std::min(best, d_min(inst.point(0), r.box(a)) + d_min(inst.point(1), r.box(b)));
    }
  EXPECT_DOUBLE_EQ(sol->value, best);
}

TEST(GroupSubproblem, EmptyClusterTakesCornerOfLinearTerm) {
  const auto inst = instance({{0.2, 0.2}}, {}, {}, 0.0, 2);
  const auto r = region({{{0, 0}, {1, 1}}, {{0, 0}, {1, 1}}});
  auto viable = ViableSets::full(1, 2);
  viable.mask[0] = bit(0);
  viable.forced[0] = 0;
  Matrix c(2, 2);
  c(1, 0) = 1.0;
  c(1, 1) = -1.0;
  const auto sol = solve_group_subproblem(inst, prepare_group(inst, {0}), r, viable, c);
  ASSERT_TRUE(sol);
  EXPECT_DOUBLE_EQ(sol->centroids(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(sol->centroids(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(sol->value, -1.0);
}

TEST(GroupSubproblem, MatchesGridMinimization) {
  // Independent oracle: minimize the group objective over a dense centroid grid.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = instance({{u(rng)}, {u(rng)}, {u(rng)}}, {1, 2, 1}, {{0, 2}}, 0.0, 2);
    const auto r = region({{{-0.5}, {0.5}}, {{0.0}, {1.0}}});
    Matrix c(2, 1);
    c(0, 0) = u(rng);
    c(1, 0) = u(rng);
    const auto sol = solve_group_subproblem(inst, prepare_group(inst, {0, 1, 2}), r, ViableSets::full(3, 2), c);
    ASSERT_TRUE(sol);
    double grid = kInf;
    const int steps = 2000;
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; j <= steps; j += 1) {
        const double m0 = -0.5 + static_cast<double>(i) / steps;
        const double m1 = static_cast<double>(j) / steps;
        double best = kInf;
        for (int a = 0; a < 8; ++a) {
          const int a0 = a & 1, a1 = (a >> 1) & 1, a2 = (a >> 2) & 1;
          if (a0 == a2) continue;
          const double mus[2] = {m0, m1};
          const double v = std::pow(inst.point(0)[0] - mus[a0], 2) + 2 * std::pow(inst.point(1)[0] - mus[a1], 2) +
                           std::pow(inst.point(2)[0] - mus[a2], 2);
          best = std::min(best, v);
        }
        grid = std::min(grid, best + c(0, 0) * m0 + c(1, 0) * m1);
      }
    EXPECT_LE(sol->value, grid + 1e-12);
    EXPECT_NEAR(sol->value, grid, 1e-5);
  }
}

TEST(Lagrangian, SingleGroupEqualsSubproblem) {
  const auto inst = instance({{0, 0}, {1, 0}, {5, 5}}, {}, {{0, 1}}, 0.0, 2);
  const auto r = root_region(inst);
  const auto viable = ViableSets::full(3, 2);
  SolverConfig config;
  config.group_size_max = 3;
  const auto grouping = build_grouping(inst, 3);
  ASSERT_EQ(grouping.groups.size(), 1U);
  const auto ld = lower_bound_lagrangian(inst, r, viable, grouping, config);
  const auto sub = solve_group_subproblem(inst, prepare_group(inst, grouping.groups[0]), r, viable, Matrix(2, 2));
  ASSERT_TRUE(ld && sub);
  EXPECT_DOUBLE_EQ(ld->bound, sub->value + inst.constant());
}

TEST(Lagrangian, ZeroIterationsIsDecompositionAtZero) {
  const auto inst = instance({{0, 0}, {1, 0}, {5, 5}, {6, 5}}, {}, {}, 0.3, 2);
  const auto r = region({{{0, 0}, {2, 1}}, {{4, 4}, {6, 6}}});
  const auto viable = ViableSets::full(4, 2);
  SolverConfig config;
  config.ld_iterations = 0;
  const auto grouping = build_grouping(inst, 1);
  const auto ld = lower_bound_lagrangian(inst, r, viable, grouping, config);
  ASSERT_TRUE(ld);
  EXPECT_DOUBLE_EQ(ld->bound, ld->value_at_zero);
  EXPECT_EQ(ld->candidates.size(), 1U);
  // With singleton groups and no multipliers the value is the basic bound.
  EXPECT_NEAR(ld->bound, lower_bound_basic(inst, r, viable), 1e-12);
}

TEST(Lagrangian, BoundDominatesBasicAndStaysBelowRegionOptimum) {
  std::mt19937_64 rng(17);
  RandomSpec spec;
  spec.n_max = 7;
  for (int trial = 0; trial < 30; ++trial) {
    auto [data, cons] = random_problem(rng, spec);
    CollapsedInstance inst;
    try {
      inst = collapse(data, cons, spec.k);
    } catch (const Error&) {
      continue;
    }
    const auto r = random_subregion(root_region(inst), rng);
    const auto viable = ViableSets::full(inst.size(), inst.k());
    SolverConfig config;
    config.group_size_max = 2;
    const auto ld = lower_bound_lagrangian(inst, r, viable, build_grouping(inst, 2), config);
    if (!ld) continue;
    EXPECT_GE(ld->bound, lower_bound_basic(inst, r, viable) - 1e-9);
    for (int probe = 0; probe < 20; ++probe) {
      const double z = fixed_centroid_cost(inst, random_point(r, rng));
      EXPECT_LE(ld->bound, z + 1e-9 * (1 + std::abs(z)));
    }
  }
}

TEST(Lagrangian, WarmStartResumesFromBestMultipliers) {
  std::mt19937_64 rng(23);
  RandomSpec spec;
  spec.n_max = 7;
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    auto [data, cons] = random_problem(rng, spec);
    CollapsedInstance inst;
    try {
      inst = collapse(data, cons, spec.k);
    } catch (const Error&) {
      continue;
    }
    const auto r = random_subregion(root_region(inst), rng);
    const auto viable = ViableSets::full(inst.size(), inst.k());
    SolverConfig config;
    config.group_size_max = 2;
    config.ld_iterations = 5;
    const auto grouping = build_grouping(inst, 2);
    const auto cold = lower_bound_lagrangian(inst, r, viable, grouping, config);
    if (!cold) continue;
    const auto warm = lower_bound_lagrangian(inst, r, viable, grouping, config, kInf, &cold->best_lambda);
    ASSERT_TRUE(warm);
    // Same node: the first evaluation reproduces the best cold value.
    EXPECT_NEAR(warm->value_at_zero, cold->bound, 1e-9 * (1 + std::abs(cold->bound)));
    EXPECT_GE(warm->bound, cold->bound - 1e-9 * (1 + std::abs(cold->bound)));
    // Inherited multipliers are applied on a sub-box; any multipliers give a valid bound.
    const auto child = random_subregion(r, rng);
    const auto inherited = lower_bound_lagrangian(inst, child, viable, grouping, config, kInf, &cold->best_lambda);
    ASSERT_TRUE(inherited);
    for (int probe = 0; probe < 20; ++probe) {
      const double z = fixed_centroid_cost(inst, random_point(child, rng));
      EXPECT_LE(inherited->bound, z + 1e-9 * (1 + std::abs(z)));
    }
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(KColoring, NoClEqualsNearestCentroid) {
  const auto inst = instance({{0, 0}, {4, 0}, {9, 0}}, {}, {}, 0.0, 2);
  const Matrix mu = matrix({{1, 0}, {8, 0}});
  const auto ub = upper_bound_kcoloring(inst, std::vector<Matrix>{mu});
  ASSERT_TRUE(ub.solution);
  EXPECT_EQ(ub.solution->assignment, (std::vector<int>{0, 0, 1}));
  EXPECT_DOUBLE_EQ(ub.cost, 1 + 9 + 1);
  const auto closed = upper_bound_ml_closed_form(inst, mu);
  EXPECT_DOUBLE_EQ(closed.cost, ub.cost);
}

TEST(KColoring, TriangleWithTwoClustersFails) {
  const auto inst = instance({{0}, {1}, {2}}, {}, {{0, 1}, {1, 2}, {0, 2}}, 0.0, 2);
  const auto ub = upper_bound_kcoloring(inst, std::vector<Matrix>{matrix({{0}, {2}})});
  EXPECT_FALSE(ub.solution);
  EXPECT_EQ(ub.cost, kInf);
}

TEST(KColoring, FourPointExample) {
  const auto inst = f2_instance();
  const Matrix mu = matrix({{20.0 / 3.0, 2.0 / 3.0}, {0, 0}});
  const auto ub = upper_bound_kcoloring(inst, std::vector<Matrix>{mu});
  ASSERT_TRUE(ub.solution);
  EXPECT_NEAR(ub.cost, 202.0 / 3.0, 1e-9);
  EXPECT_TRUE(cl_feasible(inst, ub.solution->assignment));
  // Oracle: exhaustive enumeration of the 16 labelings.
  EXPECT_NEAR(brute_force(inst).cost, 202.0 / 3.0, 1e-9);
}

TEST(ClosedForm, HandEvaluatedExample) {
  const auto inst = instance({{1, 0}, {10, 0}}, {2, 1}, {}, 2.0, 2);
  const auto ub = upper_bound_ml_closed_form(inst, matrix({{1, 0}, {10, 0}}));
  ASSERT_TRUE(ub.solution);
  EXPECT_DOUBLE_EQ(ub.cost, 2.0);
  EXPECT_EQ(ub.solution->assignment, (std::vector<int>{0, 1}));
}

TEST(ClosedForm, TieGoesToLowestCluster) {
  const auto inst = instance({{0}}, {}, {}, 0.0, 2);
  const auto ub = upper_bound_ml_closed_form(inst, matrix({{-1}, {1}}));
  EXPECT_EQ(ub.solution->assignment, (std::vector<int>{0}));
  const auto one = instance({{0}, {3}}, {}, {}, 0.0, 1);
  EXPECT_EQ(upper_bound_ml_closed_form(one, matrix({{7}})).solution->assignment, (std::vector<int>{0, 0}));
}

TEST(ClosedForm, RejectsInstancesWithCl) {
  EXPECT_THROW(upper_bound_ml_closed_form(f2_instance(), matrix({{0, 0}, {1, 1}})), Error);
}

TEST(Polish, StableSolutionUnchanged) {
  const auto inst = f2_instance();
  Solution sol{matrix({{20.0 / 3.0, 2.0 / 3.0}, {0, 0}}), {1, 0, 0, 0}, 0.0, true};
  sol.objective = recompute_objective(inst, sol);
  const auto out = polish_lloyd_constrained(inst, sol, 20);
  EXPECT_EQ(out.assignment, sol.assignment);
  EXPECT_DOUBLE_EQ(out.objective, sol.objective);
}

TEST(Polish, BadLabelingConverges) {
  const auto inst = f2_instance();
  Solution sol;
  sol.assignment = {0, 1, 1, 0};
  sol.centroids = weighted_means(inst, sol.assignment, matrix({{0, 0}, {0, 0}}));
  sol.objective = recompute_objective(inst, sol);
  sol.feasible = true;
  const auto out = polish_lloyd_constrained(inst, sol, 20);
  EXPECT_NEAR(out.objective, brute_force(inst).cost, 1e-9);
  EXPECT_NEAR(out.objective, 202.0 / 3.0, 1e-9);
}

TEST(Polish, ZeroIterationsReturnsInput) {
  const auto inst = f2_instance();
  Solution sol{matrix({{1, 1}, {2, 2}}), {0, 1, 0, 1}, 123.0, true};
  const auto out = polish_lloyd_constrained(inst, sol, 0);
  EXPECT_EQ(out.centroids, sol.centroids);
  EXPECT_EQ(out.assignment, sol.assignment);
  EXPECT_EQ(out.objective, 123.0);
}

TEST(Consistency, BasicBoundConvergesOnShrinkingBoxes) {
  const auto inst = instance({{0, 0}, {1, 2}, {4, 4}, {5, 1}}, {1, 2, 1, 3}, {}, 0.7, 2);
  const Matrix target = matrix({{0.7, 1.1}, {4.3, 2.9}});
  double exact = 0.7;
  for (std::size_t s = 0; s < inst.size(); ++s)
    exact += inst.weight(s) * std::min(squared_distance(inst.point(s), target.row(0)),
                                       squared_distance(inst.point(s), target.row(1)));
  const auto viable = ViableSets::full(inst.size(), 2);
  double half = 2.0;
  double previous = -kInf;
  for (int level = 0; level < 5; ++level) {
    CentroidRegion r(2, 2);
    for (std::size_t i = 0; i < 4; ++i) {
      r.lower.values()[i] = target.values()[i] - half;
      r.upper.values()[i] = target.values()[i] + half;
    }
    const double lb = lower_bound_basic(inst, r, viable);
    EXPECT_LE(lb, exact + 1e-12);
    EXPECT_GE(lb, previous - 1e-12);
    previous = lb;
    half *= 0.5;
  }
  CentroidRegion point(2, 2);
  point.lower = target;
  point.upper = target;
  EXPECT_NEAR(lower_bound_basic(inst, point, viable), exact, 1e-6);
}
