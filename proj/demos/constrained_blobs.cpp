// Generates three Gaussian blobs, samples must-link and cannot-link pairs
// from the true labels and solves to a 1% gap.

#include <cstdio>

#include "pcmssc/pcmssc.hpp"

int main() {
  using namespace pcmssc;
  const Dataset data = generate_synthetic(300, 2, 3, 1);
  const ConstraintSet cons = generate_constraints(*data.labels, 40, 40, 2);

  SolverConfig config;
  config.k = 3;
  config.rel_gap_tol = 0.01;
  const SolveResult result = solve(data, cons, config, [](const ProgressEvent& e) {
    std::printf("t=%.2fs lb=%.4f ub=%.4f gap=%.3f%% nodes=%zu\n", e.time_s, e.lb, e.ub, 100 * e.gap, e.nodes);
  });

  std::printf("status %s, objective %.6f, %zu nodes\n", to_string(result.status), result.best.objective,
              result.stats.nodes_processed);
  const auto m = external_metrics(result.best.assignment, *data.labels);
  std::printf("ARI %.4f  NMI %.4f  purity %.4f\n", m.ari, m.nmi, m.purity);
  return 0;
}
