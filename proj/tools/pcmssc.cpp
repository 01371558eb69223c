// Command-line front end: solve, generate, gen-constraints, heuristic, oracle.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pcmssc/pcmssc.hpp"

namespace {

using namespace pcmssc;
using json = nlohmann::ordered_json;

struct InputArgs {
  std::string data;
  std::string constraints;
  std::size_t k = 0;
  bool labels_last = false;
};

void add_input_options(CLI::App* cmd, InputArgs& in) {
  cmd->add_option("--data", in.data, "CSV dataset")->required()->check(CLI::ExistingFile);
  cmd->add_option("--constraints", in.constraints, "constraint file (ML i j / CL i j)")->check(CLI::ExistingFile);
  cmd->add_option("--k", in.k, "number of clusters")->required()->check(CLI::Range(1, 64));
  cmd->add_flag("--labels-last", in.labels_last, "last CSV column holds class labels");
}

std::pair<Dataset, ConstraintSet> load_inputs(const InputArgs& in) {
  Dataset data = load_csv(in.data, in.labels_last);
  ConstraintSet cons;
  if (!in.constraints.empty()) cons = load_constraints(in.constraints, data.n());
  return {std::move(data), std::move(cons)};
}

void emit(const json& report, const std::string& out) {
  if (out.empty()) {
    std::cout << report.dump(2) << '\n';
    return;
  }
  std::ofstream file(out);
  if (!file) throw Error(ErrorCode::ParseError, "cannot write " + out);
  file << report.dump(2) << '\n';
}

void print_progress(const ProgressEvent& e) {
  std::fprintf(stderr, "[t=%.1fs] lb=%.6g ub=%.6g gap=%.4f%% nodes=%zu\n", e.time_s, e.lb, e.ub, 100.0 * e.gap,
               e.nodes);
}

json solution_json(const Solution& sol) {
  json j;
  j["objective"] = sol.objective;
  auto centroids = json::array();
  for (std::size_t c = 0; c < sol.centroids.rows(); ++c) {
    auto row = sol.centroids.row(c);
    centroids.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["centroids"] = centroids;
  j["assignment"] = sol.assignment;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constrained minimum sum-of-squares clustering"};
  app.require_subcommand(1);

  InputArgs solve_in;
  SolverConfig config;
  double time_limit = 0.0;
  std::string solve_out;
  auto* solve_cmd = app.add_subcommand("solve", "branch-and-bound to a certified gap");
  add_input_options(solve_cmd, solve_in);
  solve_cmd->add_option("--gap", config.rel_gap_tol, "relative gap tolerance")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--time-limit", time_limit, "seconds")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-nodes", config.max_nodes);
  solve_cmd->add_option("--threads", config.threads)->check(CLI::PositiveNumber);
  solve_cmd->add_option("--seed", config.seed);
  solve_cmd->add_option("--group-size", config.group_size_max)->check(CLI::PositiveNumber);
  solve_cmd->add_option("--ld-iters", config.ld_iterations);
  solve_cmd->add_flag("--ld-warm-start", config.ld_warm_start, "start each node's multipliers from its parent's");
  solve_cmd->add_option("--restarts", config.heuristic_restarts);
  solve_cmd->add_flag("--paper-rho-rule", config.paper_rho_rule);
  bool no_symmetry = false;
  solve_cmd->add_flag("--no-symmetry-breaking", no_symmetry);
  solve_cmd->add_option("--out", solve_out, "JSON report path (stdout when omitted)");

  std::size_t gen_n = 0;
  std::size_t gen_d = 0;
  std::size_t gen_k = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_data;
  std::string gen_labels;
  auto* gen_cmd = app.add_subcommand("generate", "Gaussian blobs");
  gen_cmd->add_option("--n", gen_n)->required();
  gen_cmd->add_option("--d", gen_d)->required();
  gen_cmd->add_option("--k-true", gen_k)->required();
  gen_cmd->add_option("--seed", gen_seed);
  gen_cmd->add_option("--out-data", gen_data)->required();
  gen_cmd->add_option("--out-labels", gen_labels);

  std::string gc_labels;
  std::size_t gc_ml = 0;
  std::size_t gc_cl = 0;
  std::uint64_t gc_seed = 0;
  std::string gc_out;
  auto* gc_cmd = app.add_subcommand("gen-constraints", "sample ML/CL pairs from ground-truth labels");
  gc_cmd->add_option("--labels", gc_labels)->required()->check(CLI::ExistingFile);
  gc_cmd->add_option("--ml", gc_ml);
  gc_cmd->add_option("--cl", gc_cl);
  gc_cmd->add_option("--seed", gc_seed);
  gc_cmd->add_option("--out", gc_out)->required();

  InputArgs heur_in;
  std::size_t heur_restarts = 100;
  std::uint64_t heur_seed = 0;
  std::string heur_out;
  auto* heur_cmd = app.add_subcommand("heuristic", "multi-restart COP-k-means only");
  add_input_options(heur_cmd, heur_in);
  heur_cmd->add_option("--restarts", heur_restarts);
  heur_cmd->add_option("--seed", heur_seed);
  heur_cmd->add_option("--out", heur_out);

  InputArgs oracle_in;
  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive optimum for tiny instances");
  add_input_options(oracle_cmd, oracle_in);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (solve_cmd->parsed()) {
      auto [data, cons] = load_inputs(solve_in);
      config.k = solve_in.k;
      if (time_limit > 0.0) config.time_limit_s = time_limit;
      config.symmetry_breaking = !no_symmetry;
      config.validate();
      SolveResult result;
      double constant = 0.0;
      try {
        const CollapsedInstance inst = collapse(data, cons, config.k);
        constant = inst.constant();
        result = solve(inst, config, print_progress);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RootInfeasible) throw;
        result.status = SolveStatus::Infeasible;
        result.stats.threads = config.threads;
      }
      emit(make_report(data, result, config, constant), solve_out);
      return result.status == SolveStatus::Infeasible ? 2 : 0;
    }
    if (gen_cmd->parsed()) {
      Dataset data = generate_synthetic(gen_n, gen_d, gen_k, gen_seed);
      std::ofstream out(gen_data);
      write_csv(out, data, false);
      if (!gen_labels.empty()) {
        std::ofstream labels(gen_labels);
        for (int l : *data.labels) labels << l << '\n';
      }
      return 0;
    }
    if (gc_cmd->parsed()) {
      std::ifstream in(gc_labels);
      const auto labels = parse_labels(in);
      const auto cons = generate_constraints(labels, gc_ml, gc_cl, gc_seed);
      std::ofstream out(gc_out);
      write_constraints(out, cons);
      return 0;
    }
    if (heur_cmd->parsed()) {
      auto [data, cons] = load_inputs(heur_in);
      json report;
      try {
        const CollapsedInstance inst = collapse(data, cons, heur_in.k);
        auto best = multi_restart(inst, heur_in.k, heur_restarts, heur_seed);
        if (!best) {
          report["status"] = "NoFeasibleRun";
          emit(report, heur_out);
          return 2;
        }
        report["status"] = "Feasible";
        report.update(solution_json(expand_solution(inst, *best)));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RootInfeasible) throw;
        report["status"] = "Infeasible";
        emit(report, heur_out);
        return 2;
      }
      emit(report, heur_out);
      return 0;
    }
    if (oracle_cmd->parsed()) {
      auto [data, cons] = load_inputs(oracle_in);
      validate_instance(data, cons, oracle_in.k);
      const auto best = brute_force(data, cons, oracle_in.k);
      json report;
      if (!best.solution.feasible) {
        report["status"] = "Infeasible";
        std::cout << report.dump(2) << '\n';
        return 2;
      }
      report["status"] = "Optimal";
      report.update(solution_json(best.solution));
      std::cout << report.dump(2) << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
