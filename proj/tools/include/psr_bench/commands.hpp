#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psr_bench/scenario.hpp"

namespace psr::bench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolverFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Dispatches on proposed, dense or al. `init` is an iterate of the
/// transformed problem; al receives its reconstructed multipliers.
SolveResult run_solver(const std::string& name, const OcpProblem& problem,
                       const Iterate& init, const SolverSettings& settings);

/// Initial iterate requested by the scenario (zeros, or a converged
/// solve_proposed solution).
Iterate initial_iterate(const Scenario& sc, const OcpProblem& problem);

/// Runs the selected solvers, writes <solver>.csv and summary.csv.
/// Returns kExitOk iff every solver converged.
int cmd_solve(const Scenario& sc, std::ostream& log);

struct ScalingRow {
  int horizon = 0;
  int steps = 0;
  std::string solver;
  double time_per_iter_us = 0.0;
  double total_time_us = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingFit {
  LinearFit proposed_linear;
  /// Slope of log(time_per_iter) against log(N).
  double proposed_exponent = 0.0;
  double dense_exponent = 0.0;
  /// time_per_iter at the largest grid over the smallest.
  double proposed_ratio = 0.0;
  double dense_ratio = 0.0;
};

/// Times solve_proposed and solve_dense on every sweep point. A repetition
/// cycles over the grid in batches of about 2 ms until min_rep_ms per point
/// has elapsed and keeps each point's fastest batch; the reported times are
/// medians over `reps` repetitions.
std::vector<ScalingRow> measure_scaling(const Scenario& sc);
ScalingFit fit_scaling(const std::vector<ScalingRow>& rows);

/// Writes scaling.csv and scaling_fit.csv. Returns kExitOk iff every solve
/// converged.
int cmd_scaling(const Scenario& sc, std::ostream& log);

/// Writes convergence.csv with the per-iteration KKT errors of proposed,
/// dense and al (or only the selected solver) and a penalty_update flag.
int cmd_convergence(const Scenario& sc, std::ostream& log);

/// Command-line entry point: psr-bench <solve|scaling|convergence>
/// --config <path> [--out <dir>] [--seed <u64>] [--reps <int>].
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace psr::bench
