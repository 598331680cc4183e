#include "psr_bench/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "psriccati/report_csv.hpp"

namespace psr::bench {

namespace {

using Clock = std::chrono::steady_clock;
constexpr std::chrono::milliseconds kBatch{2};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / name, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
  return os;
}

}  // namespace

SolveResult run_solver(const std::string& name, const OcpProblem& problem,
                       const Iterate& init, const SolverSettings& settings) {
  if (name == "proposed") return solve_proposed(problem, init, settings);
  if (name == "dense") return solve_dense(problem, init, settings);
  // The AL iteration works on the original problem, whose costates differ
  // from the transformed ones near each constraint; the map is the identity
  // when nu = 0.
  if (name == "al")
    return solve_al(problem, reconstruct_multipliers(init, problem), settings);
  throw std::invalid_argument("unknown solver '" + name + "'");
}

Iterate initial_iterate(const Scenario& sc, const OcpProblem& problem) {
  if (sc.init == InitKind::zero) return Iterate::zeros(problem);
  const SolveResult warm =
      solve_proposed(problem, Iterate::zeros(problem), sc.settings);
  if (!warm.report.converged())
    throw std::runtime_error("warm start: solve_proposed did not converge (" +
                             std::string(to_string(warm.report.status)) + ")");
  return warm.solution;
}

int cmd_solve(const Scenario& sc, std::ostream& log) {
  const OcpProblem problem = build_problem(sc);
  const Iterate init = initial_iterate(sc, problem);
  auto summary = open_csv(sc.out_dir, "summary.csv");
  summary << "solver,status,iterations,final_kkt_error,total_time_us\n";
  bool all_ok = true;
  for (const auto& name : sc.solvers()) {
    SolveResult res = run_solver(name, problem, init, sc.settings);
    std::vector<double> times{res.report.total_us};
    for (int r = 1; r < sc.reps; ++r)
      times.push_back(run_solver(name, problem, init, sc.settings).report.total_us);
    res.report.total_us = median(times);

    auto os = open_csv(sc.out_dir, name + ".csv");
    write_report_csv(os, res.report);
    summary << name << ',' << to_string(res.report.status) << ','
            << res.report.iterations << ',' << fmt(res.report.final_kkt_error())
            << ',' << fmt(res.report.total_us) << '\n';
    log << name << ": " << to_string(res.report.status) << " after "
        << res.report.iterations << " iterations, KKT error "
        << res.report.final_kkt_error();
    if (!res.report.message.empty()) log << " (" << res.report.message << ")";
    log << '\n';
    all_ok &= res.report.converged();
  }
  return all_ok ? kExitOk : kExitSolverFailure;
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 && sxx > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

std::vector<ScalingRow> measure_scaling(const Scenario& sc) {
  const auto min_rep = std::chrono::duration<double, std::milli>(sc.sweep.min_rep_ms);
  const std::vector<std::string> names{"proposed", "dense"};
  std::vector<OcpProblem> problems;
  std::vector<ScalingRow> rows;
  for (std::size_t g = 0; g < sc.sweep.grids.size(); ++g) {
    problems.push_back(
        build_scaling_problem(sc, sc.sweep.grids[g], sc.sweep.steps[g]));
    for (const auto& name : names) {
      ScalingRow row;
      row.horizon = sc.sweep.grids[g];
      row.steps = sc.sweep.steps[g];
      row.solver = name;
      rows.push_back(row);
    }
  }
  // Within a repetition the grid points are visited round-robin in short
  // batches and each point keeps its fastest batch. Host slowdowns last
  // longer than a batch but shorter than a repetition, so every point gets
  // batches outside them.
  std::vector<std::vector<double>> per_iter(rows.size()), total(rows.size());
  const auto budget = min_rep * static_cast<double>(problems.size());
  for (std::size_t s = 0; s < names.size(); ++s) {
    for (int r = 0; r < sc.sweep.reps; ++r) {
      std::vector<double> best(problems.size(),
                               std::numeric_limits<double>::infinity());
      const auto t0 = Clock::now();
      do {
        for (std::size_t g = 0; g < problems.size(); ++g) {
          const std::size_t idx = g * names.size() + s;
          const Iterate init = Iterate::zeros(problems[g]);
          SolveResult last;
          int runs = 0;
          const auto b0 = Clock::now();
          do {
            last = run_solver(names[s], problems[g], init, sc.settings);
            ++runs;
          } while (Clock::now() - b0 < kBatch);
          best[g] = std::min(best[g], std::chrono::duration<double, std::micro>(
                                          Clock::now() - b0).count() / runs);
          rows[idx].iterations = last.report.iterations;
          rows[idx].converged = last.report.converged();
        }
      } while (Clock::now() - t0 < budget);
      for (std::size_t g = 0; g < problems.size(); ++g) {
        const std::size_t idx = g * names.size() + s;
        total[idx].push_back(best[g]);
        per_iter[idx].push_back(best[g] / std::max(1, rows[idx].iterations));
      }
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].time_per_iter_us = median(per_iter[i]);
    rows[i].total_time_us = median(total[i]);
  }
  return rows;
}

ScalingFit fit_scaling(const std::vector<ScalingRow>& rows) {
  std::vector<double> n, lp, ld, lnp, lnd, tp, td;
  for (const auto& r : rows) {
    if (r.solver == "proposed") {
      n.push_back(r.horizon);
      tp.push_back(r.time_per_iter_us);
      lnp.push_back(std::log(r.horizon));
      lp.push_back(std::log(r.time_per_iter_us));
    } else if (r.solver == "dense") {
      td.push_back(r.time_per_iter_us);
      lnd.push_back(std::log(r.horizon));
      ld.push_back(std::log(r.time_per_iter_us));
    }
  }
  ScalingFit f;
  if (!tp.empty()) {
    f.proposed_linear = fit_linear(n, tp);
    f.proposed_exponent = fit_linear(lnp, lp).slope;
    f.proposed_ratio = tp.back() / tp.front();
  }
  if (!td.empty()) {
    f.dense_exponent = fit_linear(lnd, ld).slope;
    f.dense_ratio = td.back() / td.front();
  }
  return f;
}

int cmd_scaling(const Scenario& sc, std::ostream& log) {
  const auto rows = measure_scaling(sc);
  auto os = open_csv(sc.out_dir, "scaling.csv");
  os << "N,steps,solver,time_per_iter,total_time,iterations\n";
  bool all_ok = true;
  for (const auto& r : rows) {
    os << r.horizon << ',' << r.steps << ',' << r.solver << ','
       << fmt(r.time_per_iter_us) << ',' << fmt(r.total_time_us) << ','
       << r.iterations << '\n';
    log << "N=" << r.horizon << " steps=" << r.steps << " " << r.solver
        << ": " << r.time_per_iter_us << " us/iter, " << r.iterations
        << " iterations\n";
    all_ok &= r.converged;
  }
  const ScalingFit f = fit_scaling(rows);
  auto fit = open_csv(sc.out_dir, "scaling_fit.csv");
  fit << "solver,metric,value\n"
      << "proposed,linear_slope_us_per_stage," << fmt(f.proposed_linear.slope) << '\n'
      << "proposed,linear_intercept_us," << fmt(f.proposed_linear.intercept) << '\n'
      << "proposed,linear_r2," << fmt(f.proposed_linear.r2) << '\n'
      << "proposed,loglog_exponent," << fmt(f.proposed_exponent) << '\n'
      << "proposed,time_ratio_last_first," << fmt(f.proposed_ratio) << '\n'
      << "dense,loglog_exponent," << fmt(f.dense_exponent) << '\n'
      << "dense,time_ratio_last_first," << fmt(f.dense_ratio) << '\n';
  log << "proposed linear fit R^2 = " << f.proposed_linear.r2
      << ", dense growth exponent = " << f.dense_exponent << '\n';
  return all_ok ? kExitOk : kExitSolverFailure;
}

int cmd_convergence(const Scenario& sc, std::ostream& log) {
  const OcpProblem problem = build_problem(sc);
  const Iterate init = initial_iterate(sc, problem);
  auto os = open_csv(sc.out_dir, "convergence.csv");
  os << "solver,iter,kkt_error,penalty_update\n";
  bool all_ok = true;
  for (const auto& name : sc.solvers()) {
    const SolveResult res = run_solver(name, problem, init, sc.settings);
    const auto& rep = res.report;
    for (std::size_t j = 0; j < rep.kkt_history.size(); ++j) {
      const bool flagged =
          std::find(rep.penalty_updates.begin(), rep.penalty_updates.end(),
                    static_cast<int>(j)) != rep.penalty_updates.end();
      os << name << ',' << j << ',' << fmt(rep.kkt_history[j]) << ','
         << (flagged ? 1 : 0) << '\n';
    }
    log << name << ": " << to_string(rep.status) << " after "
        << rep.iterations << " iterations\n";
    all_ok &= rep.converged();
  }
  return all_ok ? kExitOk : kExitSolverFailure;
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Benchmarks for pure-state constrained optimal control solvers",
               "psr-bench"};
  app.require_subcommand(1);
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  int reps = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "INI scenario file")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides [output] dir)");
    sub->add_option("--seed", seed, "Seed for random initial states and targets");
    sub->add_option("--reps", reps, "Timed repetitions")->check(CLI::PositiveNumber);
  };
  auto* solve = app.add_subcommand("solve", "Run the selected solvers on one scenario");
  auto* scaling = app.add_subcommand("scaling", "Time proposed and dense over a grid sweep");
  auto* convergence =
      app.add_subcommand("convergence", "Per-iteration KKT errors of each solver");
  for (auto* sub : {solve, scaling, convergence}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "psr-bench: " << e.what() << '\n';
    return kExitConfigError;
  }

  Scenario sc;
  try {
    sc = load_scenario(config);
  } catch (const ConfigError& e) {
    err << "psr-bench: config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  sc.seed = seed;
  if (!out_dir.empty()) sc.out_dir = out_dir;
  if (reps > 0) {
    sc.reps = reps;
    sc.sweep.reps = reps;
  }

  try {
    if (solve->parsed()) return cmd_solve(sc, out);
    if (scaling->parsed()) return cmd_scaling(sc, out);
    return cmd_convergence(sc, out);
  } catch (const std::exception& e) {
    err << "psr-bench: " << e.what() << '\n';
    return kExitSolverFailure;
  }
}

}  // namespace psr::bench
