#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "psriccati/models.hpp"
#include "psriccati/solver.hpp"

namespace psr::bench {

/// Invalid configuration. what() reads "<file>:<line>: [section] key: reason"
/// (line 0 when the problem is not tied to a single line).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& file, int line, const std::string& field,
              const std::string& reason);
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

/// Grid sweep for the scaling command. grids[i] is paired with steps[i]:
/// the problem at grid N carries steps[i] waypoint constraints.
struct Sweep {
  std::vector<int> grids{35, 59, 83, 107, 131};
  std::vector<int> steps{2, 4, 6, 8, 10};
  int reps = 5;
  /// Waypoint targets alternate between +amplitude and -amplitude.
  double amplitude = 1.0;
  /// Wall time per grid point spent on each timing repetition.
  double min_rep_ms = 20.0;
};

enum class InitKind { zero, optimal };

struct Scenario {
  std::string config_path;
  std::string model = "double_integrator";
  ModelParams params;
  bool random_x_init = false;
  bool random_targets = false;
  /// proposed, al, dense or all.
  std::string solver = "all";
  SolverSettings settings;
  InitKind init = InitKind::zero;
  std::filesystem::path out_dir = "out";
  Sweep sweep;
  std::uint64_t seed = 0;
  /// Timed repetitions of each solve in the solve command.
  int reps = 1;

  /// Solvers named by `solver`, in output order.
  std::vector<std::string> solvers() const;
};

/// Reads an INI file with sections [model], [constraints], [solver],
/// [output] and [sweep]. Unknown sections or keys, unparsable values and
/// schedules rejected by the model builder raise ConfigError.
Scenario load_scenario(const std::filesystem::path& path);

/// Builds the configured problem. Random initial states and targets are
/// drawn from `seed`.
OcpProblem build_problem(const Scenario& sc);

/// Multi-waypoint problem of the scaling sweep: `steps` constraints at
/// stages spread evenly over the horizon N.
OcpProblem build_scaling_problem(const Scenario& sc, int horizon, int steps);

}  // namespace psr::bench
