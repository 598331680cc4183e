#include "psr_bench/scenario.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace psr::bench {

ConfigError::ConfigError(const std::string& file, int line,
                         const std::string& field, const std::string& reason)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " +
                         (field.empty() ? "" : field + ": ") + reason),
      line_(line),
      field_(field) {}

std::vector<std::string> Scenario::solvers() const {
  if (solver == "all") return {"proposed", "dense", "al"};
  return {solver};
}

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"model",
       {"name", "dt", "N", "dim", "q_weight", "v_weight", "u_weight",
        "terminal_weight", "x_init", "gravity", "length", "damping",
        "cart_mass", "pole_mass"}},
      {"constraints", {"stages", "targets", "kind", "coordinates"}},
      {"solver",
       {"solver", "tol", "max_iters", "hessian", "step", "damping", "norm",
        "p_init", "beta", "p_max", "regularization", "init"}},
      {"output", {"dir"}},
      {"sweep", {"grids", "steps", "reps", "amplitude", "min_rep_ms"}},
  };
  return s;
}

// Boost's INI reader keeps no positions, so key lines are recovered with a
// plain scan of the same file.
std::map<std::string, int> key_lines(const std::filesystem::path& path) {
  std::map<std::string, int> lines;
  std::ifstream in(path);
  std::string line, section;
  for (int no = 1; std::getline(in, line); ++no) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == ';' || line[first] == '#')
      continue;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      section = line.substr(first + 1, close - first - 1);
      lines.emplace("[" + section + "]", no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(first, eq - first);
    key.erase(key.find_last_not_of(" \t") + 1);
    lines.emplace("[" + section + "] " + key, no);
  }
  return lines;
}

class Reader {
 public:
  Reader(std::string file, pt::ptree tree, std::map<std::string, int> lines)
      : file_(std::move(file)), tree_(std::move(tree)), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& reason) const {
    const std::string field =
        key.empty() ? "[" + section + "]" : "[" + section + "] " + key;
    const auto it = lines_.find(field);
    throw ConfigError(file_, it == lines_.end() ? 0 : it->second, field, reason);
  }

  void check_schema() const {
    for (const auto& [section, body] : tree_) {
      const auto s = schema().find(section);
      if (s == schema().end() || body.data().size()) {
        fail(section, "", "unknown section");
      }
      for (const auto& kv : body) {
        if (!s->second.count(kv.first)) fail(section, kv.first, "unknown key");
      }
    }
  }

  const std::string* raw(const std::string& section,
                         const std::string& key) const {
    const auto s = tree_.find(section);
    if (s == tree_.not_found()) return nullptr;
    const auto k = s->second.find(key);
    if (k == s->second.not_found()) return nullptr;
    return &k->second.data();
  }

  bool has(const std::string& section, const std::string& key) const {
    return raw(section, key) != nullptr;
  }

  std::vector<std::string> words(const std::string& section,
                                 const std::string& key) const {
    std::vector<std::string> out;
    if (const auto* v = raw(section, key)) {
      std::string s = *v;
      std::replace(s.begin(), s.end(), ',', ' ');
      std::istringstream is(s);
      for (std::string w; is >> w;) out.push_back(w);
    }
    return out;
  }

  double to_double(const std::string& section, const std::string& key,
                   const std::string& w) const {
    double v = 0.0;
    const auto r = std::from_chars(w.data(), w.data() + w.size(), v);
    if (r.ec != std::errc() || r.ptr != w.data() + w.size() || !std::isfinite(v))
      fail(section, key, "expected a number, got '" + w + "'");
    return v;
  }

  long long to_int(const std::string& section, const std::string& key,
                   const std::string& w) const {
    long long v = 0;
    const auto r = std::from_chars(w.data(), w.data() + w.size(), v);
    if (r.ec != std::errc() || r.ptr != w.data() + w.size())
      fail(section, key, "expected an integer, got '" + w + "'");
    return v;
  }

  std::string single(const std::string& section, const std::string& key) const {
    const auto ws = words(section, key);
    if (ws.size() != 1) fail(section, key, "expected a single value");
    return ws[0];
  }

  void number(const std::string& section, const std::string& key,
              double& out) const {
    if (has(section, key)) out = to_double(section, key, single(section, key));
  }

  void integer(const std::string& section, const std::string& key,
               int& out) const {
    if (!has(section, key)) return;
    const long long v = to_int(section, key, single(section, key));
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
      fail(section, key, "integer out of range");
    out = static_cast<int>(v);
  }

  std::vector<double> numbers(const std::string& section,
                              const std::string& key) const {
    std::vector<double> out;
    for (const auto& w : words(section, key))
      out.push_back(to_double(section, key, w));
    return out;
  }

  std::vector<int> integers(const std::string& section,
                            const std::string& key) const {
    std::vector<int> out;
    for (const auto& w : words(section, key))
      out.push_back(static_cast<int>(to_int(section, key, w)));
    return out;
  }

  template <class T>
  T choice(const std::string& section, const std::string& key,
           const std::map<std::string, T>& options, T fallback) const {
    if (!has(section, key)) return fallback;
    const std::string w = single(section, key);
    const auto it = options.find(w);
    if (it == options.end()) {
      std::string allowed;
      for (const auto& o : options) allowed += (allowed.empty() ? "" : "|") + o.first;
      fail(section, key, "expected one of " + allowed + ", got '" + w + "'");
    }
    return it->second;
  }

  const std::string& file() const { return file_; }

 private:
  std::string file_;
  pt::ptree tree_;
  std::map<std::string, int> lines_;
};

void read_model(const Reader& r, Scenario& sc) {
  if (r.has("model", "name")) sc.model = r.single("model", "name");
  const auto& names = model_names();
  if (std::find(names.begin(), names.end(), sc.model) == names.end())
    r.fail("model", "name", "unknown model '" + sc.model + "'");
  auto& p = sc.params;
  r.number("model", "dt", p.dt);
  r.integer("model", "N", p.horizon);
  r.integer("model", "dim", p.dim);
  r.number("model", "q_weight", p.q_weight);
  r.number("model", "v_weight", p.v_weight);
  r.number("model", "u_weight", p.u_weight);
  r.number("model", "terminal_weight", p.terminal_weight);
  r.number("model", "gravity", p.gravity);
  r.number("model", "length", p.length);
  r.number("model", "damping", p.damping);
  r.number("model", "cart_mass", p.cart_mass);
  r.number("model", "pole_mass", p.pole_mass);
  if (!(p.dt > 0.0)) r.fail("model", "dt", "must be positive");
  if (p.horizon < 2) r.fail("model", "N", "horizon must be at least 2");
  if (p.dim < 1) r.fail("model", "dim", "must be at least 1");
  if (r.has("model", "x_init")) {
    const auto ws = r.words("model", "x_init");
    if (ws.size() == 1 && ws[0] == "random") {
      sc.random_x_init = true;
    } else {
      const auto v = r.numbers("model", "x_init");
      p.x_init = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  }
}

void read_constraints(const Reader& r, Scenario& sc) {
  const auto stages = r.integers("constraints", "stages");
  const ConstraintKind kind = r.choice<ConstraintKind>(
      "constraints", "kind",
      {{"waypoint", ConstraintKind::waypoint},
       {"endpoint", ConstraintKind::endpoint}},
      ConstraintKind::waypoint);
  std::vector<int> coords{0};
  if (r.has("constraints", "coordinates"))
    coords = r.integers("constraints", "coordinates");
  if (coords.empty()) r.fail("constraints", "coordinates", "empty list");
  const int per = kind == ConstraintKind::endpoint ? 1 : static_cast<int>(coords.size());

  std::vector<double> targets;
  const auto tw = r.words("constraints", "targets");
  if (tw.size() == 1 && tw[0] == "random") {
    sc.random_targets = true;
    targets.assign(stages.size() * static_cast<std::size_t>(per), 0.0);
  } else {
    targets = r.numbers("constraints", "targets");
    if (targets.size() == stages.size() && per > 1) {
      // One target per constraint, shared by all selected coordinates.
      std::vector<double> wide;
      for (double t : targets) wide.insert(wide.end(), static_cast<std::size_t>(per), t);
      targets = wide;
    }
    if (targets.size() != stages.size() * static_cast<std::size_t>(per)) {
      r.fail("constraints", "targets",
             "expected one target per stage or per stage and coordinate (" +
                 std::to_string(stages.size()) + " stages)");
    }
  }
  sc.params.constraints.clear();
  for (std::size_t j = 0; j < stages.size(); ++j) {
    ConstraintSpec c;
    c.stage = stages[j];
    c.kind = kind;
    c.coordinates = coords;
    c.targets = Eigen::Map<const Vector>(targets.data() + j * static_cast<std::size_t>(per), per);
    sc.params.constraints.push_back(c);
  }
}

void read_solver(const Reader& r, Scenario& sc) {
  if (r.has("solver", "solver")) {
    sc.solver = r.single("solver", "solver");
    if (sc.solver != "proposed" && sc.solver != "al" && sc.solver != "dense" &&
        sc.solver != "all")
      r.fail("solver", "solver", "expected one of proposed|al|dense|all, got '" +
                                     sc.solver + "'");
  }
  auto& s = sc.settings;
  r.number("solver", "tol", s.tol);
  r.integer("solver", "max_iters", s.max_iters);
  s.hessian = r.choice<HessianMode>(
      "solver", "hessian",
      {{"exact", HessianMode::exact}, {"gauss_newton", HessianMode::gauss_newton}},
      s.hessian);
  s.step = r.choice<StepRule>(
      "solver", "step", {{"full", StepRule::full}, {"damped", StepRule::damped}},
      s.step);
  r.number("solver", "damping", s.damping);
  s.norm = r.choice<ErrorNorm>(
      "solver", "norm", {{"l2", ErrorNorm::l2}, {"linf", ErrorNorm::linf}}, s.norm);
  r.number("solver", "p_init", s.al.p_init);
  r.number("solver", "beta", s.al.beta);
  r.number("solver", "p_max", s.al.p_max);
  s.regularization.enabled = r.choice<bool>(
      "solver", "regularization", {{"on", true}, {"off", false}}, true);
  sc.init = r.choice<InitKind>(
      "solver", "init", {{"zero", InitKind::zero}, {"optimal", InitKind::optimal}},
      InitKind::zero);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const std::string key = msg.substr(0, msg.find(' '));
    r.fail("solver", key, msg);
  }
}

void read_sweep(const Reader& r, Scenario& sc) {
  auto& w = sc.sweep;
  if (r.has("sweep", "grids")) w.grids = r.integers("sweep", "grids");
  if (r.has("sweep", "steps")) w.steps = r.integers("sweep", "steps");
  r.integer("sweep", "reps", w.reps);
  r.number("sweep", "amplitude", w.amplitude);
  r.number("sweep", "min_rep_ms", w.min_rep_ms);
  if (w.grids.empty()) r.fail("sweep", "grids", "empty list");
  if (w.steps.size() != w.grids.size())
    r.fail("sweep", "steps", "needs one entry per grid");
  for (std::size_t i = 0; i < w.grids.size(); ++i) {
    // Evenly spaced stages need a spacing of at least 2.
    if (w.steps[i] < 0 || w.grids[i] < 2 * (w.steps[i] + 1))
      r.fail("sweep", "steps",
             "grid " + std::to_string(w.grids[i]) + " cannot hold " +
                 std::to_string(w.steps[i]) + " constraints spaced k >= 2 apart");
  }
  if (w.reps < 1) r.fail("sweep", "reps", "must be at least 1");
  if (w.min_rep_ms < 0.0) r.fail("sweep", "min_rep_ms", "must be non-negative");
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& path) {
  const std::string file = path.string();
  if (!std::filesystem::is_regular_file(path))
    throw ConfigError(file, 0, "", "cannot open config file");
  pt::ptree tree;
  try {
    pt::read_ini(file, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(file, static_cast<int>(e.line()), "", e.message());
  }
  const Reader r(file, tree, key_lines(path));
  r.check_schema();

  Scenario sc;
  sc.config_path = file;
  read_model(r, sc);
  read_constraints(r, sc);
  read_solver(r, sc);
  read_sweep(r, sc);
  if (r.has("output", "dir")) sc.out_dir = r.single("output", "dir");

  // Let the model builder validate the schedule and dimensions.
  try {
    (void)build_problem(sc);
  } catch (const UnsupportedConstraintError& e) {
    r.fail("constraints", "stages", e.what());
  } catch (const DimensionError& e) {
    r.fail("model", r.has("model", "x_init") ? "x_init" : "", e.what());
  } catch (const std::invalid_argument& e) {
    r.fail("constraints", "", e.what());
  }
  return sc;
}

OcpProblem build_problem(const Scenario& sc) {
  ModelParams p = sc.params;
  std::mt19937_64 rng(sc.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  if (sc.random_x_init) {
    const int nq = sc.model == "double_integrator" ? p.dim
                   : sc.model == "cartpole"        ? 2
                                                   : 1;
    p.x_init = Vector::NullaryExpr(2 * nq, [&] { return unit(rng); });
  }
  if (sc.random_targets) {
    for (auto& c : p.constraints)
      c.targets = Vector::NullaryExpr(c.targets.size(), [&] { return unit(rng); });
  }
  return make_model(sc.model, p);
}

OcpProblem build_scaling_problem(const Scenario& sc, int horizon, int steps) {
  Scenario s = sc;
  s.params.horizon = horizon;
  s.random_targets = false;
  ConstraintSpec base;
  if (!sc.params.constraints.empty()) base = sc.params.constraints.front();
  const int per = base.kind == ConstraintKind::endpoint
                      ? 1
                      : static_cast<int>(base.coordinates.size());
  s.params.constraints.clear();
  for (int j = 0; j < steps; ++j) {
    ConstraintSpec c = base;
    c.stage = static_cast<int>(std::lround(static_cast<double>(j + 1) * horizon /
                                           (steps + 1)));
    c.targets = Vector::Constant(per, j % 2 == 0 ? sc.sweep.amplitude
                                                 : -sc.sweep.amplitude);
    s.params.constraints.push_back(c);
  }
  return build_problem(s);
}

}  // namespace psr::bench
