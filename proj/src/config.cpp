#include "mlasce/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "mlasce/bench.hpp"
#include "mlasce/errors.hpp"
#include "mlasce/external_simulator.hpp"

namespace mlasce {

namespace {

using json = nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: '") + key + "' has the wrong type");
  }
}

Eigen::VectorXd vector_of(const json& j, const char* key) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string("config: '") + key + "' must be a non-empty array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string("config: '") + key + "' must hold numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

SimulatorSpec parse_simulator(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
  SimulatorSpec s;
  if (j.contains("builtin")) {
    s.builtin = get_or<std::string>(j, "builtin", "");
    s.builtin_level = get_or<int>(j, "level", 0);
    const int max_level = s.builtin == "toy3" ? 3 : s.builtin == "toy5" ? 5 : 0;
    if (max_level == 0) throw ConfigError("config: " + where + ": unknown builtin '" + s.builtin + "'");
    if (s.builtin_level < 1 || s.builtin_level > max_level)
      throw ConfigError("config: " + where + ": builtin level out of range");
  } else if (j.contains("command")) {
    s.command = get_or<std::string>(j, "command", "");
    if (s.command.empty()) throw ConfigError("config: " + where + ": empty command");
  } else {
    throw ConfigError("config: " + where + " needs 'builtin' or 'command'");
  }
  return s;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  RunConfig c;
  if (!j.contains("levels") || !j["levels"].is_array() || j["levels"].empty())
    throw ConfigError("config: 'levels' must be a non-empty array");
  for (std::size_t l = 0; l < j["levels"].size(); ++l) {
    const json& lj = j["levels"][l];
    const std::string where = "levels[" + std::to_string(l) + "]";
    if (!lj.is_object()) throw ConfigError("config: " + where + " must be an object");
    LevelConfig lc;
    if (!lj.contains("cost")) throw ConfigError("config: " + where + ".cost is required");
    lc.cost = get_or<double>(lj, "cost", 0.0);
    lc.accuracy = get_or<double>(lj, "accuracy", 0.0);
    if (!lj.contains("accuracy")) lc.accuracy = std::ldexp(1.0, -static_cast<int>(l));
    lc.nu = get_or<double>(lj, "nu", 2.5);
    if (lj.contains("simulator")) lc.simulator = parse_simulator(lj["simulator"], where + ".simulator");
    c.levels.push_back(lc);
  }

  if (j.contains("domain")) {
    const json& d = j["domain"];
    if (!d.is_object() || !d.contains("lower") || !d.contains("upper"))
      throw ConfigError("config: 'domain' needs 'lower' and 'upper'");
    c.domain = Domain{vector_of(d["lower"], "domain.lower"), vector_of(d["upper"], "domain.upper")};
  } else {
    c.domain = Domain::interval(0.0, std::numbers::pi);
  }
  c.budget = get_or<double>(j, "budget", 0.0);
  if (j.contains("weights")) {
    const json& w = j["weights"];
    if (w.is_string()) {
      if (w.get<std::string>() != "cost") throw ConfigError("config: 'weights' must be \"cost\" or an array");
    } else {
      const Eigen::VectorXd v = vector_of(w, "weights");
      c.weights.assign(v.data(), v.data() + v.size());
      if (c.weights.size() != c.levels.size()) throw ConfigError("config: one weight per level required");
    }
  }
  c.nugget = get_or<double>(j, "nugget", c.nugget);
  c.stabilizing_nugget = get_or<double>(j, "stabilizing_nugget", c.stabilizing_nugget);
  c.grid_size = get_or<Eigen::Index>(j, "grid_size", c.grid_size);
  c.max_candidates = get_or<Eigen::Index>(j, "max_candidates", c.max_candidates);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.alpha = get_or<double>(j, "alpha", c.alpha);
  c.timeout_s = get_or<double>(j, "timeout_s", c.timeout_s);
  if (j.contains("truth")) {
    c.truth = parse_simulator(j["truth"], "truth");
    if (c.truth->builtin.empty()) throw ConfigError("config: 'truth' must be a builtin");
  }

  try {
    c.domain.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (std::size_t l = 0; l < c.levels.size(); ++l) {
    const auto& lv = c.levels[l];
    if (!(lv.cost > 0.0)) throw ConfigError("config: costs must be > 0");
    if (!(lv.accuracy > 0.0) || lv.accuracy > 1.0) throw ConfigError("config: accuracy must lie in (0, 1]");
    if (l > 0 && !(lv.cost > c.levels[l - 1].cost)) throw ConfigError("config: costs must be strictly increasing");
    if (l > 0 && !(lv.accuracy < c.levels[l - 1].accuracy))
      throw ConfigError("config: accuracies must be strictly decreasing");
    try {
      smoothness_from_value(lv.nu);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  for (const double w : c.weights)
    if (!(w > 0.0)) throw ConfigError("config: weights must be > 0");
  if (!(c.nugget >= 0.0) || !(c.stabilizing_nugget >= 0.0)) throw ConfigError("config: nuggets must be >= 0");
  if (c.grid_size < 2) throw ConfigError("config: grid_size must be >= 2");
  if (!(c.alpha > 0.0)) throw ConfigError("config: alpha must be > 0");
  if (!(c.timeout_s > 0.0)) throw ConfigError("config: timeout_s must be > 0");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Simulator make_simulator(const SimulatorSpec& spec, double timeout_s) {
  if (!spec.builtin.empty()) {
    const int level = spec.builtin_level;
    if (spec.builtin == "toy3") return [level](const Eigen::VectorXd& x) { return toy3_f(level, x(0)); };
    return [level](const Eigen::VectorXd& x) { return toy5_f(level, x(0)); };
  }
  return [cmd = spec.command, timeout_s](const Eigen::VectorXd& x) {
    return external_simulator_eval(cmd, x, timeout_s);
  };
}

FidelityLadder build_ladder(const RunConfig& config) {
  FidelityLadder ladder;
  ladder.domain = config.domain;
  for (std::size_t l = 0; l < config.levels.size(); ++l) {
    const auto& lc = config.levels[l];
    if (!lc.simulator) throw ConfigError("config: levels[" + std::to_string(l) + "].simulator is required");
    if (!lc.simulator->builtin.empty() && config.domain.dim() != 1)
      throw ConfigError("config: builtin simulators are one-dimensional");
    ladder.levels.push_back({make_simulator(*lc.simulator, config.timeout_s), lc.cost, lc.accuracy});
  }
  return ladder;
}

MlasceOptions build_mlasce_options(const RunConfig& config) {
  MlasceOptions o;
  o.weights = config.weights;
  for (const auto& lc : config.levels) o.nu.push_back(smoothness_from_value(lc.nu));
  o.seed = config.seed;
  o.tau2 = config.nugget;
  o.tau2_s = config.stabilizing_nugget;
  o.n_grid = config.grid_size;
  o.max_candidates = config.max_candidates;
  return o;
}

PlanParams build_plan_params(const RunConfig& config) {
  PlanParams p;
  for (const auto& lc : config.levels) {
    p.h.push_back(lc.accuracy);
    p.t.push_back(lc.cost);
    p.nu.push_back(lc.nu);
  }
  p.alpha = config.alpha;
  p.d = static_cast<double>(config.domain.dim());
  p.T = config.budget;
  p.seed = config.seed;
  return p;
}

}  // namespace mlasce
