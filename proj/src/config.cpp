#include "sad/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "sad/error.hpp"
#include "sad/evaluation.hpp"
#include "sad/scenario_io.hpp"

namespace sad {

namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

double to_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw SchemaError(where, "expected a number, got '" + s + "'");
  return v;
}

template <class Int>
Int to_int(const std::string& s, const std::string& where) {
  Int v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw SchemaError(where, "expected an integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& s, const std::string& where) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw SchemaError(where, "expected true/false, got '" + s + "'");
}

std::string b(bool v) { return v ? "true" : "false"; }

#define DBL(sec, name, expr)                                                                        \
  Field {                                                                                           \
    sec, name, [](const RunConfig& c) { return format_number(c.expr); },                            \
        [](RunConfig& c, const std::string& v) { c.expr = to_double(v, sec "." name); }              \
  }
#define INT(sec, name, expr, T)                                                                     \
  Field {                                                                                           \
    sec, name, [](const RunConfig& c) { return std::to_string(c.expr); },                           \
        [](RunConfig& c, const std::string& v) { c.expr = to_int<T>(v, sec "." name); }              \
  }
#define BOOL(sec, name, expr)                                                                       \
  Field {                                                                                           \
    sec, name, [](const RunConfig& c) { return b(c.expr); },                                        \
        [](RunConfig& c, const std::string& v) { c.expr = to_bool(v, sec "." name); }                \
  }
#define RANGE(name, expr) DBL("generate", name "_min", expr.lo), DBL("generate", name "_max", expr.hi)

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      Field{"policy", "type", [](const RunConfig& c) { return std::string(to_string(c.policy)); },
            [](RunConfig& c, const std::string& v) {
              const auto t = parse_policy_tag(v);
              if (!t) throw SchemaError("policy.type", "unknown policy '" + v + "'");
              c.policy = *t;
            }},
      BOOL("policy", "greedy_eval", greedy_eval),

      DBL("sim", "decision_tick", env.sim.decision_tick),
      DBL("sim", "standstill_speed", env.sim.standstill_speed),
      DBL("sim", "standstill_time", env.sim.standstill_time),

      DBL("pilot", "lane_change_time", env.sim.pilot.lane_change_time),
      DBL("pilot", "accel_accelerate", env.sim.pilot.option_accel[0]),
      DBL("pilot", "accel_maintain", env.sim.pilot.option_accel[1]),
      DBL("pilot", "accel_brake", env.sim.pilot.option_accel[2]),
      DBL("pilot", "accel_hard_brake", env.sim.pilot.option_accel[3]),
      DBL("pilot", "lateral_pole", env.sim.pilot.lateral_pole),
      DBL("pilot", "schedule_speed_floor", env.sim.pilot.schedule_speed_floor),

      BOOL("shield", "enabled", env.shield.enabled),
      DBL("shield", "horizon", env.shield.horizon),

      DBL("reward", "goal", env.reward.goal),
      DBL("reward", "collision", env.reward.collision),
      DBL("reward", "offroad", env.reward.offroad),
      DBL("reward", "timeout", env.reward.timeout),
      DBL("reward", "standstill", env.reward.standstill),

      DBL("scaling", "speed", env.scaling.speed),
      DBL("scaling", "goal_distance", env.scaling.goal_distance),
      DBL("scaling", "rel_distance", env.scaling.rel_distance),
      DBL("scaling", "rel_speed", env.scaling.rel_speed),

      DBL("a2c", "gamma", a2c.gamma),
      INT("a2c", "n_steps", a2c.n_steps, int),
      DBL("a2c", "learning_rate", a2c.learning_rate),
      DBL("a2c", "entropy_coef", a2c.entropy_coef),
      DBL("a2c", "value_coef", a2c.value_coef),
      DBL("a2c", "max_grad_norm", a2c.max_grad_norm),
      DBL("a2c", "rms_alpha", a2c.rms_alpha),
      DBL("a2c", "rms_eps", a2c.rms_eps),
      Field{"a2c", "hidden",
            [](const RunConfig& c) {
              std::string s;
              for (std::size_t k = 0; k < c.a2c.hidden.size(); ++k) s += (k ? "," : "") + std::to_string(c.a2c.hidden[k]);
              return s;
            },
            [](RunConfig& c, const std::string& v) {
              c.a2c.hidden.clear();
              std::stringstream ss(v);
              std::string item;
              while (std::getline(ss, item, ',')) c.a2c.hidden.push_back(to_int<int>(item, "a2c.hidden"));
            }},
      DBL("a2c", "log_std_init", a2c.log_std_init),
      DBL("a2c", "log_std_min", a2c.log_std_min),

      INT("train", "budget", budget, std::uint64_t),
      INT("train", "seed", seed, std::uint64_t),
      INT("train", "checkpoint_every", checkpoint_every, std::uint64_t),

      INT("eval", "ma_window", ma_window, std::size_t),
      INT("eval", "stochastic_seeds", stochastic_seeds, int),

      INT("road", "lane_count", gen.road.lane_count, int),
      DBL("road", "lane_width", gen.road.lane_width),
      DBL("road", "length", gen.road.length),

      DBL("generate", "dt", gen.dt),
      DBL("generate", "duration", gen.duration),
      DBL("generate", "ego_start_x", gen.ego_start_x),
      DBL("generate", "goal_fraction", gen.goal_fraction),
      INT("generate", "max_attempts", gen.max_attempts, int),
      RANGE("ego_speed", gen.ego_speed),
      RANGE("gap", gen.gap),
      RANGE("challenger_decel", gen.challenger_decel),
      RANGE("cutin_lateral_duration", gen.cutin_lateral_duration),
      RANGE("maneuver_onset", gen.maneuver_onset),
      RANGE("cutout_spacing", gen.cutout_spacing),
      RANGE("easy_speed_surplus", gen.easy_speed_surplus),
  };
  return f;
}

#undef DBL
#undef INT
#undef BOOL
#undef RANGE

}  // namespace

RunConfig parse_config(std::string_view ini) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream is{std::string(ini)};
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw SchemaError("config line " + std::to_string(e.line()), e.message());
  }
  std::map<std::string, const Field*> index;
  for (const auto& f : fields()) index[f.section + "." + f.key] = &f;

  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw SchemaError(section, "top-level keys are not allowed; use a [section]");
    for (const auto& [key, value] : body) {
      const auto it = index.find(section + "." + key);
      if (it == index.end()) throw SchemaError(section + "." + key, "unknown key");
      it->second->set(c, value.get_value<std::string>());
    }
  }
  // The generator verifies with the same stack the agents run on.
  c.gen.env = c.env;
  try {
    c.a2c.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError("a2c", e.what());
  }
  c.gen.validate();
  if (c.ma_window < 1) throw SchemaError("eval.ma_window", "must be >= 1");
  if (c.stochastic_seeds < 1) throw SchemaError("eval.stochastic_seeds", "must be >= 1");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

std::string config_to_ini(const RunConfig& c) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      out += (section.empty() ? "[" : "\n[") + f.section + "]\n";
      section = f.section;
    }
    out += f.key + " = " + f.get(c) + "\n";
  }
  return out;
}

}  // namespace sad
