#include "sad/policy.hpp"

#include <sstream>

#include "json.hpp"
#include "sad/error.hpp"
#include "sad/scenario_io.hpp"

namespace sad {

using nlohmann::ordered_json;

std::string_view to_string(PolicyTag t) {
  switch (t) {
    case PolicyTag::Maintain: return "maintain";
    case PolicyTag::Random: return "random";
    case PolicyTag::A2cDiscrete: return "a2c_discrete";
    case PolicyTag::A2cContinuous: return "a2c_continuous";
  }
  return "?";
}

std::optional<PolicyTag> parse_policy_tag(std::string_view s) {
  for (PolicyTag t : {PolicyTag::Maintain, PolicyTag::Random, PolicyTag::A2cDiscrete, PolicyTag::A2cContinuous})
    if (s == to_string(t)) return t;
  if (s == "a2c") return PolicyTag::A2cDiscrete;
  return std::nullopt;
}

ActionMode mode_of(PolicyTag t) {
  return t == PolicyTag::A2cContinuous ? ActionMode::Continuous : ActionMode::Hierarchical;
}

HighLevelAction random_action(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, kLateralCount * kLongitudinalCount - 1);
  return HighLevelAction::from_index(d(rng));
}

AgentAction RandomPolicy::act(const Observation&, std::mt19937_64& rng) const { return random_action(rng); }

A2cPolicy::A2cPolicy(ActorCritic net, std::vector<double> params, ObsScaling scaling, VehicleParams vehicle,
                     double log_std_min, bool greedy)
    : net_(std::move(net)),
      params_(std::move(params)),
      scaling_(scaling),
      vehicle_(vehicle),
      log_std_min_(log_std_min),
      greedy_(greedy) {
  if (params_.size() != net_.param_count())
    throw InvariantError("policy parameter count does not match the network");
}

PolicyTag A2cPolicy::tag() const {
  return net_.head() == HeadKind::Discrete ? PolicyTag::A2cDiscrete : PolicyTag::A2cContinuous;
}

AgentAction A2cPolicy::act(const Observation& obs, std::mt19937_64& rng) const {
  const auto x = obs.scaled(scaling_);
  const auto mu = net_.actor().forward(params_, x);
  if (net_.head() == HeadKind::Discrete) {
    const auto a = greedy_ ? greedy_discrete(mu) : sample_discrete(mu, rng);
    return HighLevelAction::from_indices(a[0], a[1]);
  }
  std::array<double, kGaussianDim> u{mu[0], mu[1]};
  if (!greedy_) u = sample_gaussian(mu, gaussian_log_std(params_, net_, log_std_min_), rng);
  const auto c = squash_to_actuators(u, vehicle_);
  return ContinuousAction{c[0], c[1]};
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 rng_from_state(const std::string& s) {
  std::mt19937_64 rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw SchemaError("rng", "malformed generator state");
  return rng;
}

std::string checkpoint_to_json(const Checkpoint& c) {
  ordered_json j;
  j["version"] = Checkpoint::kVersion;
  j["policy"] = std::string(to_string(c.tag));
  j["obs_dim"] = c.obs_dim;
  j["hidden"] = c.hidden;
  j["seed"] = c.seed;
  j["progress"] = {{"substeps", c.progress.substeps},
                   {"episodes", c.progress.episodes},
                   {"updates", c.progress.updates}};
  j["rng"] = {{"scenario", c.scenario_rng}, {"action", c.action_rng}};
  j["params"] = c.params;
  j["optimizer"] = c.optimizer;
  auto pending = ordered_json::array();
  for (const auto& t : c.pending)
    pending.push_back(ordered_json{{"obs", t.obs}, {"discrete", t.discrete}, {"u", t.u}, {"reward", t.reward},
                                   {"done", t.done}});
  j["pending"] = pending;
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw SchemaError("checkpoint", e.what());
  }
  Checkpoint c;
  try {
    const int version = j.at("version").get<int>();
    if (version != Checkpoint::kVersion)
      throw SchemaError("version", "unsupported checkpoint version " + std::to_string(version));
    const auto tag = parse_policy_tag(j.at("policy").get<std::string>());
    if (!tag || *tag == PolicyTag::Maintain || *tag == PolicyTag::Random)
      throw SchemaError("policy", "checkpoint must hold an a2c policy");
    c.tag = *tag;
    c.obs_dim = j.at("obs_dim").get<int>();
    c.hidden = j.at("hidden").get<std::vector<int>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("progress");
    c.progress = {p.at("substeps").get<std::uint64_t>(), p.at("episodes").get<std::uint64_t>(),
                  p.at("updates").get<std::uint64_t>()};
    c.scenario_rng = j.at("rng").at("scenario").get<std::string>();
    c.action_rng = j.at("rng").at("action").get<std::string>();
    c.params = j.at("params").get<std::vector<double>>();
    c.optimizer = j.at("optimizer").get<std::vector<double>>();
    for (const auto& t : j.at("pending"))
      c.pending.push_back(Transition{t.at("obs").get<std::vector<double>>(),
                                     t.at("discrete").get<std::array<int, 2>>(),
                                     t.at("u").get<std::array<double, 2>>(), t.at("reward").get<double>(),
                                     t.at("done").get<bool>()});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("checkpoint", e.what());
  }
  const ActorCritic net(c.tag == PolicyTag::A2cContinuous ? HeadKind::Gaussian : HeadKind::Discrete, c.obs_dim,
                        c.hidden);
  if (c.params.size() != net.param_count())
    throw SchemaError("params", "expected " + std::to_string(net.param_count()) + " values");
  if (!c.optimizer.empty() && c.optimizer.size() != c.params.size())
    throw SchemaError("optimizer", "size does not match params");
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_to_json(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_text_file(path)); }

std::unique_ptr<Policy> make_baseline(PolicyTag tag) {
  switch (tag) {
    case PolicyTag::Maintain: return std::make_unique<MaintainPolicy>();
    case PolicyTag::Random: return std::make_unique<RandomPolicy>();
    default: throw std::invalid_argument("not a baseline policy: " + std::string(to_string(tag)));
  }
}

std::unique_ptr<Policy> make_policy(const Checkpoint& c, const EnvConfig& env, const A2cConfig& a2c,
                                    const VehicleParams& vehicle, bool greedy) {
  ActorCritic net(c.tag == PolicyTag::A2cContinuous ? HeadKind::Gaussian : HeadKind::Discrete, c.obs_dim,
                  c.hidden);
  return std::make_unique<A2cPolicy>(std::move(net), c.params, env.scaling, vehicle, a2c.log_std_min, greedy);
}

}  // namespace sad
