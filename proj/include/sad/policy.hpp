#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "sad/a2c.hpp"
#include "sad/env.hpp"

namespace sad {

enum class PolicyTag { Maintain, Random, A2cDiscrete, A2cContinuous };
std::string_view to_string(PolicyTag t);
std::optional<PolicyTag> parse_policy_tag(std::string_view s);
// a2c_continuous is the only tag that runs in continuous mode.
ActionMode mode_of(PolicyTag t);

struct ContinuousAction {
  double accel = 0.0;
  double steer_rate = 0.0;
};
using AgentAction = std::variant<HighLevelAction, ContinuousAction>;

// Stateless across calls; all randomness comes from the caller's rng, so one
// instance can serve several threads.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyTag tag() const = 0;
  virtual bool stochastic() const = 0;
  virtual AgentAction act(const Observation& obs, std::mt19937_64& rng) const = 0;
};

class MaintainPolicy final : public Policy {
 public:
  PolicyTag tag() const override { return PolicyTag::Maintain; }
  bool stochastic() const override { return false; }
  AgentAction act(const Observation&, std::mt19937_64&) const override { return HighLevelAction{}; }
};

// Uniform over the 12 joint options.
class RandomPolicy final : public Policy {
 public:
  PolicyTag tag() const override { return PolicyTag::Random; }
  bool stochastic() const override { return true; }
  AgentAction act(const Observation& obs, std::mt19937_64& rng) const override;
};

HighLevelAction random_action(std::mt19937_64& rng);

// Trained A2C network. Greedy picks the mode of each head (or the Gaussian
// mean); otherwise actions are sampled.
class A2cPolicy final : public Policy {
 public:
  A2cPolicy(ActorCritic net, std::vector<double> params, ObsScaling scaling, VehicleParams vehicle,
            double log_std_min, bool greedy);
  PolicyTag tag() const override;
  bool stochastic() const override { return !greedy_; }
  AgentAction act(const Observation& obs, std::mt19937_64& rng) const override;

 private:
  ActorCritic net_;
  std::vector<double> params_;
  ObsScaling scaling_;
  VehicleParams vehicle_;
  double log_std_min_;
  bool greedy_;
};

// ---- checkpoints ----

struct TrainProgress {
  std::uint64_t substeps = 0;
  std::uint64_t episodes = 0;
  std::uint64_t updates = 0;
};

struct Checkpoint {
  static constexpr int kVersion = 1;
  PolicyTag tag = PolicyTag::A2cDiscrete;
  int obs_dim = Observation::kDim;
  std::vector<int> hidden{64, 64};
  std::vector<double> params;
  std::vector<double> optimizer;  // RMSProp square averages
  TrainProgress progress{};
  std::uint64_t seed = 0;
  // Serialized std::mt19937_64 states for exact resume.
  std::string scenario_rng;
  std::string action_rng;
  // Rollout collected since the last update (checkpoints are taken at
  // episode boundaries, so this is all the in-flight learner state).
  std::vector<Transition> pending;
};

std::string checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(std::string_view text);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::unique_ptr<Policy> make_baseline(PolicyTag tag);
// Greedy A2C policy from a checkpoint.
std::unique_ptr<Policy> make_policy(const Checkpoint& c, const EnvConfig& env, const A2cConfig& a2c,
                                    const VehicleParams& vehicle = {}, bool greedy = true);

std::string rng_state(const std::mt19937_64& rng);
std::mt19937_64 rng_from_state(const std::string& s);

}  // namespace sad
