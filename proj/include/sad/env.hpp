#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sad/scenario.hpp"
#include "sad/shield.hpp"
#include "sad/sim.hpp"

namespace sad {

enum class ActionMode { Hierarchical, Continuous };

struct RewardTable {
  double goal = 1.0;
  double collision = -1.0;
  double offroad = -1.0;
  double timeout = -0.5;
  double standstill = -0.5;

  double of(TerminationReason r) const;
};

// Min-max constants mapping raw features to [-1, 1].
struct ObsScaling {
  double speed = 50.0;
  double goal_distance = 1000.0;
  double rel_distance = 200.0;
  double rel_speed = 30.0;
};

struct NeighborSlot {
  bool present = false;
  double rel_s_x = 0.0;
  double rel_v = 0.0;
  bool operator==(const NeighborSlot&) const = default;
};

// Slot order: ego-lead, ego-rear, left-lead, left-rear, right-lead, right-rear.
enum class Slot { EgoLead = 0, EgoRear, LeftLead, LeftRear, RightLead, RightRear };
inline constexpr int kSlotCount = 6;
inline constexpr double kAbsentDistance = 200.0;

struct Observation {
  double ego_v = 0.0;
  int ego_lane = 0;
  int lane_count = 3;
  double lane_width = 3.5;
  double lateral_offset = 0.0;
  double dist_to_goal = 0.0;
  std::array<NeighborSlot, kSlotCount> neighbors{};

  static constexpr int kDim = 4 + 3 * kSlotCount;
  // Feature vector consumed by agents, every entry in [-1, 1].
  std::vector<double> scaled(const ObsScaling& s) const;
  const NeighborSlot& slot(Slot s) const { return neighbors[static_cast<std::size_t>(s)]; }
  bool operator==(const Observation&) const = default;
};

// Nearest challenger per (lane, ahead/behind) cell; lanes assigned by
// lane_of on the challenger center, the ego lane by nearest_lane.
Observation encode_observation(const Scenario& sc, const VehicleState& ego, double t);

struct EnvConfig {
  ActionMode mode = ActionMode::Hierarchical;
  SimConfig sim{};
  ShieldConfig shield{};
  RewardTable reward{};
  ObsScaling scaling{};
  bool record_trace = false;
};

struct StepInfo {
  bool shield_overridden = false;
  ShieldReason shield_reason = ShieldReason::None;
  double t = 0.0;
};

struct StepOutcome {
  Observation obs{};
  double reward = 0.0;
  bool terminated = false;
  std::optional<TerminationReason> reason;
  StepInfo info{};
};

// One row per simulation step.
struct TraceRecord {
  double t = 0.0;
  VehicleState ego{};
  std::optional<HighLevelAction> action;  // hierarchical mode
  double accel = 0.0;
  double steer_rate = 0.0;
  bool shield_overridden = false;
  struct Other {
    std::string id;
    double s_x, s_y, psi, length, width;
  };
  std::vector<Other> challengers;
  std::optional<TerminationReason> reason;
};

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> trace_from_jsonl(std::string_view text);

// Episodic environment over a scenario. Single-threaded; use one instance per
// thread.
class Env {
 public:
  explicit Env(EnvConfig cfg);

  const EnvConfig& config() const { return cfg_; }
  // Throws InvariantError if the scenario is invalid.
  Observation reset(std::shared_ptr<const Scenario> scenario, std::uint64_t seed);
  // Hierarchical mode only. One call is one decision tick.
  StepOutcome step(const HighLevelAction& action);
  // Continuous mode only. One call is one simulation step.
  StepOutcome step_continuous(double accel, double steer_rate);

  bool has_episode() const { return scenario_ != nullptr; }
  bool terminated() const { return done_; }
  const EgoSim& state() const { return sim_; }
  const Scenario& scenario() const { return *scenario_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<TraceRecord>& trace() const { return trace_; }

 private:
  void check_ready(ActionMode mode) const;
  void record(const std::optional<HighLevelAction>& action, double accel, double steer_rate,
              bool overridden, std::optional<TerminationReason> reason);
  StepOutcome finish(std::optional<TerminationReason> reason, StepInfo info);

  EnvConfig cfg_;
  std::shared_ptr<const Scenario> scenario_;
  EgoSim sim_{};
  std::uint64_t seed_ = 0;
  bool done_ = false;
  std::vector<TraceRecord> trace_;
};

}  // namespace sad
