#pragma once

#include <optional>
#include <string_view>

#include "sad/pilot.hpp"
#include "sad/scenario.hpp"

namespace sad {

enum class TerminationReason { GoalReached = 0, Collision = 1, Timeout = 2, Standstill = 3, Offroad = 4 };
inline constexpr int kTerminationReasonCount = 5;

std::string_view to_string(TerminationReason r);
std::optional<TerminationReason> parse_reason(std::string_view s);

struct SimConfig {
  double decision_tick = 1.0;      // s per high-level decision
  double standstill_speed = 0.1;   // m/s
  double standstill_time = 3.0;    // s
  PilotConfig pilot{};
};

// Mutable ego-side state of one simulated episode. Challengers are replayed
// from the scenario and carry no state.
struct EgoSim {
  VehicleState ego{};
  int step = 0;  // simulation steps since t = 0
  int standstill_steps = 0;
  std::optional<ManeuverPlan> plan;

  double time(const Scenario& sc) const { return step * sc.dt; }
  static EgoSim start(const Scenario& sc) { return EgoSim{sc.ego_start.state, 0, 0, std::nullopt}; }
  bool operator==(const EgoSim&) const = default;
};

int steps_per_tick(const Scenario& sc, const SimConfig& cfg);

bool ego_collides(const Scenario& sc, const VehicleState& ego, double t);
bool ego_offroad(const Scenario& sc, const VehicleState& ego);
bool ego_in_goal(const Scenario& sc, const VehicleState& ego);

// Termination of the state reached after a simulation step. Priority on
// ties: Collision > Offroad > GoalReached > Standstill > Timeout.
std::optional<TerminationReason> check_termination(const Scenario& sc, const EgoSim& sim,
                                                   const SimConfig& cfg);

// Advances one simulation step under raw actuator commands (clamped to the
// actuator envelope) and updates the standstill counter.
void advance(const Scenario& sc, EgoSim& sim, double accel, double steer_rate, const SimConfig& cfg);

// Re-plans at decision-tick boundaries, then advances one step with the
// pilot's command for `action`.
void advance_with_pilot(const Scenario& sc, EgoSim& sim, const HighLevelAction& action,
                        const SimConfig& cfg);

}  // namespace sad
