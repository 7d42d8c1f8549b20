#include "sad/sim.hpp"

#include <algorithm>
#include <cmath>

namespace sad {

std::string_view to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::GoalReached: return "GoalReached";
    case TerminationReason::Collision: return "Collision";
    case TerminationReason::Timeout: return "Timeout";
    case TerminationReason::Standstill: return "Standstill";
    case TerminationReason::Offroad: return "Offroad";
  }
  return "?";
}

std::optional<TerminationReason> parse_reason(std::string_view s) {
  for (int i = 0; i < kTerminationReasonCount; ++i) {
    const auto r = static_cast<TerminationReason>(i);
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

int steps_per_tick(const Scenario& sc, const SimConfig& cfg) {
  return std::max(1, static_cast<int>(std::lround(cfg.decision_tick / sc.dt)));
}

bool ego_collides(const Scenario& sc, const VehicleState& ego, double t) {
  const Footprint fp = footprint_of(ego, sc.ego_params);
  for (const auto& tr : sc.challengers)
    if (rectangles_overlap(fp, footprint_of(tr, challenger_state_at(tr, t)))) return true;
  return false;
}

bool ego_offroad(const Scenario& sc, const VehicleState& ego) {
  return offroad(footprint_of(ego, sc.ego_params), sc.road);
}

bool ego_in_goal(const Scenario& sc, const VehicleState& ego) {
  if (ego.s_x < sc.goal.s_x_min || ego.s_x > sc.goal.s_x_max) return false;
  const auto lane = lane_of(ego.s_y, sc.road);
  return lane && sc.goal.admits_lane(*lane);
}

std::optional<TerminationReason> check_termination(const Scenario& sc, const EgoSim& sim,
                                                   const SimConfig& cfg) {
  if (ego_collides(sc, sim.ego, sim.time(sc))) return TerminationReason::Collision;
  if (ego_offroad(sc, sim.ego)) return TerminationReason::Offroad;
  if (ego_in_goal(sc, sim.ego)) return TerminationReason::GoalReached;
  const int standstill_limit = static_cast<int>(std::lround(cfg.standstill_time / sc.dt));
  if (sim.standstill_steps >= standstill_limit) return TerminationReason::Standstill;
  if (sim.step >= sc.step_count()) return TerminationReason::Timeout;
  return std::nullopt;
}

void advance(const Scenario& sc, EgoSim& sim, double accel, double steer_rate, const SimConfig& cfg) {
  const auto& p = sc.ego_params;
  accel = std::clamp(accel, p.a_min, p.a_max);
  steer_rate = std::clamp(steer_rate, -p.vdelta_max, p.vdelta_max);
  sim.ego = bicycle_step(sim.ego, accel, steer_rate, sc.dt, p);
  ++sim.step;
  sim.standstill_steps = sim.ego.v < cfg.standstill_speed ? sim.standstill_steps + 1 : 0;
}

void advance_with_pilot(const Scenario& sc, EgoSim& sim, const HighLevelAction& action,
                        const SimConfig& cfg) {
  const double t = sim.time(sc);
  if (sim.step % steps_per_tick(sc, cfg) == 0 || !sim.plan)
    sim.plan = plan(action, sim.ego, sc.road, t, sim.plan, cfg.pilot);
  const ControlCommand cmd = control(*sim.plan, action.longitudinal, sim.ego, t, sc.ego_params, cfg.pilot);
  advance(sc, sim, cmd.accel, cmd.steer_rate, cfg);
}

}  // namespace sad
