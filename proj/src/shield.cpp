#include "sad/shield.hpp"

#include <algorithm>
#include <cmath>

namespace sad {

std::string_view to_string(ShieldReason r) {
  switch (r) {
    case ShieldReason::None: return "none";
    case ShieldReason::PredictedCollision: return "predicted_collision";
    case ShieldReason::PredictedOffroad: return "predicted_offroad";
    case ShieldReason::NoAdjacentLane: return "no_adjacent_lane";
  }
  return "?";
}

RolloutOutcome predict(const HighLevelAction& action, const EgoSim& start, const Scenario& sc,
                       const SimConfig& sim_cfg, const ShieldConfig& cfg) {
  const double horizon = std::max(cfg.horizon, sim_cfg.pilot.lane_change_time);
  const int steps = static_cast<int>(std::lround(horizon / sc.dt));
  const int end = sc.step_count();
  EgoSim sim = start;
  for (int i = 0; i < steps && sim.step < end; ++i) {
    advance_with_pilot(sc, sim, action, sim_cfg);
    if (ego_collides(sc, sim.ego, sim.time(sc))) return RolloutOutcome::Collision;
    if (ego_offroad(sc, sim.ego)) return RolloutOutcome::Offroad;
    if (ego_in_goal(sc, sim.ego)) break;
  }
  return RolloutOutcome::Safe;
}

namespace {

bool has_adjacent(const EgoSim& sim, const Scenario& sc, Lateral lateral) {
  if (lateral == Lateral::Center) return true;
  // During a committed lane change the lateral choice is measured from the
  // lane being entered.
  const double t = sim.time(sc);
  const int lane = sim.plan && sim.plan->active_at(t) ? sim.plan->target_lane
                                                      : nearest_lane(sim.ego.s_y, sc.road);
  return sc.road.valid_lane(lateral == Lateral::Left ? lane + 1 : lane - 1);
}

}  // namespace

ShieldVerdict screen(const HighLevelAction& proposed, const EgoSim& sim, const Scenario& sc,
                     const SimConfig& sim_cfg, const ShieldConfig& cfg) {
  const HighLevelAction fallback{Lateral::Center, Longitudinal::HardBrake};
  auto verdict = [&](HighLevelAction approved, ShieldReason reason) {
    const bool changed = !(approved == proposed);
    return ShieldVerdict{approved, changed, changed ? reason : ShieldReason::None};
  };

  HighLevelAction candidate = proposed;
  ShieldReason reason = ShieldReason::None;
  if (!has_adjacent(sim, sc, proposed.lateral)) {
    candidate.lateral = Lateral::Center;
    reason = ShieldReason::NoAdjacentLane;
  }

  const RolloutOutcome first = predict(candidate, sim, sc, sim_cfg, cfg);
  if (first == RolloutOutcome::Safe) return verdict(candidate, reason);
  if (reason == ShieldReason::None)
    reason = first == RolloutOutcome::Collision ? ShieldReason::PredictedCollision
                                                : ShieldReason::PredictedOffroad;

  for (const HighLevelAction alt : {HighLevelAction{candidate.lateral, Longitudinal::HardBrake}, fallback}) {
    if (alt == candidate) continue;
    if (predict(alt, sim, sc, sim_cfg, cfg) == RolloutOutcome::Safe) return verdict(alt, reason);
  }
  return verdict(fallback, reason);
}

}  // namespace sad
