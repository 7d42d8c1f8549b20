#pragma once

#include "sad/sim.hpp"

namespace sad {

struct ShieldConfig {
  bool enabled = true;
  // Effective horizon is max(horizon, lane-change duration).
  double horizon = 5.0;
};

enum class ShieldReason { None, PredictedCollision, PredictedOffroad, NoAdjacentLane };
std::string_view to_string(ShieldReason r);

struct ShieldVerdict {
  HighLevelAction approved{};
  bool overridden = false;
  ShieldReason reason = ShieldReason::None;
};

enum class RolloutOutcome { Safe, Collision, Offroad };

// Forward simulation of `action` re-issued every decision tick over the
// shield horizon, against the replayed challengers. Stops early (safe) when
// the goal is reached or the scenario ends.
RolloutOutcome predict(const HighLevelAction& action, const EgoSim& sim, const Scenario& sc,
                       const SimConfig& sim_cfg, const ShieldConfig& cfg);

// Vetoes high-risk options. Candidates in order: the proposal, then
// (same lateral, hard brake), then (center, hard brake); the first safe one is
// approved. When none is safe, (center, hard brake) is approved.
ShieldVerdict screen(const HighLevelAction& proposed, const EgoSim& sim, const Scenario& sc,
                     const SimConfig& sim_cfg, const ShieldConfig& cfg);

}  // namespace sad
