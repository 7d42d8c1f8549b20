#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sad/road.hpp"

namespace sad {

enum class ScenarioKind { TypeA, TypeB, Cutout, RealRoad, Other };

std::string_view to_string(ScenarioKind k);
// Accepts canonical names plus the short CLI spellings (a, b, cutout, realroad).
std::optional<ScenarioKind> parse_kind(std::string_view s);

struct TrajectoryPoint {
  double t = 0.0;
  double s_x = 0.0;
  double s_y = 0.0;
  double v = 0.0;
  double psi = 0.0;
  bool operator==(const TrajectoryPoint&) const = default;
};

// Open-loop trajectory of one non-ego vehicle, sampled at the scenario dt.
struct ChallengerTrack {
  std::string id;
  double length = 4.5;
  double width = 1.8;
  std::vector<TrajectoryPoint> points;
  bool operator==(const ChallengerTrack&) const = default;
};

struct GoalRegion {
  double s_x_min = 0.0;
  double s_x_max = 0.0;
  // Empty means any lane.
  std::vector<int> allowed_lanes;

  bool any_lane() const { return allowed_lanes.empty(); }
  bool admits_lane(int lane) const;
  bool operator==(const GoalRegion&) const = default;
};

struct EgoStart {
  VehicleState state{};
  int lane = 0;
  bool operator==(const EgoStart&) const = default;
};

struct Scenario {
  std::string id;
  ScenarioKind kind = ScenarioKind::Other;
  RoadNetwork road{};
  double dt = 0.1;
  double duration = 20.0;
  EgoStart ego_start{};
  VehicleParams ego_params{};
  GoalRegion goal{};
  std::vector<ChallengerTrack> challengers;
  // Free-form numeric metadata (generator draws, seeds...).
  std::map<std::string, double> meta;

  // Number of simulation steps in [0, duration].
  int step_count() const;
  // Throws InvariantError describing the first broken invariant.
  void validate() const;
  bool operator==(const Scenario&) const = default;
};

// Open-loop replay: exact at grid times, linear in position and speed
// between samples, heading taken from the nearest sample, last sample held.
TrajectoryPoint challenger_state_at(const ChallengerTrack& track, double t);

Footprint footprint_of(const ChallengerTrack& track, const TrajectoryPoint& p);

// Throws InvariantError when the track is not strictly time-ordered at a
// constant spacing of `dt` or has fewer than two points.
void validate_track(const ChallengerTrack& track, double dt);

}  // namespace sad
