#include "sad/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "sad/error.hpp"

namespace sad {

namespace {
constexpr double kTimeTol = 1e-9;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}
}  // namespace

std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::TypeA: return "TypeA";
    case ScenarioKind::TypeB: return "TypeB";
    case ScenarioKind::Cutout: return "Cutout";
    case ScenarioKind::RealRoad: return "RealRoad";
    case ScenarioKind::Other: return "Other";
  }
  return "Other";
}

std::optional<ScenarioKind> parse_kind(std::string_view s) {
  const std::string k = lower(s);
  if (k == "typea" || k == "a") return ScenarioKind::TypeA;
  if (k == "typeb" || k == "b") return ScenarioKind::TypeB;
  if (k == "cutout" || k == "cut") return ScenarioKind::Cutout;
  if (k == "realroad" || k == "highd" || k == "real") return ScenarioKind::RealRoad;
  if (k == "other") return ScenarioKind::Other;
  return std::nullopt;
}

bool GoalRegion::admits_lane(int lane) const {
  return any_lane() ||
         std::find(allowed_lanes.begin(), allowed_lanes.end(), lane) != allowed_lanes.end();
}

int Scenario::step_count() const { return static_cast<int>(std::lround(duration / dt)); }

void validate_track(const ChallengerTrack& track, double dt) {
  const auto& pts = track.points;
  if (pts.size() < 2)
    throw InvariantError("challenger " + track.id + ": needs at least 2 points");
  if (!(track.length > 0.0 && track.width > 0.0))
    throw InvariantError("challenger " + track.id + ": dimensions must be > 0");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    if (!std::isfinite(p.t) || !std::isfinite(p.s_x) || !std::isfinite(p.s_y) ||
        !std::isfinite(p.v) || !std::isfinite(p.psi))
      throw InvariantError("challenger " + track.id + ": non-finite point");
    if (p.t < 0.0) throw InvariantError("challenger " + track.id + ": negative time");
    if (i > 0 && std::abs((p.t - pts[i - 1].t) - dt) > 1e-6)
      throw InvariantError("challenger " + track.id + ": samples not spaced at dt");
  }
}

void Scenario::validate() const {
  road.validate();
  ego_params.validate();
  if (!(dt > 0.0)) throw InvariantError("scenario: dt must be > 0");
  if (!(duration > 0.0)) throw InvariantError("scenario: duration must be > 0");
  const double ratio = duration / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6)
    throw InvariantError("scenario: duration is not an integer multiple of dt");
  if (!(goal.s_x_min < goal.s_x_max))
    throw InvariantError("scenario: goal needs s_x_min < s_x_max");
  for (int lane : goal.allowed_lanes)
    if (!road.valid_lane(lane)) throw InvariantError("scenario: goal lane out of range");
  if (!road.valid_lane(ego_start.lane))
    throw InvariantError("scenario: ego start lane out of range");
  const auto& e = ego_start.state;
  if (!(e.v >= 0.0) || std::abs(e.delta) > ego_params.delta_max)
    throw InvariantError("scenario: ego start state violates vehicle limits");

  const Footprint ego_fp = footprint_of(e, ego_params);
  for (const auto& track : challengers) {
    validate_track(track, dt);
    if (std::abs(track.points.front().t) > kTimeTol ||
        track.points.back().t < duration - 1e-6)
      throw InvariantError("challenger " + track.id + ": track does not span [0, duration]");
    if (rectangles_overlap(ego_fp, footprint_of(track, track.points.front())))
      throw InvariantError("challenger " + track.id + ": overlaps the ego at t=0");
  }
}

TrajectoryPoint challenger_state_at(const ChallengerTrack& track, double t) {
  const auto& pts = track.points;
  if (t <= pts.front().t) return pts.front();
  if (t >= pts.back().t) return pts.back();
  const double spacing = (pts.back().t - pts.front().t) / static_cast<double>(pts.size() - 1);
  const double pos = (t - pts.front().t) / spacing;
  auto i = static_cast<std::size_t>(std::floor(pos));
  i = std::min(i, pts.size() - 2);
  double w = pos - static_cast<double>(i);
  if (w < kTimeTol) return pts[i];
  if (w > 1.0 - kTimeTol) return pts[i + 1];
  const auto& a = pts[i];
  const auto& b = pts[i + 1];
  TrajectoryPoint out;
  out.t = t;
  out.s_x = a.s_x + w * (b.s_x - a.s_x);
  out.s_y = a.s_y + w * (b.s_y - a.s_y);
  out.v = a.v + w * (b.v - a.v);
  out.psi = w < 0.5 ? a.psi : b.psi;
  return out;
}

Footprint footprint_of(const ChallengerTrack& track, const TrajectoryPoint& p) {
  return Footprint{{p.s_x, p.s_y}, p.psi, 0.5 * track.length, 0.5 * track.width};
}

}  // namespace sad
