#include "sad/pilot.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sad {

HighLevelAction HighLevelAction::from_index(int joint) {
  if (joint < 0 || joint >= kLateralCount * kLongitudinalCount)
    throw std::out_of_range("joint action index out of range");
  return from_indices(joint / kLongitudinalCount, joint % kLongitudinalCount);
}

HighLevelAction HighLevelAction::from_indices(int lateral, int longitudinal) {
  if (lateral < 0 || lateral >= kLateralCount) throw std::out_of_range("lateral index out of range");
  if (longitudinal < 0 || longitudinal >= kLongitudinalCount)
    throw std::out_of_range("longitudinal index out of range");
  return {static_cast<Lateral>(lateral), static_cast<Longitudinal>(longitudinal)};
}

std::string_view to_string(Lateral l) {
  switch (l) {
    case Lateral::Left: return "left";
    case Lateral::Center: return "center";
    case Lateral::Right: return "right";
  }
  return "?";
}

std::string_view to_string(Longitudinal l) {
  switch (l) {
    case Longitudinal::Accelerate: return "accelerate";
    case Longitudinal::Maintain: return "maintain";
    case Longitudinal::Brake: return "brake";
    case Longitudinal::HardBrake: return "hard_brake";
  }
  return "?";
}

LateralReference ManeuverPlan::reference(double t) const {
  if (!is_lane_change()) return {y_target, 0.0, 0.0};
  const double T = end_time - start_time;
  const double tau = std::clamp((t - start_time) / T, 0.0, 1.0);
  const double d = y_target - y_start;
  const double t2 = tau * tau, t3 = t2 * tau;
  const double s = t3 * (10.0 - 15.0 * tau + 6.0 * t2);
  const double ds = 30.0 * t2 * (1.0 - 2.0 * tau + t2) / T;
  const double dds = 60.0 * tau * (1.0 - 3.0 * tau + 2.0 * t2) / (T * T);
  return {y_start + d * s, d * ds, d * dds};
}

double reference_heading(const LateralReference& ref, double v, const PilotConfig& cfg) {
  return std::atan2(ref.s_y_dot, std::max(v, cfg.schedule_speed_floor));
}

ManeuverPlan plan(const HighLevelAction& action, const VehicleState& ego, const RoadNetwork& road,
                  double t_now, const std::optional<ManeuverPlan>& active, const PilotConfig& cfg) {
  if (active && active->active_at(t_now)) return *active;

  const int lane = nearest_lane(ego.s_y, road);
  ManeuverPlan p;
  p.start_time = t_now;
  p.end_time = t_now;
  p.target_lane = lane;
  p.y_start = road.centerline_y(lane);
  p.y_target = p.y_start;

  int target = lane;
  if (action.lateral == Lateral::Left) target = lane + 1;
  if (action.lateral == Lateral::Right) target = lane - 1;
  if (target == lane || !road.valid_lane(target)) return p;

  p.kind = target > lane ? ManeuverPlan::Kind::LaneChangeLeft : ManeuverPlan::Kind::LaneChangeRight;
  p.end_time = t_now + cfg.lane_change_time;
  p.target_lane = target;
  p.y_start = ego.s_y;
  p.y_target = road.centerline_y(target);
  return p;
}

ControlCommand control(const ManeuverPlan& plan, Longitudinal longitudinal, const VehicleState& ego,
                       double t, const VehicleParams& params, const PilotConfig& cfg) {
  ControlCommand cmd;
  cmd.accel = std::clamp(cfg.option_accel[static_cast<std::size_t>(longitudinal)], params.a_min,
                         params.a_max);

  const LateralReference ref = plan.reference(t);
  const double v = std::max(ego.v, cfg.schedule_speed_floor);
  const double L = params.wheelbase;
  const double a = cfg.lateral_pole;
  // Pole placement of the linearised (e_y, e_psi, e_delta) loop at (s + a)^3.
  const double k_d = 3.0 * a;
  const double k_psi = 3.0 * a * a * L / v;
  const double k_y = a * a * a * L / (v * v);

  const double psi_ref = reference_heading(ref, ego.v, cfg);
  const double delta_ff = std::atan(L * ref.s_y_ddot / (v * v));
  const double rate = k_y * (ref.s_y - ego.s_y) + k_psi * wrap_angle(psi_ref - ego.psi) -
                      k_d * (ego.delta - delta_ff);
  cmd.steer_rate = std::clamp(rate, -params.vdelta_max, params.vdelta_max);
  return cmd;
}

}  // namespace sad
