#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "sad/road.hpp"

namespace sad {

// Index order is part of the wire protocol: [lateral, longitudinal].
enum class Lateral { Left = 0, Center = 1, Right = 2 };
enum class Longitudinal { Accelerate = 0, Maintain = 1, Brake = 2, HardBrake = 3 };

inline constexpr int kLateralCount = 3;
inline constexpr int kLongitudinalCount = 4;

struct HighLevelAction {
  Lateral lateral = Lateral::Center;
  Longitudinal longitudinal = Longitudinal::Maintain;

  int index() const { return static_cast<int>(lateral) * kLongitudinalCount + static_cast<int>(longitudinal); }
  static HighLevelAction from_index(int joint);
  static HighLevelAction from_indices(int lateral, int longitudinal);
  bool operator==(const HighLevelAction&) const = default;
};

std::string_view to_string(Lateral l);
std::string_view to_string(Longitudinal l);

struct PilotConfig {
  double lane_change_time = 4.0;  // s
  // Commanded acceleration per longitudinal option, m/s^2.
  std::array<double, kLongitudinalCount> option_accel{2.0, 0.0, -3.0, -8.0};
  // Closed-loop lateral poles sit at -lateral_pole (rad/s); gains are
  // scheduled on max(v, schedule_speed_floor).
  double lateral_pole = 3.0;
  double schedule_speed_floor = 5.0;
};

struct LateralReference {
  double s_y = 0.0;
  double s_y_dot = 0.0;
  double s_y_ddot = 0.0;
};

struct ManeuverPlan {
  enum class Kind { KeepLane, LaneChangeLeft, LaneChangeRight };
  Kind kind = Kind::KeepLane;
  double start_time = 0.0;
  double end_time = 0.0;
  int target_lane = 0;
  double y_start = 0.0;
  double y_target = 0.0;

  bool is_lane_change() const { return kind != Kind::KeepLane; }
  // A lane change stays committed until end_time.
  bool active_at(double t) const { return is_lane_change() && t < end_time - 1e-9; }
  // Quintic from y_start to y_target with zero boundary velocity/acceleration;
  // constant outside [start_time, end_time].
  LateralReference reference(double t) const;
  bool operator==(const ManeuverPlan&) const = default;
};

// Heading the reference implies at speed v.
double reference_heading(const LateralReference& ref, double v, const PilotConfig& cfg);

// Committed lane changes are returned unchanged; a lane change toward a
// missing lane degrades to keep-lane.
ManeuverPlan plan(const HighLevelAction& action, const VehicleState& ego, const RoadNetwork& road,
                  double t_now, const std::optional<ManeuverPlan>& active, const PilotConfig& cfg);

struct ControlCommand {
  double accel = 0.0;
  double steer_rate = 0.0;
  bool operator==(const ControlCommand&) const = default;
};

// Longitudinal option lookup plus speed-scheduled lateral tracking of the
// plan's reference at time t. Outputs respect the actuator bounds.
ControlCommand control(const ManeuverPlan& plan, Longitudinal longitudinal, const VehicleState& ego,
                       double t, const VehicleParams& params, const PilotConfig& cfg);

}  // namespace sad
