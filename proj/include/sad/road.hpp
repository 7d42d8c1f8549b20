#pragma once

#include <array>
#include <optional>

namespace sad {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

// Straight multi-lane carriageway aligned with the x axis. Lane 0 is the
// rightmost lane (lowest y).
struct RoadNetwork {
  int lane_count = 3;
  double lane_width = 3.5;
  double length = 1000.0;
  Vec2 origin{};

  double centerline_y(int lane) const { return origin.y + (lane + 0.5) * lane_width; }
  double lower_y() const { return origin.y; }
  double upper_y() const { return origin.y + lane_count * lane_width; }
  bool valid_lane(int lane) const { return lane >= 0 && lane < lane_count; }

  // Throws InvariantError when the layout is degenerate.
  void validate() const;
  bool operator==(const RoadNetwork&) const = default;
};

struct VehicleParams {
  double length = 4.5;
  double width = 1.8;
  double wheelbase = 2.9;
  double a_min = -9.0;
  double a_max = 3.0;
  double delta_max = 0.6;
  double vdelta_max = 0.4;
  double v_max = 50.0;

  void validate() const;
  bool operator==(const VehicleParams&) const = default;
};

struct VehicleState {
  double s_x = 0.0;
  double s_y = 0.0;
  double v = 0.0;
  double delta = 0.0;
  double psi = 0.0;
  bool operator==(const VehicleState&) const = default;
};

struct Footprint {
  Vec2 center{};
  double heading = 0.0;
  double half_length = 2.25;
  double half_width = 0.9;

  // Counter-clockwise, starting at the front-left corner.
  std::array<Vec2, 4> corners() const;
};

Footprint footprint_of(const VehicleState& s, const VehicleParams& p);

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

// One explicit-Euler step of the kinematic bicycle model; speed and steering
// are clamped after integration. Throws std::invalid_argument on non-finite
// input or on controls outside the actuator envelope.
VehicleState bicycle_step(const VehicleState& state, double accel, double steer_rate,
                          double dt, const VehicleParams& params);

// Separating-axis test on the closed rectangles.
bool rectangles_overlap(const Footprint& a, const Footprint& b);

// True iff any corner lies outside the carriageway.
bool offroad(const Footprint& fp, const RoadNetwork& road);

// Lane containing lateral position s_y. A point on an internal boundary
// belongs to the higher-index lane.
std::optional<int> lane_of(double s_y, const RoadNetwork& road);

// lane_of, falling back to the nearest lane for positions off the road.
int nearest_lane(double s_y, const RoadNetwork& road);

}  // namespace sad
