#include "sad/road.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sad/error.hpp"

namespace sad {

void RoadNetwork::validate() const {
  if (lane_count < 2) throw InvariantError("road: lane_count must be >= 2");
  if (!(lane_width > 0.0)) throw InvariantError("road: lane_width must be > 0");
  if (!(length > 0.0)) throw InvariantError("road: length must be > 0");
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y))
    throw InvariantError("road: origin must be finite");
}

void VehicleParams::validate() const {
  if (!(wheelbase > 0.0 && length > wheelbase))
    throw InvariantError("vehicle params: need length > wheelbase > 0");
  if (!(width > 0.0)) throw InvariantError("vehicle params: width must be > 0");
  if (!(a_min < 0.0 && a_max > 0.0))
    throw InvariantError("vehicle params: need a_min < 0 < a_max");
  if (!(delta_max > 0.0 && vdelta_max > 0.0 && v_max > 0.0))
    throw InvariantError("vehicle params: steering and speed limits must be > 0");
}

double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  a = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

std::array<Vec2, 4> Footprint::corners() const {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const double lx = half_length * c, ly = half_length * s;
  const double wx = -half_width * s, wy = half_width * c;
  return {Vec2{center.x + lx + wx, center.y + ly + wy},
          Vec2{center.x - lx + wx, center.y - ly + wy},
          Vec2{center.x - lx - wx, center.y - ly - wy},
          Vec2{center.x + lx - wx, center.y + ly - wy}};
}

Footprint footprint_of(const VehicleState& s, const VehicleParams& p) {
  return Footprint{{s.s_x, s.s_y}, s.psi, 0.5 * p.length, 0.5 * p.width};
}

VehicleState bicycle_step(const VehicleState& state, double accel, double steer_rate,
                          double dt, const VehicleParams& params) {
  const bool finite = std::isfinite(state.s_x) && std::isfinite(state.s_y) &&
                      std::isfinite(state.v) && std::isfinite(state.delta) &&
                      std::isfinite(state.psi) && std::isfinite(accel) &&
                      std::isfinite(steer_rate) && std::isfinite(dt);
  if (!finite) throw std::invalid_argument("bicycle_step: non-finite input");
  if (!(dt > 0.0)) throw std::invalid_argument("bicycle_step: dt must be > 0");
  constexpr double kSlack = 1e-12;
  if (accel < params.a_min - kSlack || accel > params.a_max + kSlack)
    throw std::invalid_argument("bicycle_step: acceleration outside [a_min, a_max]");
  if (std::abs(steer_rate) > params.vdelta_max + kSlack)
    throw std::invalid_argument("bicycle_step: steering rate exceeds vdelta_max");

  VehicleState next;
  next.s_x = state.s_x + state.v * std::cos(state.psi) * dt;
  next.s_y = state.s_y + state.v * std::sin(state.psi) * dt;
  next.psi = wrap_angle(state.psi + state.v / params.wheelbase * std::tan(state.delta) * dt);
  next.v = std::clamp(state.v + accel * dt, 0.0, params.v_max);
  next.delta = std::clamp(state.delta + steer_rate * dt, -params.delta_max, params.delta_max);
  return next;
}

namespace {

// Projection interval of a rectangle's corners on an axis.
std::pair<double, double> project(const std::array<Vec2, 4>& pts, Vec2 axis) {
  double lo = pts[0].x * axis.x + pts[0].y * axis.y;
  double hi = lo;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = pts[i].x * axis.x + pts[i].y * axis.y;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

}  // namespace

bool rectangles_overlap(const Footprint& a, const Footprint& b) {
  // Cheap reject on circumscribed circles.
  const double dx = a.center.x - b.center.x;
  const double dy = a.center.y - b.center.y;
  const double ra = std::hypot(a.half_length, a.half_width);
  const double rb = std::hypot(b.half_length, b.half_width);
  if (dx * dx + dy * dy > (ra + rb) * (ra + rb)) return false;

  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes = {
      Vec2{std::cos(a.heading), std::sin(a.heading)},
      Vec2{-std::sin(a.heading), std::cos(a.heading)},
      Vec2{std::cos(b.heading), std::sin(b.heading)},
      Vec2{-std::sin(b.heading), std::cos(b.heading)}};
  for (const Vec2& axis : axes) {
    const auto [alo, ahi] = project(ca, axis);
    const auto [blo, bhi] = project(cb, axis);
    if (ahi < blo || bhi < alo) return false;
  }
  return true;
}

bool offroad(const Footprint& fp, const RoadNetwork& road) {
  const double x_lo = road.origin.x;
  const double x_hi = road.origin.x + road.length;
  for (const Vec2& c : fp.corners()) {
    if (c.y < road.lower_y() || c.y > road.upper_y()) return true;
    if (c.x < x_lo || c.x > x_hi) return true;
  }
  return false;
}

std::optional<int> lane_of(double s_y, const RoadNetwork& road) {
  if (!std::isfinite(s_y)) return std::nullopt;
  const double rel = (s_y - road.origin.y) / road.lane_width;
  if (rel < 0.0) return std::nullopt;
  const auto lane = static_cast<long long>(std::floor(rel));
  if (lane >= road.lane_count) return std::nullopt;
  return static_cast<int>(lane);
}

int nearest_lane(double s_y, const RoadNetwork& road) {
  if (auto lane = lane_of(s_y, road)) return *lane;
  return s_y < road.origin.y ? 0 : road.lane_count - 1;
}

}  // namespace sad
