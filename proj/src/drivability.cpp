#include "sad/drivability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace sad {

std::string describe(const Violation& v) {
  std::ostringstream os;
  switch (v.kind) {
    case Violation::Kind::Overlap: os << "overlap"; break;
    case Violation::Kind::Offroad: os << "offroad"; break;
    case Violation::Kind::Acceleration: os << "acceleration"; break;
    case Violation::Kind::YawRate: os << "yaw_rate"; break;
  }
  os << " at step " << v.step << " [";
  for (std::size_t i = 0; i < v.challengers.size(); ++i) os << (i ? "," : "") << v.challengers[i];
  os << "]";
  if (v.kind == Violation::Kind::Acceleration || v.kind == Violation::Kind::YawRate)
    os << " value=" << v.value;
  return os.str();
}

DrivabilityReport check_drivability(const Scenario& sc, const DrivabilityBounds& bounds) {
  DrivabilityReport report;
  auto& out = report.violations;
  const int steps = sc.step_count();
  const auto& tracks = sc.challengers;

  for (const auto& tr : tracks) {
    const auto& pts = tr.points;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (offroad(footprint_of(tr, pts[k]), sc.road))
        out.push_back({Violation::Kind::Offroad, static_cast<int>(k), {tr.id}, 0.0});
      if (k + 1 == pts.size()) continue;
      const double dt = pts[k + 1].t - pts[k].t;
      const double accel = (pts[k + 1].v - pts[k].v) / dt;
      // Small slack absorbs rounding in generated samples.
      if (accel < bounds.accel_min - 1e-9 || accel > bounds.accel_max + 1e-9)
        out.push_back({Violation::Kind::Acceleration, static_cast<int>(k), {tr.id}, accel});
      const double yaw_rate = wrap_angle(pts[k + 1].psi - pts[k].psi) / dt;
      if (std::abs(yaw_rate) > bounds.yaw_rate_max + 1e-9)
        out.push_back({Violation::Kind::YawRate, static_cast<int>(k), {tr.id}, yaw_rate});
    }
  }

  for (int k = 0; k <= steps; ++k) {
    const double t = k * sc.dt;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      const Footprint a = footprint_of(tracks[i], challenger_state_at(tracks[i], t));
      for (std::size_t j = i + 1; j < tracks.size(); ++j) {
        const Footprint b = footprint_of(tracks[j], challenger_state_at(tracks[j], t));
        if (rectangles_overlap(a, b)) {
          auto ids = std::vector<std::string>{tracks[i].id, tracks[j].id};
          std::sort(ids.begin(), ids.end());
          out.push_back({Violation::Kind::Overlap, k, std::move(ids), 0.0});
        }
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.step, a.kind, a.challengers) < std::tie(b.step, b.kind, b.challengers);
  });
  report.feasible = out.empty();
  return report;
}

}  // namespace sad
