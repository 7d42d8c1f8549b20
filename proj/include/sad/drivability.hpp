#pragma once

#include <string>
#include <vector>

#include "sad/scenario.hpp"

namespace sad {

struct DrivabilityBounds {
  double accel_min = -9.5;  // m/s^2
  double accel_max = 4.0;   // m/s^2
  double yaw_rate_max = 0.5;  // rad/s
};

struct Violation {
  enum class Kind { Overlap, Offroad, Acceleration, YawRate };
  Kind kind;
  int step = 0;
  // One id, or two (sorted) for overlaps.
  std::vector<std::string> challengers;
  double value = 0.0;

  bool operator==(const Violation&) const = default;
};

std::string describe(const Violation& v);

struct DrivabilityReport {
  bool feasible = true;
  // Canonically ordered: by step, kind, then challenger ids.
  std::vector<Violation> violations;
};

// Checks the non-ego traffic: pairwise collision-free, on the road, and
// within the kinematic envelope at every grid step.
DrivabilityReport check_drivability(const Scenario& scenario, const DrivabilityBounds& bounds = {});

}  // namespace sad
