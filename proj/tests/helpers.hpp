#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>

#include "sad/factory.hpp"
#include "sad/scenario.hpp"

namespace test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(SAD_FIXTURE_DIR) / name; }

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sad_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Straight road, ego in lane 1 at 50 m, no traffic.
inline sad::Scenario empty_scenario(double v0 = 20.0, double duration = 20.0) {
  sad::Scenario sc;
  sc.id = "empty";
  sc.duration = duration;
  sc.ego_start.lane = 1;
  sc.ego_start.state = {50.0, sc.road.centerline_y(1), v0, 0.0, 0.0};
  sc.goal = {900.0, 1000.0, {}};
  return sc;
}

// Constant-velocity track on a lane centerline.
inline sad::ChallengerTrack cruise_track(const std::string& id, const sad::Scenario& sc, int lane, double x0,
                                         double v) {
  sad::ChallengerTrack t;
  t.id = id;
  for (int k = 0; k <= sc.step_count(); ++k) {
    const double time = k * sc.dt;
    t.points.push_back({time, x0 + v * time, sc.road.centerline_y(lane), v, 0.0});
  }
  return t;
}

inline const sad::Scenario& type_a_seed1() {
  static const sad::Scenario sc = [] {
    sad::GenParams p;
    p.seed = 1;
    return sad::generate_type_a(p);
  }();
  return sc;
}

}  // namespace test
