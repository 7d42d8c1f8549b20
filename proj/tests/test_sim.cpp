#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "sad/sim.hpp"

using namespace sad;

TEST_SUITE("sim") {

TEST_CASE("reason names round trip") {
  for (int i = 0; i < kTerminationReasonCount; ++i) {
    const auto r = static_cast<TerminationReason>(i);
    CHECK(parse_reason(to_string(r)) == r);
  }
  CHECK_FALSE(parse_reason("goal").has_value());
}

TEST_CASE("termination priority on ties") {
  Scenario sc = test::empty_scenario(20.0, 5.0);
  sc.goal = {40.0, 200.0, {}};
  sc.challengers.push_back(test::cruise_track("c", sc, 0, 100.0, 0.0));
  const SimConfig cfg;
  EgoSim sim = EgoSim::start(sc);

  // Overlapping the challenger, half off the road, inside the goal window,
  // stopped for long enough, at the horizon.
  sim.ego = {100.0, 0.5, 0.0, 0.0, 0.0};
  sim.standstill_steps = 1000;
  sim.step = sc.step_count();
  CHECK(check_termination(sc, sim, cfg) == TerminationReason::Collision);
  sim.ego.s_x = 60.0;
  CHECK(check_termination(sc, sim, cfg) == TerminationReason::Offroad);
  sim.ego.s_y = sc.road.centerline_y(0);
  CHECK(check_termination(sc, sim, cfg) == TerminationReason::GoalReached);
  sim.ego.s_x = 20.0;
  CHECK(check_termination(sc, sim, cfg) == TerminationReason::Standstill);
  sim.standstill_steps = 0;
  CHECK(check_termination(sc, sim, cfg) == TerminationReason::Timeout);
  sim.step = sc.step_count() - 1;
  CHECK_FALSE(check_termination(sc, sim, cfg).has_value());
}

TEST_CASE("goal respects allowed lanes") {
  Scenario sc = test::empty_scenario();
  sc.goal = {40.0, 200.0, {2}};
  VehicleState ego{60.0, sc.road.centerline_y(1), 20, 0, 0};
  CHECK_FALSE(ego_in_goal(sc, ego));
  ego.s_y = sc.road.centerline_y(2);
  CHECK(ego_in_goal(sc, ego));
  ego.s_x = 200.0;  // closed interval
  CHECK(ego_in_goal(sc, ego));
  ego.s_x = 200.0001;
  CHECK_FALSE(ego_in_goal(sc, ego));
}

TEST_CASE("hard brake from 2 m/s ends in standstill after the dwell time") {
  Scenario sc = test::empty_scenario(2.0, 20.0);
  EgoSim sim = EgoSim::start(sc);
  const SimConfig cfg;
  std::optional<TerminationReason> r;
  while (!(r = check_termination(sc, sim, cfg)))
    advance_with_pilot(sc, sim, {Lateral::Center, Longitudinal::HardBrake}, cfg);
  CHECK(*r == TerminationReason::Standstill);
  // v: 2, 1.2, 0.4, 0 -> first slow step is 3, then 30 steps of dwell.
  CHECK(sim.step == 32);
  CHECK(sim.ego.v == 0.0);
}

TEST_CASE("speed above the threshold resets the standstill counter") {
  Scenario sc = test::empty_scenario(0.0, 20.0);
  EgoSim sim = EgoSim::start(sc);
  const SimConfig cfg;
  for (int k = 0; k < 20; ++k) advance(sc, sim, 0.0, 0.0, cfg);
  CHECK(sim.standstill_steps == 20);
  advance(sc, sim, 3.0, 0.0, cfg);
  CHECK(sim.standstill_steps == 0);
}

TEST_CASE("cruising on an empty road times out at the horizon") {
  Scenario sc = test::empty_scenario(20.0, 5.0);
  EgoSim sim = EgoSim::start(sc);
  const SimConfig cfg;
  std::optional<TerminationReason> r;
  while (!(r = check_termination(sc, sim, cfg))) advance_with_pilot(sc, sim, {}, cfg);
  CHECK(*r == TerminationReason::Timeout);
  CHECK(sim.step == 50);
  CHECK(sim.ego.s_x == doctest::Approx(150.0));
  CHECK(sim.ego.s_y == sc.road.centerline_y(1));
}

TEST_CASE("raw commands are clamped to the envelope") {
  Scenario sc = test::empty_scenario(20.0, 5.0);
  const SimConfig cfg;
  EgoSim a = EgoSim::start(sc), b = EgoSim::start(sc);
  advance(sc, a, 100.0, 10.0, cfg);
  advance(sc, b, sc.ego_params.a_max, sc.ego_params.vdelta_max, cfg);
  CHECK(a == b);
}

TEST_CASE("steps per tick") {
  Scenario sc = test::empty_scenario();
  CHECK(steps_per_tick(sc, SimConfig{}) == 10);
  SimConfig fast;
  fast.decision_tick = 0.01;
  CHECK(steps_per_tick(sc, fast) == 1);
}

}
