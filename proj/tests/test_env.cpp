#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "sad/env.hpp"
#include "sad/error.hpp"

using namespace sad;

TEST_SUITE("env") {

namespace {

EnvConfig unshielded() {
  EnvConfig c;
  c.shield.enabled = false;
  return c;
}

std::shared_ptr<const Scenario> share(Scenario sc) { return std::make_shared<const Scenario>(std::move(sc)); }

const HighLevelAction kMaintain{};

}  // namespace

TEST_CASE("reset observation on a Type A scenario") {
  const Scenario& sc = test::type_a_seed1();
  Env env(unshielded());
  const Observation obs = env.reset(share(sc), 0);
  const auto& lead = sc.challengers.front();
  REQUIRE(lane_of(lead.points.front().s_y, sc.road) == sc.ego_start.lane);
  CHECK(obs.ego_lane == sc.ego_start.lane);
  CHECK(obs.ego_v == sc.ego_start.state.v);
  CHECK(obs.lateral_offset == doctest::Approx(0.0));
  CHECK(obs.dist_to_goal == doctest::Approx(sc.goal.s_x_min - sc.ego_start.state.s_x));
  const auto& slot = obs.slot(Slot::EgoLead);
  CHECK(slot.present);
  CHECK(slot.rel_s_x == doctest::Approx(lead.points.front().s_x - sc.ego_start.state.s_x));
  CHECK(slot.rel_v == doctest::Approx(lead.points.front().v - sc.ego_start.state.v));
  CHECK_FALSE(obs.slot(Slot::EgoRear).present);
}

TEST_CASE("empty road: every slot absent at the sentinel") {
  Env env(unshielded());
  const Observation obs = env.reset(share(test::empty_scenario()), 3);
  for (int i = 0; i < kSlotCount; ++i) {
    const auto& s = obs.neighbors[static_cast<std::size_t>(i)];
    CHECK_FALSE(s.present);
    CHECK(s.rel_s_x == (i % 2 == 0 ? kAbsentDistance : -kAbsentDistance));
    CHECK(s.rel_v == 0.0);
  }
  const auto f = obs.scaled(ObsScaling{});
  REQUIRE(f.size() == static_cast<std::size_t>(Observation::kDim));
  CHECK(Observation::kDim == 22);
  for (int i = 0; i < kSlotCount; ++i) {
    CHECK(f[static_cast<std::size_t>(4 + 3 * i)] == 0.0);
    CHECK(std::abs(f[static_cast<std::size_t>(5 + 3 * i)]) == 1.0);
  }
}

TEST_CASE("scaled features stay in [-1, 1]") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-500, 500);
  for (int n = 0; n < 500; ++n) {
    Observation o;
    o.ego_v = std::abs(u(rng));
    o.ego_lane = static_cast<int>(rng() % 3);
    o.lateral_offset = u(rng) / 50;
    o.dist_to_goal = std::abs(u(rng)) * 5;
    for (auto& s : o.neighbors) s = {rng() % 2 == 0, u(rng), u(rng) / 5};
    for (double x : o.scaled(ObsScaling{})) CHECK(std::abs(x) <= 1.0);
  }
}

TEST_CASE("nearest challenger wins its slot; straddlers go to the higher lane") {
  Scenario sc = test::empty_scenario(20.0, 5.0);
  sc.challengers.push_back(test::cruise_track("far", sc, 1, 110.0, 20.0));
  sc.challengers.push_back(test::cruise_track("near", sc, 1, 80.0, 22.0));
  sc.challengers.push_back(test::cruise_track("behind", sc, 1, 20.0, 20.0));
  auto straddle = test::cruise_track("straddle", sc, 1, 70.0, 20.0);
  for (auto& p : straddle.points) p.s_y = 2 * sc.road.lane_width;  // lanes 1|2 boundary
  sc.challengers.push_back(straddle);
  sc.challengers.push_back(test::cruise_track("right", sc, 0, 40.0, 25.0));

  const Observation o = encode_observation(sc, sc.ego_start.state, 0.0);
  CHECK(o.slot(Slot::EgoLead) == NeighborSlot{true, 30.0, 2.0});
  CHECK(o.slot(Slot::EgoRear) == NeighborSlot{true, -30.0, 0.0});
  CHECK(o.slot(Slot::LeftLead) == NeighborSlot{true, 20.0, 0.0});
  CHECK_FALSE(o.slot(Slot::LeftRear).present);
  CHECK(o.slot(Slot::RightRear) == NeighborSlot{true, -10.0, 5.0});
  CHECK_FALSE(o.slot(Slot::RightLead).present);
}

TEST_CASE("maintain without the shield collides on Type A") {
  Env env(unshielded());
  env.reset(share(test::type_a_seed1()), 1);
  StepOutcome out;
  int ticks = 0;
  do {
    out = env.step(kMaintain);
    ++ticks;
    if (!out.terminated) CHECK(out.reward == 0.0);
  } while (!out.terminated);
  CHECK(out.reason == TerminationReason::Collision);
  CHECK(out.reward == -1.0);
  CHECK(env.terminated());
  CHECK(ticks < 20);
}

TEST_CASE("goal gives +1 and stops mid-tick") {
  Scenario sc = test::empty_scenario(20.0, 10.0);
  sc.goal = {60.0, 1000.0, {}};
  Env env(unshielded());
  env.reset(share(sc), 0);
  const auto out = env.step(kMaintain);
  CHECK(out.reason == TerminationReason::GoalReached);
  CHECK(out.reward == 1.0);
  CHECK(out.info.t == doctest::Approx(0.5));
}

TEST_CASE("reward table") {
  const RewardTable r;
  CHECK(r.of(TerminationReason::GoalReached) == 1.0);
  CHECK(r.of(TerminationReason::Collision) == -1.0);
  CHECK(r.of(TerminationReason::Offroad) == -1.0);
  CHECK(r.of(TerminationReason::Timeout) == -0.5);
  CHECK(r.of(TerminationReason::Standstill) == -0.5);
}

TEST_CASE("timeout and standstill rewards") {
  Env env(unshielded());
  env.reset(share(test::empty_scenario(20.0, 3.0)), 0);
  StepOutcome out;
  while (!(out = env.step(kMaintain)).terminated) {}
  CHECK(out.reason == TerminationReason::Timeout);
  CHECK(out.reward == -0.5);

  env.reset(share(test::empty_scenario(0.0, 20.0)), 0);
  while (!(out = env.step({Lateral::Center, Longitudinal::HardBrake})).terminated) {}
  CHECK(out.reason == TerminationReason::Standstill);
  CHECK(out.reward == -0.5);
  CHECK(out.info.t == doctest::Approx(3.0));
}

TEST_CASE("continuous mode") {
  EnvConfig cfg;
  cfg.mode = ActionMode::Continuous;
  Env env(cfg);
  CHECK_FALSE(env.config().shield.enabled);
  const Scenario sc = test::empty_scenario(20.0, 20.0);
  env.reset(share(sc), 0);

  auto out = env.step_continuous(0.0, 0.0);
  CHECK(env.state().ego.s_x == doctest::Approx(52.0));
  CHECK(env.state().ego.v == 20.0);
  CHECK(out.info.t == doctest::Approx(0.1));

  env.step_continuous(10.0, 0.0);
  CHECK(env.state().ego.v == doctest::Approx(20.0 + sc.ego_params.a_max * sc.dt));

  int n = 0;
  while (!(out = env.step_continuous(0.0, 0.4)).terminated) ++n;
  CHECK(out.reason == TerminationReason::Offroad);
  CHECK(out.reward == -1.0);
  CHECK(n < 30);
}

TEST_CASE("contract violations") {
  Env env(unshielded());
  CHECK_THROWS_AS(env.step(kMaintain), ContractViolation);
  CHECK_THROWS_AS(env.reset(nullptr, 0), ContractViolation);
  env.reset(share(test::empty_scenario()), 0);
  CHECK_THROWS_AS(env.step_continuous(0, 0), ContractViolation);

  Scenario bad = test::empty_scenario();
  bad.duration = -1;
  CHECK_THROWS_AS(env.reset(share(bad), 0), InvariantError);

  Scenario near = test::empty_scenario(20.0, 10.0);
  near.goal = {60.0, 1000.0, {}};
  env.reset(share(near), 0);
  env.step(kMaintain);
  CHECK_THROWS_AS(env.step(kMaintain), ContractViolation);

  EnvConfig cc;
  cc.mode = ActionMode::Continuous;
  Env cont(cc);
  cont.reset(share(test::empty_scenario()), 0);
  CHECK_THROWS_AS(cont.step(kMaintain), ContractViolation);
  CHECK_THROWS_AS(cont.step_continuous(std::nan(""), 0), std::invalid_argument);
}

TEST_CASE("resets are deterministic") {
  auto sc = share(test::type_a_seed1());
  EnvConfig cfg;
  cfg.record_trace = true;
  Env a(cfg), b(cfg);
  CHECK(a.reset(sc, 7) == b.reset(sc, 7));
  for (int j = 0; j < 12; ++j) {
    const auto act = HighLevelAction::from_index((j * 5) % 12);
    if (a.terminated()) break;
    const auto oa = a.step(act), ob = b.step(act);
    CHECK(oa.obs == ob.obs);
    CHECK(oa.reward == ob.reward);
  }
  CHECK(trace_to_jsonl(a.trace()) == trace_to_jsonl(b.trace()));
  // And a second reset reproduces the first episode.
  a.reset(sc, 7);
  CHECK(a.state() == EgoSim::start(*sc));
  CHECK(a.trace().empty());
}

TEST_CASE("trace JSONL round trip") {
  EnvConfig cfg = unshielded();
  cfg.record_trace = true;
  Env env(cfg);
  env.reset(share(test::type_a_seed1()), 0);
  while (!env.step(kMaintain).terminated) {}
  const auto& trace = env.trace();
  REQUIRE(!trace.empty());
  CHECK(trace.size() == static_cast<std::size_t>(env.state().step));
  CHECK(trace.back().reason == TerminationReason::Collision);
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) CHECK_FALSE(trace[i].reason.has_value());
  const std::string text = trace_to_jsonl(trace);
  CHECK(trace_to_jsonl(trace_from_jsonl(text)) == text);
  CHECK(trace_from_jsonl("").empty());
  CHECK_THROWS_AS(trace_from_jsonl("{\"t\":1}\n"), SchemaError);
}

}
