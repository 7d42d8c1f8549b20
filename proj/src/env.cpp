#include "sad/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "sad/error.hpp"

namespace sad {

double RewardTable::of(TerminationReason r) const {
  switch (r) {
    case TerminationReason::GoalReached: return goal;
    case TerminationReason::Collision: return collision;
    case TerminationReason::Offroad: return offroad;
    case TerminationReason::Timeout: return timeout;
    case TerminationReason::Standstill: return standstill;
  }
  return 0.0;
}

std::vector<double> Observation::scaled(const ObsScaling& s) const {
  auto unit = [](double x) { return std::clamp(x, -1.0, 1.0); };
  std::vector<double> f;
  f.reserve(kDim);
  f.push_back(unit(2.0 * ego_v / s.speed - 1.0));
  f.push_back(lane_count > 1 ? 2.0 * ego_lane / (lane_count - 1) - 1.0 : 0.0);
  f.push_back(unit(lateral_offset / (0.5 * lane_width)));
  f.push_back(unit(2.0 * std::min(dist_to_goal, s.goal_distance) / s.goal_distance - 1.0));
  for (const auto& n : neighbors) {
    f.push_back(n.present ? 1.0 : 0.0);
    f.push_back(unit(n.rel_s_x / s.rel_distance));
    f.push_back(unit(n.rel_v / s.rel_speed));
  }
  return f;
}

Observation encode_observation(const Scenario& sc, const VehicleState& ego, double t) {
  Observation obs;
  obs.ego_v = ego.v;
  obs.lane_count = sc.road.lane_count;
  obs.lane_width = sc.road.lane_width;
  obs.ego_lane = nearest_lane(ego.s_y, sc.road);
  obs.lateral_offset = ego.s_y - sc.road.centerline_y(obs.ego_lane);
  obs.dist_to_goal = std::max(0.0, sc.goal.s_x_min - ego.s_x);

  for (int i = 0; i < kSlotCount; ++i) {
    const bool lead = i % 2 == 0;
    obs.neighbors[static_cast<std::size_t>(i)] = {false, lead ? kAbsentDistance : -kAbsentDistance, 0.0};
  }
  for (const auto& tr : sc.challengers) {
    const TrajectoryPoint p = challenger_state_at(tr, t);
    const auto lane = lane_of(p.s_y, sc.road);
    if (!lane) continue;
    int column;
    if (*lane == obs.ego_lane)
      column = 0;
    else if (*lane == obs.ego_lane + 1)
      column = 1;
    else if (*lane == obs.ego_lane - 1)
      column = 2;
    else
      continue;
    const double rel = p.s_x - ego.s_x;
    const int index = 2 * column + (rel >= 0.0 ? 0 : 1);
    auto& slot = obs.neighbors[static_cast<std::size_t>(index)];
    if (!slot.present || std::abs(rel) < std::abs(slot.rel_s_x))
      slot = {true, rel, p.v - ego.v};
  }
  return obs;
}

Env::Env(EnvConfig cfg) : cfg_(std::move(cfg)) {
  // The lateral shield has no meaning without the pilot.
  if (cfg_.mode == ActionMode::Continuous) cfg_.shield.enabled = false;
}

Observation Env::reset(std::shared_ptr<const Scenario> scenario, std::uint64_t seed) {
  if (!scenario) throw ContractViolation("reset: null scenario");
  scenario->validate();
  scenario_ = std::move(scenario);
  seed_ = seed;
  sim_ = EgoSim::start(*scenario_);
  done_ = false;
  trace_.clear();
  return encode_observation(*scenario_, sim_.ego, 0.0);
}

void Env::check_ready(ActionMode mode) const {
  if (!scenario_) throw ContractViolation("step before reset");
  if (done_) throw ContractViolation("step on a terminated episode");
  if (cfg_.mode != mode)
    throw ContractViolation(mode == ActionMode::Hierarchical
                                ? "step() called on a continuous-mode environment"
                                : "step_continuous() called on a hierarchical-mode environment");
}

void Env::record(const std::optional<HighLevelAction>& action, double accel, double steer_rate,
                 bool overridden, std::optional<TerminationReason> reason) {
  if (!cfg_.record_trace) return;
  TraceRecord r;
  r.t = sim_.time(*scenario_);
  r.ego = sim_.ego;
  r.action = action;
  r.accel = accel;
  r.steer_rate = steer_rate;
  r.shield_overridden = overridden;
  r.reason = reason;
  for (const auto& tr : scenario_->challengers) {
    const TrajectoryPoint p = challenger_state_at(tr, r.t);
    r.challengers.push_back({tr.id, p.s_x, p.s_y, p.psi, tr.length, tr.width});
  }
  trace_.push_back(std::move(r));
}

StepOutcome Env::finish(std::optional<TerminationReason> reason, StepInfo info) {
  StepOutcome out;
  info.t = sim_.time(*scenario_);
  out.obs = encode_observation(*scenario_, sim_.ego, info.t);
  out.info = info;
  if (reason) {
    done_ = true;
    out.terminated = true;
    out.reason = reason;
    out.reward = cfg_.reward.of(*reason);
  }
  return out;
}

StepOutcome Env::step(const HighLevelAction& action) {
  check_ready(ActionMode::Hierarchical);
  const Scenario& sc = *scenario_;
  StepInfo info;
  HighLevelAction approved = action;
  if (cfg_.shield.enabled) {
    const ShieldVerdict v = screen(action, sim_, sc, cfg_.sim, cfg_.shield);
    approved = v.approved;
    info.shield_overridden = v.overridden;
    info.shield_reason = v.reason;
  }

  sim_.plan = plan(approved, sim_.ego, sc.road, sim_.time(sc), sim_.plan, cfg_.sim.pilot);
  const int n = steps_per_tick(sc, cfg_.sim);
  for (int i = 0; i < n; ++i) {
    const ControlCommand cmd =
        control(*sim_.plan, approved.longitudinal, sim_.ego, sim_.time(sc), sc.ego_params, cfg_.sim.pilot);
    advance(sc, sim_, cmd.accel, cmd.steer_rate, cfg_.sim);
    const auto reason = check_termination(sc, sim_, cfg_.sim);
    record(approved, cmd.accel, cmd.steer_rate, info.shield_overridden, reason);
    if (reason) return finish(reason, info);
  }
  return finish(std::nullopt, info);
}

StepOutcome Env::step_continuous(double accel, double steer_rate) {
  check_ready(ActionMode::Continuous);
  if (!std::isfinite(accel) || !std::isfinite(steer_rate))
    throw std::invalid_argument("step_continuous: non-finite action");
  const Scenario& sc = *scenario_;
  const auto& p = sc.ego_params;
  accel = std::clamp(accel, p.a_min, p.a_max);
  steer_rate = std::clamp(steer_rate, -p.vdelta_max, p.vdelta_max);
  advance(sc, sim_, accel, steer_rate, cfg_.sim);
  const auto reason = check_termination(sc, sim_, cfg_.sim);
  record(std::nullopt, accel, steer_rate, false, reason);
  return finish(reason, StepInfo{});
}

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace) {
  using ordered_json = nlohmann::ordered_json;
  std::string out;
  for (const auto& r : trace) {
    ordered_json j;
    j["t"] = r.t;
    j["ego"] = {r.ego.s_x, r.ego.s_y, r.ego.v, r.ego.delta, r.ego.psi};
    if (r.action)
      j["action"] = {static_cast<int>(r.action->lateral), static_cast<int>(r.action->longitudinal)};
    else
      j["action"] = nullptr;
    j["accel"] = r.accel;
    j["steer_rate"] = r.steer_rate;
    j["shield_overridden"] = r.shield_overridden;
    ordered_json others = ordered_json::array();
    for (const auto& c : r.challengers)
      others.push_back(ordered_json{{"id", c.id}, {"s_x", c.s_x}, {"s_y", c.s_y}, {"psi", c.psi},
                                    {"length", c.length}, {"width", c.width}});
    j["challengers"] = others;
    j["reason"] = r.reason ? ordered_json(std::string(to_string(*r.reason))) : ordered_json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<TraceRecord> trace_from_jsonl(std::string_view text) {
  using nlohmann::json;
  std::vector<TraceRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      TraceRecord r;
      r.t = j.at("t").get<double>();
      const auto& e = j.at("ego");
      r.ego = {e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>(),
               e.at(3).get<double>(), e.at(4).get<double>()};
      if (!j.at("action").is_null())
        r.action = HighLevelAction::from_indices(j["action"].at(0).get<int>(), j["action"].at(1).get<int>());
      r.accel = j.at("accel").get<double>();
      r.steer_rate = j.at("steer_rate").get<double>();
      r.shield_overridden = j.at("shield_overridden").get<bool>();
      for (const auto& c : j.at("challengers"))
        r.challengers.push_back({c.at("id").get<std::string>(), c.at("s_x").get<double>(),
                                 c.at("s_y").get<double>(), c.at("psi").get<double>(),
                                 c.at("length").get<double>(), c.at("width").get<double>()});
      if (!j.at("reason").is_null()) r.reason = parse_reason(j["reason"].get<std::string>());
      out.push_back(std::move(r));
    } catch (const json::exception& ex) {
      throw SchemaError("line " + std::to_string(lineno), ex.what());
    }
  }
  return out;
}

}  // namespace sad
