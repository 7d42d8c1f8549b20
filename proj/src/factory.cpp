#include "sad/factory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <variant>

#include "sad/drivability.hpp"
#include "sad/error.hpp"
#include "sad/scenario_io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sad {

void GenParams::validate() const {
  auto ok = [](const Range& r) { return std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi; };
  if (!ok(ego_speed) || !ok(gap) || !ok(challenger_decel) || !ok(cutin_lateral_duration) ||
      !ok(maneuver_onset) || !ok(cutout_spacing) || !ok(easy_speed_surplus))
    throw InvariantError("generator: empty or non-finite range");
  if (!(challenger_decel.hi < 0.0)) throw InvariantError("generator: deceleration range must be < 0");
  if (!(ego_speed.lo > 0.0)) throw InvariantError("generator: ego speed must be > 0");
  if (!(cutin_lateral_duration.lo > 0.0)) throw InvariantError("generator: lateral duration must be > 0");
  if (maneuver_onset.lo < 0.0) throw InvariantError("generator: onset must be >= 0");
  if (max_attempts < 1) throw InvariantError("generator: max_attempts must be >= 1");
  road.validate();
}

namespace {

// Cruise until `onset`, then constant deceleration down to standstill.
struct LongitudinalProfile {
  double x0, v0, onset, decel;

  std::pair<double, double> at(double t) const {
    if (t <= onset || decel >= 0.0) return {x0 + v0 * t, v0};
    const double tau = std::min(t - onset, v0 / -decel);
    return {x0 + v0 * onset + v0 * tau + 0.5 * decel * tau * tau, v0 + decel * tau};
  }
};

// Quintic smoothstep between two lateral positions.
struct LateralProfile {
  double y0, y1, start, duration;

  std::pair<double, double> at(double t) const {
    if (duration <= 0.0 || t <= start) return {y0, 0.0};
    const double tau = std::min((t - start) / duration, 1.0);
    const double t2 = tau * tau;
    const double s = tau * t2 * (10.0 - 15.0 * tau + 6.0 * t2);
    const double ds = 30.0 * t2 * (1.0 - 2.0 * tau + t2) / duration;
    return {y0 + (y1 - y0) * s, (y1 - y0) * ds};
  }
};

ChallengerTrack make_track(std::string id, const LongitudinalProfile& lon, const LateralProfile& lat,
                           const GenParams& p) {
  ChallengerTrack tr;
  tr.id = std::move(id);
  const int n = static_cast<int>(std::lround(p.duration / p.dt));
  tr.points.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = k * p.dt;
    const auto [x, vx] = lon.at(t);
    const auto [y, vy] = lat.at(t);
    const double psi = (vx == 0.0 && vy == 0.0) ? 0.0 : std::atan2(vy, vx);
    tr.points.push_back({t, x, y, std::hypot(vx, vy), psi});
  }
  return tr;
}

Scenario skeleton(ScenarioKind kind, int ego_lane, double ego_speed, const GenParams& p) {
  Scenario sc;
  sc.kind = kind;
  sc.road = p.road;
  sc.dt = p.dt;
  sc.duration = p.duration;
  sc.ego_start.lane = ego_lane;
  sc.ego_start.state = VehicleState{p.ego_start_x, p.road.centerline_y(ego_lane), ego_speed, 0.0, 0.0};
  sc.goal.s_x_min = p.ego_start_x + p.goal_fraction * ego_speed * p.duration;
  sc.goal.s_x_max = p.road.origin.x + p.road.length;
  sc.meta["ego_speed"] = ego_speed;
  sc.meta["ego_lane"] = ego_lane;
  return sc;
}

double draw(std::mt19937_64& rng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

int draw_lane(std::mt19937_64& rng, int count) {
  return std::uniform_int_distribution<int>(0, count - 1)(rng);
}

int draw_adjacent(std::mt19937_64& rng, int lane, const RoadNetwork& road) {
  std::vector<int> options;
  if (road.valid_lane(lane - 1)) options.push_back(lane - 1);
  if (road.valid_lane(lane + 1)) options.push_back(lane + 1);
  return options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
}

// Acceptance test shared by all generators. `critical_index` is the
// challenger the passive ego must hit.
bool acceptable(const Scenario& sc, const GenParams& p, std::size_t critical_index) {
  try {
    sc.validate();
  } catch (const InvariantError&) {
    return false;
  }
  if (!check_drivability(sc).feasible) return false;

  EnvConfig open = p.env;
  open.mode = ActionMode::Hierarchical;
  open.record_trace = false;
  open.shield.enabled = false;
  EnvConfig shielded = open;
  shielded.shield.enabled = true;

  const EpisodeResult passive = run_maintain(sc, open);
  if (p.easy) {
    return passive.reason == TerminationReason::GoalReached &&
           run_maintain(sc, shielded).reason == TerminationReason::GoalReached;
  }
  if (passive.reason != TerminationReason::Collision || passive.collided != critical_index) return false;
  if (!passes_decision_filter(passive.t)) return false;
  if (run_maintain(sc, shielded).reason == TerminationReason::GoalReached) return false;
  return solvable_by_script(sc, open);
}

template <typename DrawFn, typename BuildFn>
Scenario generate_with(const GenParams& params, ScenarioKind kind, std::size_t critical_index,
                       DrawFn draw_fn, BuildFn build_fn) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    const auto d = draw_fn(rng);
    Scenario sc = build_fn(d, params);
    if (!acceptable(sc, params, critical_index)) continue;
    sc.id = std::string(to_string(kind)) + (params.easy ? "-easy-" : "-") + std::to_string(params.seed);
    sc.meta["seed"] = static_cast<double>(params.seed);
    sc.meta["attempt"] = attempt;
    sc.meta["easy"] = params.easy ? 1.0 : 0.0;
    return sc;
  }
  throw std::runtime_error("scenario generation exhausted after " + std::to_string(params.max_attempts) +
                           " attempts (" + std::string(to_string(kind)) + ", seed " +
                           std::to_string(params.seed) + ")");
}

}  // namespace

Scenario build_type_a(const TypeADraw& d, const GenParams& p) {
  Scenario sc = skeleton(ScenarioKind::TypeA, d.ego_lane, d.ego_speed, p);
  const double y = p.road.centerline_y(d.ego_lane);
  sc.challengers.push_back(make_track(
      "c0", {p.ego_start_x + d.gap, d.ego_speed + d.speed_surplus, d.onset, d.decel},
      {y, y, 0.0, 0.0}, p));
  sc.meta["gap"] = d.gap;
  sc.meta["decel"] = d.decel;
  sc.meta["onset"] = d.onset;
  sc.meta["speed_surplus"] = d.speed_surplus;
  return sc;
}

Scenario build_type_b(const TypeBDraw& d, const GenParams& p) {
  Scenario sc = skeleton(ScenarioKind::TypeB, d.ego_lane, d.ego_speed, p);
  sc.challengers.push_back(make_track(
      "c0",
      {p.ego_start_x + d.gap, d.ego_speed + d.speed_surplus, d.onset + d.lateral_duration, d.decel},
      {p.road.centerline_y(d.challenger_lane), p.road.centerline_y(d.ego_lane), d.onset,
       d.lateral_duration},
      p));
  sc.meta["challenger_lane"] = d.challenger_lane;
  sc.meta["gap"] = d.gap;
  sc.meta["decel"] = d.decel;
  sc.meta["onset"] = d.onset;
  sc.meta["lateral_duration"] = d.lateral_duration;
  sc.meta["speed_surplus"] = d.speed_surplus;
  return sc;
}

Scenario build_cutout(const CutoutDraw& d, const GenParams& p) {
  Scenario sc = skeleton(ScenarioKind::Cutout, d.ego_lane, d.ego_speed, p);
  const double y = p.road.centerline_y(d.ego_lane);
  sc.challengers.push_back(make_track(
      "c0", {p.ego_start_x + d.gap, d.ego_speed, 0.0, 0.0},
      {y, p.road.centerline_y(d.exit_lane), d.onset, d.lateral_duration}, p));
  sc.challengers.push_back(make_track(
      "c1", {p.ego_start_x + d.gap + d.spacing, d.ego_speed, d.onset + d.lateral_duration, d.decel},
      {y, y, 0.0, 0.0}, p));
  sc.meta["exit_lane"] = d.exit_lane;
  sc.meta["gap"] = d.gap;
  sc.meta["spacing"] = d.spacing;
  sc.meta["decel"] = d.decel;
  sc.meta["onset"] = d.onset;
  sc.meta["lateral_duration"] = d.lateral_duration;
  return sc;
}

Scenario generate_type_a(const GenParams& params) {
  return generate_with(
      params, ScenarioKind::TypeA, 0,
      [&](std::mt19937_64& rng) {
        TypeADraw d;
        d.ego_lane = draw_lane(rng, params.road.lane_count);
        d.ego_speed = draw(rng, params.ego_speed);
        d.gap = draw(rng, params.gap);
        d.decel = draw(rng, params.challenger_decel);
        d.onset = draw(rng, params.maneuver_onset);
        d.speed_surplus = draw(rng, params.easy_speed_surplus);
        if (params.easy) d.decel = 0.0;
        else d.speed_surplus = 0.0;
        return d;
      },
      build_type_a);
}

Scenario generate_type_b(const GenParams& params) {
  return generate_with(
      params, ScenarioKind::TypeB, 0,
      [&](std::mt19937_64& rng) {
        TypeBDraw d;
        d.ego_lane = draw_lane(rng, params.road.lane_count);
        d.challenger_lane = draw_adjacent(rng, d.ego_lane, params.road);
        d.ego_speed = draw(rng, params.ego_speed);
        d.gap = draw(rng, params.gap);
        d.decel = draw(rng, params.challenger_decel);
        d.onset = draw(rng, params.maneuver_onset);
        d.lateral_duration = draw(rng, params.cutin_lateral_duration);
        d.speed_surplus = draw(rng, params.easy_speed_surplus);
        if (params.easy) d.decel = 0.0;
        else d.speed_surplus = 0.0;
        return d;
      },
      build_type_b);
}

Scenario generate_cutout(const GenParams& params) {
  return generate_with(
      params, ScenarioKind::Cutout, 1,
      [&](std::mt19937_64& rng) {
        CutoutDraw d;
        d.ego_lane = draw_lane(rng, params.road.lane_count);
        d.exit_lane = draw_adjacent(rng, d.ego_lane, params.road);
        d.ego_speed = draw(rng, params.ego_speed);
        d.gap = draw(rng, params.gap);
        d.spacing = draw(rng, params.cutout_spacing);
        d.decel = draw(rng, params.challenger_decel);
        d.onset = draw(rng, params.maneuver_onset);
        d.lateral_duration = draw(rng, params.cutin_lateral_duration);
        if (params.easy) d.decel = 0.0;
        return d;
      },
      build_cutout);
}

Scenario generate(ScenarioKind kind, const GenParams& params) {
  switch (kind) {
    case ScenarioKind::TypeA: return generate_type_a(params);
    case ScenarioKind::TypeB: return generate_type_b(params);
    case ScenarioKind::Cutout: return generate_cutout(params);
    default: throw std::invalid_argument("no generator for kind " + std::string(to_string(kind)));
  }
}

EpisodeResult run_script(const Scenario& sc, const std::function<HighLevelAction(int)>& script,
                         const EnvConfig& cfg) {
  EnvConfig c = cfg;
  c.mode = ActionMode::Hierarchical;
  c.record_trace = false;
  Env env(c);
  env.reset(std::make_shared<const Scenario>(sc), 0);
  for (int tick = 0;; ++tick) {
    const StepOutcome out = env.step(script(tick));
    if (!out.terminated) continue;
    EpisodeResult r{*out.reason, out.info.t, std::nullopt};
    if (r.reason == TerminationReason::Collision) {
      const Footprint ego = footprint_of(env.state().ego, sc.ego_params);
      for (std::size_t i = 0; i < sc.challengers.size(); ++i) {
        const auto& tr = sc.challengers[i];
        if (rectangles_overlap(ego, footprint_of(tr, challenger_state_at(tr, r.t)))) {
          r.collided = i;
          break;
        }
      }
    }
    return r;
  }
}

EpisodeResult run_maintain(const Scenario& sc, const EnvConfig& cfg) {
  return run_script(sc, [](int) { return HighLevelAction{Lateral::Center, Longitudinal::Maintain}; }, cfg);
}

bool solvable_by_script(const Scenario& sc, const EnvConfig& cfg) {
  const auto goal = TerminationReason::GoalReached;
  if (run_script(sc, [](int) { return HighLevelAction{Lateral::Center, Longitudinal::HardBrake}; }, cfg)
          .reason == goal)
    return true;
  const int lane = sc.ego_start.lane;
  for (Lateral side : {Lateral::Left, Lateral::Right}) {
    if (!sc.road.valid_lane(side == Lateral::Left ? lane + 1 : lane - 1)) continue;
    for (Longitudinal lon : {Longitudinal::Maintain, Longitudinal::Accelerate}) {
      for (int start = 0; start < 6; ++start) {
        auto script = [=](int tick) {
          return HighLevelAction{tick == start ? side : Lateral::Center,
                                 tick < start ? Longitudinal::Maintain : lon};
        };
        if (run_script(sc, script, cfg).reason == goal) return true;
      }
    }
  }
  return false;
}

double decision_time(const Scenario& sc, const SimConfig& cfg) {
  EgoSim sim = EgoSim::start(sc);
  const HighLevelAction maintain{Lateral::Center, Longitudinal::Maintain};
  while (true) {
    advance_with_pilot(sc, sim, maintain, cfg);
    const auto reason = check_termination(sc, sim, cfg);
    if (!reason) continue;
    if (*reason == TerminationReason::Collision) return sim.time(sc);
    return std::numeric_limits<double>::infinity();
  }
}

bool passes_decision_filter(double t) {
  // Closed threshold; the small slack absorbs step-count * dt rounding.
  return std::isinf(t) || t >= kDecisionTimeThreshold - 1e-9;
}

FilterResult filter_scenarios(const std::vector<Scenario>& scenarios, const SimConfig& cfg) {
  FilterResult r;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const double t = decision_time(scenarios[i], cfg);
    r.decision_times.push_back(t);
    (passes_decision_filter(t) ? r.kept : r.rejected).push_back(i);
  }
  return r;
}

std::uint64_t derive_seed(std::uint64_t base, bool test, ScenarioKind kind, bool easy, int index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  h = mix(h ^ (test ? 0x7465737400000000ULL : 0x747261696e000000ULL));
  h = mix(h ^ static_cast<std::uint64_t>(kind));
  h = mix(h ^ (easy ? 1ULL : 0ULL));
  return mix(h ^ static_cast<std::uint64_t>(index));
}

DatasetResult build_dataset(const std::vector<DatasetRequest>& requests, std::uint64_t seed,
                            const std::filesystem::path& out_dir, const GenParams& base, bool parallel) {
  struct Job {
    bool test;
    DatasetRequest req;
    int index;
    std::uint64_t seed;
    std::string name;
  };
  std::vector<Job> jobs;
  for (bool test : {false, true}) {
    for (const auto& req : requests) {
      const int count = test ? req.test_count : req.train_count;
      for (int i = 0; i < count; ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%s%s_%05d", std::string(to_string(req.kind)).c_str(),
                      req.easy ? "_easy" : "", i);
        jobs.push_back({test, req, i, derive_seed(seed, test, req.kind, req.easy, i), name});
      }
    }
  }

  std::vector<std::variant<Scenario, std::string>> results(jobs.size());
  const auto n = static_cast<long long>(jobs.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long long j = 0; j < n; ++j) {
    const Job& job = jobs[static_cast<std::size_t>(j)];
    GenParams p = base;
    p.seed = job.seed;
    p.easy = job.req.easy;
    try {
      Scenario sc = generate(job.req.kind, p);
      sc.id = job.name + (job.test ? "_test" : "_train");
      results[static_cast<std::size_t>(j)] = std::move(sc);
    } catch (const std::exception& e) {
      results[static_cast<std::size_t>(j)] = std::string(e.what());
    }
  }

  DatasetResult out;
  out.manifest.seed = seed;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    const std::string split = job.test ? "test" : "train";
    if (const auto* err = std::get_if<std::string>(&results[j])) {
      out.failures.push_back({split, job.req.kind, job.index, job.seed, *err});
      continue;
    }
    const Scenario& sc = std::get<Scenario>(results[j]);
    const std::string rel = split + "/" + job.name + ".json";
    write_scenario_file(out_dir / rel, sc);
    ManifestEntry e{rel, sc.id, job.req.kind, job.seed, job.req.easy};
    (job.test ? out.manifest.test : out.manifest.train).push_back(std::move(e));
  }
  write_text_file(out_dir / "manifest.json", manifest_to_json(out.manifest));
  return out;
}

}  // namespace sad
