#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sad/env.hpp"
#include "sad/scenario.hpp"

namespace sad {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range&) const = default;
};

inline constexpr double kDecisionTimeThreshold = 6.5;  // s

struct GenParams {
  std::uint64_t seed = 1;
  Range ego_speed{20.0, 35.0};             // m/s
  Range gap{30.0, 80.0};                   // m, center to center
  Range challenger_decel{-8.0, -3.0};      // m/s^2
  Range cutin_lateral_duration{2.0, 4.0};  // s
  // Time the challenger cruises before its critical maneuver begins.
  Range maneuver_onset{4.0, 8.0};          // s
  // Cutout: spacing between the exiting vehicle and the one it hides.
  Range cutout_spacing{25.0, 50.0};        // m
  // Easy scenarios: challenger cruise-speed surplus over the ego.
  Range easy_speed_surplus{0.0, 5.0};      // m/s
  RoadNetwork road{};
  double dt = 0.1;
  double duration = 20.0;
  double ego_start_x = 50.0;
  // Goal starts at ego_start_x + goal_fraction * v0 * duration.
  double goal_fraction = 0.8;
  // Relaxes imminence: the maintain policy must reach the goal instead.
  bool easy = false;
  int max_attempts = 100;
  EnvConfig env{};  // pilot/shield settings used for verification rollouts

  void validate() const;
};

// Concrete draws; the builders below turn them into scenarios without any
// acceptance checks (useful for fixtures).
struct TypeADraw {
  int ego_lane = 1;
  double ego_speed = 30.0;
  double gap = 40.0;
  double decel = -6.0;  // 0 = cruise
  double onset = 4.0;
  double speed_surplus = 0.0;
};

struct TypeBDraw {
  int ego_lane = 1;
  int challenger_lane = 2;
  double ego_speed = 30.0;
  double gap = 40.0;
  double decel = -6.0;
  double onset = 4.0;
  double lateral_duration = 3.0;
  double speed_surplus = 0.0;
};

struct CutoutDraw {
  int ego_lane = 1;
  int exit_lane = 2;
  double ego_speed = 30.0;
  double gap = 40.0;
  double spacing = 35.0;
  double decel = -6.0;
  double onset = 4.0;
  double lateral_duration = 3.0;
};

Scenario build_type_a(const TypeADraw& d, const GenParams& p);
Scenario build_type_b(const TypeBDraw& d, const GenParams& p);
Scenario build_cutout(const CutoutDraw& d, const GenParams& p);

// Generators resample (up to max_attempts) until the scenario is drivable,
// passes the decision-time filter, is critical (maintain collides; easy
// mode: maintain reaches the goal) and is solvable by a scripted evasive
// policy. Throws std::runtime_error on exhaustion. Pure in `params`.
Scenario generate_type_a(const GenParams& params);
Scenario generate_type_b(const GenParams& params);
Scenario generate_cutout(const GenParams& params);
Scenario generate(ScenarioKind kind, const GenParams& params);

struct EpisodeResult {
  TerminationReason reason = TerminationReason::Timeout;
  double t = 0.0;
  // Index of the challenger hit, for collisions.
  std::optional<std::size_t> collided;
};

// Runs a tick-indexed open-loop action script to termination.
EpisodeResult run_script(const Scenario& sc, const std::function<HighLevelAction(int)>& script,
                         const EnvConfig& cfg);
EpisodeResult run_maintain(const Scenario& sc, const EnvConfig& cfg);

// True if hard-braking, or a lane change into a free adjacent lane at one of
// the first few ticks, reaches the goal.
bool solvable_by_script(const Scenario& sc, const EnvConfig& cfg);

// Time until a passive (maintain, unshielded) ego collides; +inf if never.
double decision_time(const Scenario& sc, const SimConfig& cfg = {});

struct FilterResult {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> rejected;
  std::vector<double> decision_times;
};

bool passes_decision_filter(double decision_time);
FilterResult filter_scenarios(const std::vector<Scenario>& scenarios, const SimConfig& cfg = {});

// ---- datasets ----

struct ManifestEntry {
  std::string path;  // relative to the manifest directory
  std::string id;
  ScenarioKind kind = ScenarioKind::Other;
  std::uint64_t seed = 0;
  bool easy = false;
  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::optional<std::uint64_t> seed;
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
  bool operator==(const Manifest&) const = default;
};

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(std::string_view text);
Manifest load_manifest(const std::filesystem::path& path);

// Entries of the test split, or of the train split when no test split exists,
// resolved against the manifest directory.
std::vector<std::filesystem::path> evaluation_paths(const std::filesystem::path& manifest_path);
std::vector<std::filesystem::path> split_paths(const std::filesystem::path& manifest_path, bool test);
std::vector<std::shared_ptr<const Scenario>> load_scenarios(const std::vector<std::filesystem::path>& paths);

struct DatasetRequest {
  ScenarioKind kind = ScenarioKind::TypeA;
  bool easy = false;
  int train_count = 0;
  int test_count = 0;
};

struct GenerationFailure {
  std::string split;
  ScenarioKind kind;
  int index;
  std::uint64_t seed;
  std::string message;
};

struct DatasetResult {
  Manifest manifest;
  std::vector<GenerationFailure> failures;
};

// Per-scenario seed; train and test use disjoint streams.
std::uint64_t derive_seed(std::uint64_t base, bool test, ScenarioKind kind, bool easy, int index);

// Generates every requested scenario (OpenMP-parallel over indices when
// `parallel`), writes one JSON file per scenario plus manifest.json under
// out_dir. A pure function of (requests, seed, template).
DatasetResult build_dataset(const std::vector<DatasetRequest>& requests, std::uint64_t seed,
                            const std::filesystem::path& out_dir, const GenParams& base = {},
                            bool parallel = true);

}  // namespace sad
