#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "sad/scenario.hpp"

namespace sad {

inline constexpr int kScenarioSchemaVersion = 1;

// Canonical scenario document (see docs/scenario-format.md). Output is
// deterministic: identical scenarios serialize to identical bytes.
std::string save_json(const Scenario& scenario);

// Throws SchemaError (with the offending field path) on malformed documents
// and InvariantError when the decoded scenario breaks an invariant.
Scenario load_json(std::string_view text);

// Straight-highway subset of the CommonRoad XML format: parallel straight
// lanelets, dynamic obstacles with state lists, one planning problem. Obstacle
// states are resampled to `target_dt` by linear interpolation. Throws
// UnsupportedFeature for anything outside the subset.
Scenario import_commonroad_xml(std::string_view text, double target_dt = 0.1);

// Dispatches on extension: .xml -> import_commonroad_xml, otherwise JSON.
Scenario load_scenario_file(const std::filesystem::path& path);
void write_scenario_file(const std::filesystem::path& path, const Scenario& scenario);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace sad
