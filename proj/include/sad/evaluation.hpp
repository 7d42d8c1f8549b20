#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sad/env.hpp"
#include "sad/policy.hpp"
#include "sad/train.hpp"

namespace sad {

struct EpisodeRecord {
  std::string scenario;
  ScenarioKind kind = ScenarioKind::Other;
  std::string policy;
  std::uint64_t seed = 0;
  TerminationReason reason = TerminationReason::Timeout;
  double ret = 0.0;
  std::uint64_t length = 0;  // sub-steps
  bool operator==(const EpisodeRecord&) const = default;
};

// Percent per reason, indexed by TerminationReason. Throws
// std::invalid_argument on empty input.
using ReasonPercent = std::array<double, kTerminationReasonCount>;
ReasonPercent termination_distribution(std::span<const TerminationReason> reasons);
ReasonPercent termination_distribution(std::span<const EpisodeRecord> records);

// Element k is the mean of the last min(k + 1, window) values.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

// 0/1 series of reason == r.
std::vector<double> indicator(std::span<const TerminationReason> reasons, TerminationReason r);

// One episode of `policy` on `sc`; the env mode follows the policy tag.
EpisodeRecord run_episode(const Policy& policy, const std::string& name, std::shared_ptr<const Scenario> sc,
                          const EnvConfig& env, std::uint64_t seed);

struct NamedPolicy {
  std::string name;
  const Policy* policy;
};

struct TestSet {
  std::string name;
  std::vector<std::shared_ptr<const Scenario>> scenarios;
};

struct EvalOptions {
  EnvConfig env{};
  std::uint64_t seed = 0;
  // Stochastic policies see every scenario once per seed.
  int stochastic_seeds = 1;
  std::size_t ma_window = 100;
};

struct EvalCell {
  std::string policy;
  std::string set;
  std::size_t episodes = 0;  // M
  double goal_rate = 0.0;    // G in [0, 100]
  ReasonPercent distribution{};
  std::vector<EpisodeRecord> records;  // episode order
};

struct EvalReport {
  std::vector<EvalCell> cells;  // policy-major
  std::size_t ma_window = 100;
  const EvalCell* find(std::string_view policy, std::string_view set) const;
};

// Seed of episode (rep, scenario index) within a cell.
std::uint64_t episode_seed(std::uint64_t base, std::size_t scenario_index, int rep);

// Reference implementation: one episode at a time.
EvalReport goal_matrix_serial(const std::vector<NamedPolicy>& policies, const std::vector<TestSet>& sets,
                              const EvalOptions& opt);
// OpenMP over all episodes of all cells; identical result to the serial one.
EvalReport goal_matrix(const std::vector<NamedPolicy>& policies, const std::vector<TestSet>& sets,
                       const EvalOptions& opt);

// goal_matrix.csv, termination.csv, episodes.csv and plots/*.dat.
void emit_report(const EvalReport& report, const std::filesystem::path& dir);
std::string goal_matrix_csv(const EvalReport& report);
std::string termination_csv(const EvalReport& report);
std::string episodes_csv(const EvalReport& report);

struct GoalMatrixRow {
  std::string policy;
  std::string set;
  std::size_t episodes = 0;
  double goal_rate = 0.0;
  bool operator==(const GoalMatrixRow&) const = default;
};
std::vector<GoalMatrixRow> parse_goal_matrix_csv(std::string_view text);

// Two-column "x y" text: episode index and moving-average rate (percent).
std::string plot_data(std::span<const double> ma);
// One plot-data file per reason from a training log.
void emit_training_curves(const std::vector<TrainLogRow>& log, std::size_t window,
                          const std::filesystem::path& dir);

// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace sad
