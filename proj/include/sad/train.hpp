#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sad/a2c.hpp"
#include "sad/env.hpp"
#include "sad/policy.hpp"

namespace sad {

struct TrainConfig {
  PolicyTag policy = PolicyTag::A2cDiscrete;
  A2cConfig a2c{};
  EnvConfig env{};
  std::uint64_t budget = 100000;  // simulation sub-steps
  std::uint64_t seed = 0;
  // A checkpoint is emitted at the first episode boundary after every
  // multiple of this many sub-steps; 0 disables.
  std::uint64_t checkpoint_every = 0;
};

struct TrainLogRow {
  std::uint64_t episode = 0;
  std::string scenario;
  ScenarioKind kind = ScenarioKind::Other;
  TerminationReason reason = TerminationReason::Timeout;
  double ret = 0.0;
  std::uint64_t length = 0;    // sub-steps
  std::uint64_t substeps = 0;  // cumulative after this episode
  double wall_time = 0.0;      // s since the run started; not part of the CSV
};

struct TrainResult {
  // A2C tags only.
  std::optional<Checkpoint> checkpoint;
  std::vector<TrainLogRow> log;
  std::uint64_t substeps = 0;
};

using CheckpointSink = std::function<void(const Checkpoint&)>;

// Runs the policy against scenarios drawn uniformly (seeded stream) until
// the sub-step budget is spent; an episode cut by the budget is not logged.
// Baseline tags only produce a log. Resuming requires a checkpoint taken by
// the same configuration.
TrainResult train(const std::vector<std::shared_ptr<const Scenario>>& scenarios, const TrainConfig& cfg,
                  const std::optional<Checkpoint>& resume = std::nullopt, const CheckpointSink& sink = {});

// episode,scenario,kind,reason,return,length,substeps
std::string train_log_csv(const std::vector<TrainLogRow>& log, bool header = true);
// episode,wall_time
std::string timing_csv(const std::vector<TrainLogRow>& log, bool header = true);
std::vector<TrainLogRow> parse_train_log_csv(std::string_view text);

}  // namespace sad
