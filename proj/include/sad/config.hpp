#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sad/a2c.hpp"
#include "sad/env.hpp"
#include "sad/factory.hpp"
#include "sad/policy.hpp"

namespace sad {

// Everything a run depends on. Serialised as INI; every key is optional on
// input and every key is written on output, so a snapshot documents the
// defaults in force.
struct RunConfig {
  PolicyTag policy = PolicyTag::A2cDiscrete;
  EnvConfig env{};
  A2cConfig a2c{};
  GenParams gen{};
  std::uint64_t budget = 100000;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_every = 0;
  std::size_t ma_window = 100;
  int stochastic_seeds = 1;
  bool greedy_eval = true;
};

// Unknown sections/keys and malformed values raise SchemaError.
RunConfig parse_config(std::string_view ini);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_ini(const RunConfig& c);

}  // namespace sad
