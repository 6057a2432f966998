#pragma once

// Run configuration: one JSON file with nested scenario / solver / rollout
// sections, carrying a schema_version field. Custom (non-warehouse) games
// live in an auxiliary JSON file of explicit kernel and cost tables,
// referenced from the scenario section.

#include <cstdint>
#include <map>
#include <string>

#include "mdpcg/solver.hpp"
#include "mdpcg/warehouse.hpp"

namespace mdpcg::io {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kToolVersion = "mdpcg 0.1.0";

struct RolloutConfig {
  int trials = 100;
  std::uint64_t seed = 1234;
};

struct RunConfig {
  std::string scenario_type = "warehouse";  // "warehouse" or "custom"
  std::string custom_game_path;             // for "custom", resolved against the config dir
  warehouse::ScenarioConfig scenario;
  SolveOptions solver;
  RolloutConfig rollout;
};

// Throws std::runtime_error naming the offending field on malformed input or
// schema mismatch.
RunConfig load_run_config(const std::string& path);

// Builds the game instance the config describes.
GameInstance build_instance(const RunConfig& config);

// Explicit-table game file.
GameInstance load_custom_game(const std::string& path);
void save_custom_game(const std::string& path, const GameInstance& instance);

// FNV-1a over the raw file bytes; stable across runs and platforms.
std::uint64_t hash_file(const std::string& path);

// Flat key=value manifest, written into the output directory before any
// other stage output. Reruns overwrite it wholesale.
struct RunManifest {
  std::string stage;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::string created_utc;
  std::string status = "started";
};

void write_manifest(const std::string& path, const RunManifest& manifest);
std::map<std::string, std::string> read_manifest(const std::string& path);

std::string utc_timestamp();

}  // namespace mdpcg::io
