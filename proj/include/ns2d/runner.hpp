#pragma once

#include <filesystem>

#include "ns2d/config.hpp"

namespace ns2d::runner {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_numerical = 3;
inline constexpr int exit_certification = 4;
inline constexpr int exit_replay_mismatch = 5;

/// Executes the configured experiment, writing a manifest, result JSON/CSV
/// and checkpoints under cfg.out_dir. Returns a process exit code; every
/// failure also leaves a machine-readable error.json in the output directory.
int run(const config::RunConfig& cfg);

/// Re-executes the manifest's experiment into a scratch directory and
/// compares the digests of all primary outputs. thread_override > 0 replays
/// with that worker count (outputs must not depend on it).
int replay(const std::filesystem::path& manifest_path, int thread_override = 0);

}  // namespace ns2d::runner
