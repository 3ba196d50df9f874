#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "graink/config.hpp"

namespace graink {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_admissibility = 3,
  exit_io = 4,
};

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> snapshot;  // check only
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

/// Dispatches simulate / ladder / selfsim / stability / check and maps
/// exceptions to exit codes; messages go to stderr.
int run_command(const std::string& name, const CommandOptions& opts);

// the drivers themselves; they throw, run_command catches
int simulate_cmd(const RunConfig& cfg, bool quiet);
int ladder_cmd(const RunConfig& cfg, bool quiet);
int selfsim_cmd(const RunConfig& cfg, bool quiet);
int stability_cmd(const RunConfig& cfg, bool quiet);

}  // namespace graink
