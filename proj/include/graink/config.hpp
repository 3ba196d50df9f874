#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "graink/io.hpp"
#include "graink/kinetic.hpp"
#include "graink/selfsim.hpp"
#include "graink/stepper.hpp"

namespace graink {

struct DiagnosticsConfig {
  bool tightness = true;
  std::vector<double> times;   // empty: every stored snapshot after t = 0
  std::vector<double> alphas;  // empty: 1..10
  std::optional<double> support_edge;  // a0 for the compact-support bound
  bool lewis = true;
};

struct RunConfig {
  ModelParams model;
  StepperConfig stepper;
  double t_final = 1.0;
  double output_every = 0.1;  // snapshot cadence in time
  InitialSpec initial;

  std::vector<int> rungs{10, 14, 18};
  int class_limit = 8;

  std::vector<double> deltas{1e-2, 1e-3};
  InitialSpec perturbation;  // bump shape for the stability pair

  SelfSimInput selfsim;
  DiagnosticsConfig diagnostics;
  std::uint64_t seed = 0;
  std::string out = "out";

  RunConfig();
  /// throws ConfigError
  void validate() const;
};

/// JSON document; unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string dump_config(const RunConfig& cfg);

}  // namespace graink
