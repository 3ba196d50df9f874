#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "graink/kinetic.hpp"
#include "graink/stepper.hpp"

namespace graink {

// ---- initial data -------------------------------------------------------------

enum class InitialFamily { compact_bump, exponential, custom_table };

struct InitialSpec {
  InitialFamily family = InitialFamily::exponential;
  std::vector<int> classes;  // empty: all classes 2..n0
  double a_lo = 1.0, a_hi = 2.0;  // compact bump support
  double lambda = 1.0;            // exponential decay
  double amplitude = 1.0;         // c_n = amplitude * phi_n
  bool random_amplitudes = false; // c_n *= U(0.5, 1.5) from the seed
  std::string table;              // custom table path (snapshot CSV)
  bool project = true;            // scale classes n > 6 to P = 0
  std::optional<double> area;     // rescale to this covered area after projection

  void validate(const ModelParams& p) const;
};

SimState build_initial_state(const InitialSpec& spec, const ModelParams& p,
                             std::uint64_t seed = 0);

/// Scales classes n > 6 so that P = 0; identity when P is already zero.
SimState project_polyhedral(const SimState& s, const ModelParams& p);

/// Splitmix-style uniform in [0, 1) from a 64-bit seed stream, bit-stable
/// across standard libraries.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : x_(seed) {}
  double next();

 private:
  std::uint64_t x_;
};

// ---- snapshots and series --------------------------------------------------------

struct SnapshotHeader {
  double time = 0;
  double beta = 1;
  int n0 = 0;
  double delta_a = 0;
  std::size_t num_nodes = 0;
  ClassClosure closure = ClassClosure::truncated;  // optional line, default truncated

  ModelParams params() const;
};

/// "# time=..." and grid comment lines, then "n,a,f" rows in class-major
/// order, %.17g throughout.
void write_snapshot(const std::filesystem::path& path, const SimState& s, const ModelParams& p);

struct LoadedSnapshot {
  SnapshotHeader header;
  SimState state;
};

LoadedSnapshot read_snapshot(const std::filesystem::path& path);

/// One row per lattice time: t, N, A, P, M, R, Gamma_N, Gamma_D, Gamma,
/// Gamma_bar, flat norm, min value, theta, overflow, overflow area.
void write_time_series(const std::filesystem::path& path, const TrajectoryRecord& rec);

std::string format_double(double v);

}  // namespace graink
