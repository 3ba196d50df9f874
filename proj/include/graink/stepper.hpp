#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "graink/kinetic.hpp"
#include "graink/propagator.hpp"
#include "graink/transport.hpp"

namespace graink {

enum class Scheme { strang, picard };

enum class WeightClosure {
  conservative,  // collision exponents fixed by discrete conservation of A and P
  predictor      // exponent from a Heun-averaged Gamma
};

struct StepperConfig {
  double dt = 0.01;
  Scheme scheme = Scheme::strang;
  WeightClosure closure = WeightClosure::conservative;
  double picard_tol = 1e-12;
  int picard_max_iter = 200;
  double window = 0.1;
  int window_retries = 6;
  double gamma_d_floor_factor = 1e-8;  // eps_D = factor * (6 - 2(beta+1)) * N(0)
  double overflow_tolerance = 1e-6;    // relative to N(0)
  bool layer_repair = false;
  std::size_t sample_every = 1;  // keep every k-th lattice state

  void validate(const ModelParams& p) const;
};

struct StepDiagnostics {
  double theta_pre = 0, theta_post = 0;
  double gamma_effective = 0;  // (theta_pre + theta_post) / dt
  BoundaryOutflow flow;
  MomentSet moments;  // of the new state
};

/// Boundary repair for classes above 6 after each lattice step: node 0 is set
/// to zero and the s-1 cells opened by the shift get the linear interpolant
/// between node 0 and node s = (n-6)k. The number removed is added to
/// flow->outflow when a flow record is given.
void repair_boundary(SimState& s, int k, bool layer, const ModelParams& p,
                     BoundaryOutflow* flow = nullptr);

/// Strang stepper with cached propagators and conservation functionals.
class StrangStepper {
 public:
  StrangStepper(const ModelParams& p, const StepperConfig& cfg);
  StepDiagnostics advance(SimState& s);

 private:
  StepDiagnostics advance_conservative(SimState& s);
  StepDiagnostics advance_predictor(SimState& s);
  void build_functionals();

  ModelParams p_;
  StepperConfig cfg_;
  int k_;
  CollisionPropagator prop_;
  // class-major coefficient panels, shape (classes, nodes)
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> area_shift_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> defect_final_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> area_repair_;
};

std::pair<SimState, StepDiagnostics> strang_step(const SimState& s, const StepperConfig& cfg,
                                                 const ModelParams& p);

using WeightFunction = std::function<double(double)>;

struct PicardResult {
  std::vector<SimState> states;  // lattice states t0, t0+dt, ..., t0+tau
  std::vector<double> gamma;     // Gamma at each lattice time
  std::vector<BoundaryOutflow> flows;
  int iterations = 0;
  std::vector<double> increments;  // sup_t |f^{k+1} - f^k|_flat per sweep
  std::vector<double> sup_norms;   // sup_t |f^k|_flat per sweep (index 0: initial iterate)
};

/// Fixed-point iteration of the Duhamel formula on one window. With
/// `prescribed` set, Gamma(t) is taken from it instead of the iterate.
PicardResult picard_window(const SimState& g, double tau, const StepperConfig& cfg,
                           const ModelParams& p, const WeightFunction* prescribed = nullptr);

struct StepRecord {
  double t = 0;
  MomentSet moments;
  double gamma = 0;      // Gamma of the state (0 when unset)
  double gamma_bar = 0;  // running max of state Gamma and effective step weight
  double flat_norm = 0;
  double min_value = 0;
  double theta = 0;  // collision exponent of the step ending at t
  std::vector<double> cumulative_outflow;  // per row
  double cumulative_overflow = 0;
  double cumulative_overflow_area = 0;
};

enum class Termination { completed, admissibility_lost, overflow_leak, non_contraction };

struct TrajectoryRecord {
  std::vector<StepRecord> steps;   // every lattice time, t = 0 first
  std::vector<SimState> snapshots; // every sample_every-th lattice state (and the last)
  double initial_flat_norm = 0;
  Termination termination = Termination::completed;
  std::string message;

  bool completed() const { return termination == Termination::completed; }
  const SimState* snapshot_at(double t, double tol = 1e-9) const;
};

/// Throws AdmissibilityError unless s is non-negative, P = 0, boundary zeros
/// hold for n > 6 and A > 0.
void check_admissible(const SimState& s, const ModelParams& p, double p_tol = 1e-10);

TrajectoryRecord run_simulation(const SimState& g, double t_final, const StepperConfig& cfg,
                                const ModelParams& p);

struct RungPair {
  int n0_low = 0, n0_high = 0;
  double class_diff = 0;      // sup_t max over classes <= class_limit of sup_a |f - f'|
  double all_class_diff = 0;  // same over all classes of the lower rung
  double n_diff = 0, a_diff = 0, gamma_diff = 0;
};

struct LadderReport {
  std::vector<int> rungs;
  std::vector<TrajectoryRecord> runs;
  std::vector<RungPair> pairs;
  int class_limit = 8;
};

/// g lives on the top rung (params.n0 == max of rungs); lower rungs take its
/// restriction.
LadderReport truncation_ladder(const SimState& g, const std::vector<int>& rungs, double t_final,
                               const StepperConfig& cfg, const ModelParams& top,
                               int class_limit = 8);

SimState restrict_classes(const SimState& g, const ModelParams& from, const ModelParams& to);

}  // namespace graink
