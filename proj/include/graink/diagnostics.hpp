#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graink/kinetic.hpp"
#include "graink/stepper.hpp"

namespace graink {

// ---- invariants ---------------------------------------------------------------

struct InvariantReport {
  double area_drift = 0;         // max |A(t) - A(0)| / A(0), on-grid area
  double leak_area_drift = 0;    // same with the area carried past a_max added back
  double defect_ratio = 0;       // max |P(t)| / M(0)
  int n_violations = 0;          // steps where N grew by more than 1e-12 N(0)
  double max_n_increase = 0;     // largest N(t+dt) - N(t), relative to N(0)
  double min_node = 0;           // min f / |g|_flat
  double flat_ratio = 0;         // max |f(t)|_flat / |g|_flat
  double min_gamma_d_ratio = 0;  // min Gamma_D / N
  double overflow_number = 0;    // cumulative number pushed past a_max
  double overflow_area = 0;

  /// the stated tolerances: 1e-6, 1e-6, 0 violations, -1e-14, 1 + 1e-10, 6 - 2(beta+1)
  bool passes(double beta) const;
};

InvariantReport invariant_report(const TrajectoryRecord& rec, const ModelParams& p);

// ---- quasi-complements ----------------------------------------------------------

/// sum_{n > nu} int_0^alpha f_n + sum_n int_alpha^inf f_n
double quasi_complement_first(const SimState& s, double alpha, int nu, const ModelParams& p);
/// nu = floor(alpha)
double quasi_complement_first(const SimState& s, double alpha, const ModelParams& p);
/// sum_{n > floor(alpha)} n int f_n + sum_n int_alpha^inf a f_n
double quasi_complement_second(const SimState& s, double alpha, const ModelParams& p);
/// (alpha + 1) e^{-gamma alpha} + alpha N_perp(0, alpha) + int_alpha^inf N_perp(0, a) da
double initial_envelope(const SimState& g, double alpha, const ModelParams& p);

struct TailFit {
  double rate = 0;       // d
  double prefactor = 0;  // D, smallest with value <= D e^{-d alpha} on the samples
};

/// log-linear least squares for the rate; prefactor from the sampled maximum
TailFit fit_exponential_tail(std::span<const double> alphas, std::span<const double> values);

/// e^gamma / gamma
double n_envelope_constant(double beta);
/// max(4, 2 C1 (1 + 1/gamma), 2 (1+beta)^2 / beta) with C1 = e^gamma / gamma
double m_envelope_constant(double beta);

struct TightnessSample {
  double t = 0, alpha = 0;
  double n_perp = 0, m_perp = 0;
  double n_bound = 0, m_bound = 0;
  double n_margin() const { return n_bound - n_perp; }
  double m_margin() const { return m_bound - m_perp; }
};

struct TightnessRecord {
  std::vector<TightnessSample> samples;
  std::vector<double> times;
  std::vector<TailFit> fits;  // per time: M_perp(t, .) <= D_t (1 + Gamma_bar) e^{-d_t alpha}
  double overflow_number = 0, overflow_area = 0;
  bool n_envelope_ok = true;
  bool m_envelope_ok = true;
  bool ordering_ok = true;  // N_perp <= M_perp
  double min_n_margin = 0, min_m_margin = 0;
};

/// Samples every (t, alpha) pair with t taken from the trajectory snapshots.
TightnessRecord tightness_envelope(const TrajectoryRecord& rec, const ModelParams& p,
                                   std::span<const double> times,
                                   std::span<const double> alphas);

// ---- grain count ----------------------------------------------------------------

struct CountBoundSample {
  double t = 0, N = 0;
  std::optional<double> support_bound;  // A(g) / (a0 + t (n0 - 6))
  double positivity_bound = 0;          // C_t
  double gamma_bar = 0, gamma_bar_bound = 0;
};

struct CountBoundReport {
  std::vector<CountBoundSample> samples;
  bool support_ok = true, positivity_ok = true, gamma_ok = true;
  std::string notice;
  TailFit initial_fit;  // envelope fit of the initial N-perp profile
  double gamma_constant = 0;  // c in Gamma_bar <= c |g|_flat / N
};

/// `support_edge` is a0 for compactly supported data; without it the first
/// bound is skipped.
CountBoundReport grain_count_bounds(const TrajectoryRecord& rec, const ModelParams& p,
                                    std::optional<double> support_edge);

/// Smallest x in (0, inf) with (2x/(A d)) ln(2K(1 + kappa/x)/A) >= 1.
double positivity_root(double A, double K, double kappa, double d);

// ---- energy distance and stability ---------------------------------------------

double energy_distance(const SimState& f, const SimState& g, const ModelParams& p);

struct StabilityRun {
  double delta = 0;
  std::vector<double> t, energy;
  double slope = 0;     // least squares slope of log E
  double envelope = 0;  // max over sample intervals of d log E / dt
};

struct StabilityReport {
  std::vector<StabilityRun> runs;
  double c_hat = 0;          // max envelope over the runs
  double slope_spread = 0;   // (max - min) / |mean| of the slopes
  double c_hat_spread = 0;   // same for the per-run envelopes
  bool envelope_ok = true;   // E(t) <= e^{c_hat t} E(0) for every run and sample
};

/// Runs g and g + delta * bump for each delta with one configuration; both data
/// must be admissible. E is sampled at every stored snapshot.
StabilityReport stability_experiment(const SimState& g, const SimState& bump,
                                     const std::vector<double>& deltas, double t_final,
                                     const StepperConfig& cfg, const ModelParams& p);

// ---- Lewis statistics -------------------------------------------------------------

struct LewisFit {
  std::vector<int> classes;
  std::vector<double> means;  // <a>_n for the listed classes
  double slope = 0, intercept = 0;  // <a>_n ~ slope (n - 6) + intercept over the window
  int window_lo = 8, window_hi = 0;
  bool fitted = false;
};

LewisFit lewis_means(const SimState& s, const ModelParams& p, double mass_floor = 1e-300,
                     int window_lo = 8, int window_hi = -1);

}  // namespace graink
