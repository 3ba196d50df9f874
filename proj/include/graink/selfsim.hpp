#pragma once

#include <array>
#include <utility>
#include <vector>

namespace graink {

enum class SelfSimMethod {
  bracketed,  // scalar root of Gamma * Gamma_D(Phi(Gamma)) - Gamma_N over pole-free intervals
  damped      // alternating Gamma/Phi updates, Gamma <- (Gamma + Gamma_N / Gamma_D) / 2
};

struct SelfSimInput {
  std::array<double, 4> boundary{};  // phi_n(0), n = 2..5
  double beta = 1.0;
  int cap = 64;  // highest class in the moment vector
  double tol = 1e-12;
  int max_iter = 200;
  SelfSimMethod method = SelfSimMethod::bracketed;
  double gamma0 = 1.0;  // start value for the damped iteration

  void validate() const;
};

struct SelfSimResult {
  std::vector<double> phi;  // Phi_n, n = 2..cap, by row
  double gamma = 0;
  double gamma_n = 0, gamma_d = 0;
  bool trivial = false;
  bool converged = false;
  bool admissible = false;  // Phi >= 0
  int iterations = 0;
  std::vector<double> residual_history;
  double relation_residual = 0;     // max_n |Phi_n + Gamma (J Phi)_n - b_n| / max |b|
  double consistency_residual = 0;  // |sum Phi - sum b| / |sum b|
  double fixed_point_residual = 0;  // |Gamma - Gamma_N / Gamma_D(Phi)| / Gamma
  std::vector<double> poles;        // Gamma values where I + Gamma J is singular
};

SelfSimResult selfsim_moments(const SelfSimInput& in);

/// max_n |Phi_n(cap) - Phi_n(2 cap)| over the original range, relative to max |Phi|
double cap_sensitivity(const SelfSimInput& in);

/// b = 1/(Gamma+1), c = b((2 beta + 1) - 6 Gamma)
std::pair<double, double> lewis_asymptote(double beta, double gamma);

}  // namespace graink
