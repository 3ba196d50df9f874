#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace graink {

enum class ClassClosure {
  truncated,  // boundary rows at n0 keep the system conservative
  full        // interior rows up to a hard cap, flux past the cap is lost
};

/// Uniform area nodes a_i = i * delta_a, i = 0..num_nodes-1.
struct AreaGrid {
  double delta_a = 0.01;
  std::size_t num_nodes = 3001;

  double node(std::size_t i) const { return static_cast<double>(i) * delta_a; }
  double a_max() const { return node(num_nodes - 1); }
  /// trapezoid weight of node i
  double weight(std::size_t i) const {
    return (i == 0 || i + 1 == num_nodes) ? 0.5 * delta_a : delta_a;
  }
  void validate() const;
};

struct ModelParams {
  static constexpr int n_min = 2;

  double beta = 1.0;
  int n0 = 20;  // highest stored class; the array cap in full closure
  ClassClosure closure = ClassClosure::truncated;
  AreaGrid grid;

  std::size_t num_classes() const { return static_cast<std::size_t>(n0 - 1); }
  static std::size_t row(int n) { return static_cast<std::size_t>(n - n_min); }
  void validate() const;

  /// Full closure with the cap chosen so that phi_cap <= tail.
  static ModelParams full_model(double beta, AreaGrid grid, double tail = 1e-14);
};

/// Class-major density table f_n(a_i), classes 2..n0.
struct SimState {
  std::size_t classes = 0;
  std::size_t nodes = 0;
  std::vector<double> f;
  double time = 0.0;

  SimState() = default;
  explicit SimState(const ModelParams& p, double t = 0.0);

  double& at(int n, std::size_t i) { return f[ModelParams::row(n) * nodes + i]; }
  double at(int n, std::size_t i) const { return f[ModelParams::row(n) * nodes + i]; }
  std::span<double> cls(int n) { return {f.data() + ModelParams::row(n) * nodes, nodes}; }
  std::span<const double> cls(int n) const {
    return {f.data() + ModelParams::row(n) * nodes, nodes};
  }
  /// column at node i (copy; classes are not contiguous)
  std::vector<double> column(std::size_t i) const;
  void check_shape(const ModelParams& p) const;
};

// ---- collision operator ---------------------------------------------------

/// u_n, the diagonal loss rate: (J f)_n = (J+ f)_n - u_n f_n.
std::vector<double> relaxation_constants(const ModelParams& p);

std::vector<double> apply_collision(std::span<const double> col, const ModelParams& p);
std::vector<double> apply_collision_gain(std::span<const double> col, const ModelParams& p);
/// the diagonal part u_n f_n (returned with positive sign)
std::vector<double> apply_collision_loss(std::span<const double> col, const ModelParams& p);

// ---- moments ----------------------------------------------------------------

struct MomentSet {
  double N = 0, A = 0, P = 0, M = 0, R = 0;
  double gamma_n = 0, gamma_d = 0;
  std::optional<double> gamma;  // empty when Gamma_D <= 0
  double edges = 0, facets = 0;
};

/// trapezoid integrals of each class, indexed by row
std::vector<double> class_integrals(const SimState& s, const ModelParams& p);
std::vector<double> class_area_integrals(const SimState& s, const ModelParams& p);

/// Never throws on Gamma_D <= 0; the weight is left unset instead.
MomentSet evaluate_moments(const SimState& s, const ModelParams& p);
/// As above, but a non-empty state with Gamma_D <= 0 raises DegenerateWeightError.
MomentSet compute_moments(const SimState& s, const ModelParams& p);

// ---- super-solution and flat norm ------------------------------------------

struct SuperSolution {
  std::vector<double> phi;  // by row
  std::vector<double> u;    // relaxation constants, by row
  double gamma_decay = 0;   // log(1 + 1/beta)
};

SuperSolution super_solution(const ModelParams& p);

double flat_norm(const SimState& s, const SuperSolution& ss);
std::vector<double> flat_norm_per_class(const SimState& s, const SuperSolution& ss);
double min_value(const SimState& s);

}  // namespace graink
