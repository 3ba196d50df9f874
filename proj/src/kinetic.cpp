#include "graink/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "graink/errors.hpp"

namespace graink {

void AreaGrid::validate() const {
  if (!(delta_a > 0.0) || !std::isfinite(delta_a))
    throw ContractError("delta_a must be positive and finite");
  if (num_nodes < 2) throw ContractError("num_nodes must be at least 2");
}

void ModelParams::validate() const {
  if (!(beta > 0.0 && beta < 2.0))
    throw ContractError("beta must lie in (0, 2), got " + std::to_string(beta));
  if (n0 < 8) throw ContractError("n0 must be at least 8, got " + std::to_string(n0));
  grid.validate();
}

ModelParams ModelParams::full_model(double beta, AreaGrid grid, double tail) {
  ModelParams p;
  p.beta = beta;
  p.grid = grid;
  p.closure = ClassClosure::full;
  if (!(beta > 0.0 && beta < 2.0)) throw ContractError("beta must lie in (0, 2)");
  // phi_n = exp(-gamma n)/(n beta) is decreasing in n
  const double g = std::log1p(1.0 / beta);
  int n = 8;
  while (std::exp(-g * n) / (n * beta) > tail) ++n;
  p.n0 = n;
  return p;
}

SimState::SimState(const ModelParams& p, double t)
    : classes(p.num_classes()), nodes(p.grid.num_nodes), f(classes * nodes, 0.0), time(t) {}

std::vector<double> SimState::column(std::size_t i) const {
  std::vector<double> c(classes);
  for (std::size_t r = 0; r < classes; ++r) c[r] = f[r * nodes + i];
  return c;
}

void SimState::check_shape(const ModelParams& p) const {
  if (classes != p.num_classes() || nodes != p.grid.num_nodes || f.size() != classes * nodes)
    throw ContractError("state shape does not match model parameters");
}

// ---------------------------------------------------------------------------

std::vector<double> relaxation_constants(const ModelParams& p) {
  const std::size_t K = p.num_classes();
  std::vector<double> u(K);
  const double b = p.beta;
  for (int n = 2; n <= p.n0; ++n) u[ModelParams::row(n)] = (2.0 * b + 1.0) * n;
  u[0] = 2.0 * b;
  if (p.closure == ClassClosure::truncated) u[K - 1] = (b + 1.0) * p.n0;
  return u;
}

namespace {

void check_column(std::span<const double> col, const ModelParams& p) {
  if (col.size() != p.num_classes())
    throw ContractError("column length " + std::to_string(col.size()) + " != n0 - 1 = " +
                        std::to_string(p.num_classes()));
}

}  // namespace

std::vector<double> apply_collision_gain(std::span<const double> col, const ModelParams& p) {
  check_column(col, p);
  const std::size_t K = col.size();
  const double b = p.beta;
  std::vector<double> out(K, 0.0);
  // row of class n = r + 2
  out[0] = 3.0 * (b + 1.0) * col[1];
  for (std::size_t r = 1; r + 1 < K; ++r) {
    const double n = static_cast<double>(r + 2);
    out[r] = (b + 1.0) * (n + 1.0) * col[r + 1] + b * (n - 1.0) * col[r - 1];
  }
  const double ntop = static_cast<double>(p.n0);
  out[K - 1] = b * (ntop - 1.0) * col[K - 2];
  return out;
}

std::vector<double> apply_collision_loss(std::span<const double> col, const ModelParams& p) {
  check_column(col, p);
  const auto u = relaxation_constants(p);
  std::vector<double> out(col.size());
  for (std::size_t r = 0; r < col.size(); ++r) out[r] = u[r] * col[r];
  return out;
}

std::vector<double> apply_collision(std::span<const double> col, const ModelParams& p) {
  auto g = apply_collision_gain(col, p);
  const auto l = apply_collision_loss(col, p);
  for (std::size_t r = 0; r < g.size(); ++r) g[r] -= l[r];
  return g;
}

// ---------------------------------------------------------------------------

namespace {

double trapezoid(std::span<const double> v, const AreaGrid& g) {
  if (v.empty()) return 0.0;
  double s = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
  return s * g.delta_a;
}

}  // namespace

std::vector<double> class_integrals(const SimState& s, const ModelParams& p) {
  s.check_shape(p);
  std::vector<double> m(s.classes);
  for (int n = 2; n <= p.n0; ++n) m[ModelParams::row(n)] = trapezoid(s.cls(n), p.grid);
  return m;
}

std::vector<double> class_area_integrals(const SimState& s, const ModelParams& p) {
  s.check_shape(p);
  std::vector<double> m(s.classes);
  const double da = p.grid.delta_a;
  for (int n = 2; n <= p.n0; ++n) {
    const auto c = s.cls(n);
    // a_0 = 0 so the left endpoint drops out
    double acc = 0.0;
    for (std::size_t i = 1; i + 1 < c.size(); ++i) acc += static_cast<double>(i) * c[i];
    acc += 0.5 * static_cast<double>(c.size() - 1) * c.back();
    m[ModelParams::row(n)] = acc * da * da;
  }
  return m;
}

MomentSet evaluate_moments(const SimState& s, const ModelParams& p) {
  const auto m = class_integrals(s, p);
  const auto ma = class_area_integrals(s, p);
  MomentSet out;
  const double b = p.beta;
  for (int n = 2; n <= p.n0; ++n) {
    const std::size_t r = ModelParams::row(n);
    out.N += m[r];
    out.A += ma[r];
    out.M += n * m[r];
  }
  out.P = out.M - 6.0 * out.N;
  out.R = 2.0 * (b + 1.0) * m.front();
  if (p.closure == ClassClosure::truncated) out.R -= p.n0 * b * m.back();

  for (int n = 2; n <= 5; ++n) {
    const double w = n - 6.0;
    out.gamma_n += w * w * s.at(n, 0);
  }
  if (p.closure == ClassClosure::truncated) {
    const auto Jm = apply_collision(m, p);
    double acc = 0.0;
    for (int n = 2; n <= p.n0; ++n) acc += n * Jm[ModelParams::row(n)];
    out.gamma_d = -acc;
  } else {
    out.gamma_d = out.M - 2.0 * (b + 1.0) * m.front();
  }
  if (out.gamma_d > 0.0) out.gamma = out.gamma_n / out.gamma_d;
  out.edges = 0.5 * out.M;
  out.facets = out.N;
  return out;
}

MomentSet compute_moments(const SimState& s, const ModelParams& p) {
  auto ms = evaluate_moments(s, p);
  if (!ms.gamma) {
    const bool empty = std::all_of(s.f.begin(), s.f.end(), [](double v) { return v == 0.0; });
    if (!empty)
      throw DegenerateWeightError("Gamma_D = " + std::to_string(ms.gamma_d) +
                                  " <= 0 on a non-empty state");
  }
  return ms;
}

// ---------------------------------------------------------------------------

SuperSolution super_solution(const ModelParams& p) {
  SuperSolution ss;
  const double b = p.beta;
  ss.gamma_decay = std::log1p(1.0 / b);
  ss.phi.resize(p.num_classes());
  for (int n = 2; n <= p.n0; ++n)
    ss.phi[ModelParams::row(n)] = std::exp(-ss.gamma_decay * n) / (n * b);
  ss.u = relaxation_constants(p);
  return ss;
}

std::vector<double> flat_norm_per_class(const SimState& s, const SuperSolution& ss) {
  if (ss.phi.size() != s.classes) throw ContractError("super-solution size mismatch");
  std::vector<double> out(s.classes, 0.0);
  for (std::size_t r = 0; r < s.classes; ++r) {
    double mx = 0.0;
    const double* row = s.f.data() + r * s.nodes;
    for (std::size_t i = 0; i < s.nodes; ++i) mx = std::max(mx, std::abs(row[i]));
    out[r] = mx / ss.phi[r];
  }
  return out;
}

double flat_norm(const SimState& s, const SuperSolution& ss) {
  const auto v = flat_norm_per_class(s, ss);
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double min_value(const SimState& s) {
  return s.f.empty() ? 0.0 : *std::min_element(s.f.begin(), s.f.end());
}

}  // namespace graink
