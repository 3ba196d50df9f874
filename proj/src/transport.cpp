#include "graink/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "graink/errors.hpp"

namespace graink {

double BoundaryOutflow::total_outflow() const {
  return std::accumulate(outflow.begin(), outflow.end(), 0.0);
}
double BoundaryOutflow::total_overflow() const {
  return std::accumulate(overflow.begin(), overflow.end(), 0.0);
}
double BoundaryOutflow::total_overflow_area() const {
  return std::accumulate(overflow_area.begin(), overflow_area.end(), 0.0);
}

int lattice_cells(double dt, const AreaGrid& g) {
  if (!std::isfinite(dt) || dt < 0.0)
    throw StepSizeError("time increment must be finite and non-negative");
  const double q = dt / g.delta_a;
  const double k = std::round(q);
  if (std::abs(q - k) > 1e-9 * std::max(1.0, q))
    throw StepSizeError("dt = " + std::to_string(dt) + " is not a multiple of delta_a = " +
                        std::to_string(g.delta_a));
  return static_cast<int>(k);
}

namespace {

// trapezoid of v over nodes [lo, hi], optionally weighted by (a_i + shift)
double segment(const double* v, std::size_t lo, std::size_t hi, double da, bool area,
               double shift) {
  if (hi < lo) return 0.0;
  auto val = [&](std::size_t i) {
    return area ? (static_cast<double>(i) * da + shift) * v[i] : v[i];
  };
  if (hi == lo) return 0.0;
  double s = 0.5 * (val(lo) + val(hi));
  for (std::size_t i = lo + 1; i < hi; ++i) s += val(i);
  return s * da;
}

}  // namespace

BoundaryOutflow shift_in_place(SimState& st, int k, const ModelParams& p) {
  st.check_shape(p);
  if (k < 0) throw StepSizeError("negative shift");
  const std::size_t K = st.nodes;
  const double da = p.grid.delta_a;
  BoundaryOutflow bo;
  bo.outflow.assign(st.classes, 0.0);
  bo.overflow.assign(st.classes, 0.0);
  bo.overflow_area.assign(st.classes, 0.0);
  bo.boundary_values.resize(st.classes);

  for (int n = 2; n <= p.n0; ++n) {
    const std::size_t r = ModelParams::row(n);
    double* v = st.f.data() + r * K;
    bo.boundary_values[r] = v[0];
    if (n == 6 || k == 0) continue;
    const std::size_t s = static_cast<std::size_t>(std::abs(n - 6)) * static_cast<std::size_t>(k);
    if (n < 6) {
      if (s > K - 1) {
        bo.outflow[r] = segment(v, 0, K - 1, da, false, 0.0);
        std::fill(v, v + K, 0.0);
        continue;
      }
      bo.outflow[r] = segment(v, 0, s, da, false, 0.0);
      // the old top node lands on an interior node (or node 0): the interpolant
      // gains half a cell there
      const double top = v[K - 1];
      bo.overflow[r] = -0.5 * da * top;
      bo.overflow_area[r] = -0.5 * da * static_cast<double>(K - 1 - s) * da * top;
      std::copy(v + s, v + K, v);
      std::fill(v + (K - s), v + K, 0.0);
    } else {
      const double shift = static_cast<double>(s) * da;
      if (s > K - 1) {
        bo.overflow[r] = segment(v, 0, K - 1, da, false, 0.0);
        bo.overflow_area[r] = segment(v, 0, K - 1, da, true, shift);
        std::fill(v, v + K, 0.0);
        continue;
      }
      bo.overflow[r] = segment(v, K - 1 - s, K - 1, da, false, 0.0);
      bo.overflow_area[r] = segment(v, K - 1 - s, K - 1, da, true, shift);
      // a nonzero edge value becomes an interior node: half a cell enters at a = 0
      bo.outflow[r] = -0.5 * da * v[0];
      std::copy_backward(v, v + (K - s), v + K);
      std::fill(v, v + s, 0.0);
    }
  }
  return bo;
}

std::pair<SimState, BoundaryOutflow> shift_transport(const SimState& s, double dt,
                                                     const ModelParams& p) {
  const int k = lattice_cells(dt, p.grid);
  if (k <= 0) throw StepSizeError("dt must be a positive multiple of delta_a");
  SimState out = s;
  auto bo = shift_in_place(out, k, p);
  out.time = s.time + dt;
  return {std::move(out), std::move(bo)};
}

SimState relaxed_transport(const SimState& state, double s, double t, double gamma_integral,
                           const ModelParams& p) {
  if (!(gamma_integral >= 0.0) || !std::isfinite(gamma_integral))
    throw ContractError("gamma_integral must be finite and non-negative");
  if (t < s) throw StepSizeError("end time precedes start time");
  const int k = lattice_cells(t - s, p.grid);
  SimState out = state;
  out.check_shape(p);
  const auto u = relaxation_constants(p);
  if (gamma_integral > 0.0) {
    for (std::size_t r = 0; r < out.classes; ++r) {
      const double d = std::exp(-u[r] * gamma_integral);
      double* v = out.f.data() + r * out.nodes;
      for (std::size_t i = 0; i < out.nodes; ++i) v[i] *= d;
    }
  }
  shift_in_place(out, k, p);
  out.time = state.time + (t - s);
  return out;
}

}  // namespace graink
