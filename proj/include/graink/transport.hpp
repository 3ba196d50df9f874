#pragma once

#include <utility>
#include <vector>

#include "graink/kinetic.hpp"

namespace graink {

/// What crossed the two ends of the area grid during one shift.
struct BoundaryOutflow {
  std::vector<double> outflow;          // per row; net mass through a = 0 (negative for n > 6 with a nonzero edge)
  std::vector<double> boundary_values;  // f_n(0) before the shift
  std::vector<double> overflow;         // per row; net number pushed past a_max
  std::vector<double> overflow_area;    // per row; area carried past a_max

  double total_outflow() const;
  double total_overflow() const;
  double total_overflow_area() const;
};

/// Number of cells k with dt = k * delta_a; throws StepSizeError otherwise.
int lattice_cells(double dt, const AreaGrid& g);

/// In-place shift of every class by (n-6)*k cells.
BoundaryOutflow shift_in_place(SimState& s, int k, const ModelParams& p);

std::pair<SimState, BoundaryOutflow> shift_transport(const SimState& s, double dt,
                                                     const ModelParams& p);

/// exp(-u_n G) decay followed by the shift over [s, t].
SimState relaxed_transport(const SimState& state, double s, double t, double gamma_integral,
                           const ModelParams& p);

}  // namespace graink
