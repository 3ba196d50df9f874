#pragma once

// shared fixtures for the unit tests and the acceptance driver

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "graink/io.hpp"
#include "graink/kinetic.hpp"

namespace graink::testing {

inline ModelParams model(double beta, int n0, double da, std::size_t nodes,
                         ClassClosure closure = ClassClosure::truncated) {
  ModelParams p;
  p.beta = beta;
  p.n0 = n0;
  p.closure = closure;
  p.grid.delta_a = da;
  p.grid.num_nodes = nodes;
  return p;
}

// c_n = phi_n, a e^{-lambda a}, projected to P = 0
inline SimState exponential_datum(const ModelParams& p, double lambda = 1.0,
                                  std::vector<int> classes = {}) {
  InitialSpec s;
  s.family = InitialFamily::exponential;
  s.lambda = lambda;
  s.classes = std::move(classes);
  return build_initial_state(s, p);
}

// f_6 = 1 on [0, 1]
inline SimState hexagon_state(const ModelParams& p) {
  SimState s(p);
  for (std::size_t i = 0; i < s.nodes; ++i)
    if (p.grid.node(i) <= 1.0 + 1e-12) s.at(6, i) = 1.0;
  return s;
}

inline double flat_distance(const SimState& a, const SimState& b, const SuperSolution& ss) {
  double d = 0.0;
  for (std::size_t r = 0; r < a.classes; ++r)
    for (std::size_t i = 0; i < a.nodes; ++i)
      d = std::max(d, std::abs(a.f[r * a.nodes + i] - b.f[r * b.nodes + i]) / ss.phi[r]);
  return d;
}

inline std::vector<double> random_column(UniformStream& rng, std::size_t n, double lo = 0.0) {
  std::vector<double> c(n);
  for (double& v : c) v = lo + (1.0 - lo) * rng.next();
  return c;
}

}  // namespace graink::testing
