#include <doctest.h>

#include <cmath>

#include "graink/errors.hpp"
#include "graink/transport.hpp"
#include "support.hpp"

using namespace graink;
using graink::testing::model;

namespace {

SimState ramp_state(const ModelParams& p) {
  SimState s(p);
  UniformStream rng(3);
  for (int n = 2; n <= p.n0; ++n) {
    auto c = s.cls(n);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double a = p.grid.node(i);
      c[i] = (n > 6 ? a : 1.0 + a) * std::exp(-a) * (0.5 + rng.next());
    }
  }
  return s;
}

double class_sum(const SimState& s, const ModelParams& p) {
  double N = 0;
  for (double v : class_integrals(s, p)) N += v;
  return N;
}

}  // namespace

TEST_CASE("shift: characteristic speeds") {
  const auto p = model(1.0, 10, 0.1, 41);
  const auto g = ramp_state(p);
  auto [s, bo] = shift_transport(g, p.grid.delta_a, p);

  // class 2 moves 4 cells left, the first four leave through a = 0
  for (std::size_t i = 0; i + 4 < g.nodes; ++i) CHECK(s.at(2, i) == g.at(2, i + 4));
  double out = 0.5 * (g.at(2, 0) + g.at(2, 4));
  for (std::size_t i = 1; i < 4; ++i) out += g.at(2, i);
  CHECK(bo.outflow[0] == doctest::Approx(out * p.grid.delta_a).epsilon(1e-15));
  CHECK(bo.boundary_values[0] == g.at(2, 0));

  // class 9 moves 3 cells right with zero inflow
  for (std::size_t i = 0; i < 3; ++i) CHECK(s.at(9, i) == 0.0);
  for (std::size_t i = 3; i < g.nodes; ++i) CHECK(s.at(9, i) == g.at(9, i - 3));

  for (std::size_t i = 0; i < g.nodes; ++i) CHECK(s.at(6, i) == g.at(6, i));
  for (int n = 6; n <= p.n0; ++n) CHECK(bo.outflow[ModelParams::row(n)] == 0.0);
  CHECK(s.time == doctest::Approx(p.grid.delta_a));
}

TEST_CASE("shift: hexagons never move") {
  const auto p = model(1.0, 10, 0.1, 41);
  const auto g = graink::testing::hexagon_state(p);
  for (double dt : {0.1, 0.5, 2.0}) {
    auto [s, bo] = shift_transport(g, dt, p);
    CHECK(s.f == g.f);
    CHECK(bo.total_outflow() == 0.0);
  }
}

TEST_CASE("shift: dt must sit on the lattice") {
  const auto p = model(1.0, 10, 0.1, 41);
  const auto g = ramp_state(p);
  CHECK_THROWS_AS(shift_transport(g, 0.15, p), StepSizeError);
  CHECK_THROWS_AS(shift_transport(g, 0.0, p), StepSizeError);
  CHECK_THROWS_AS(shift_transport(g, -0.1, p), StepSizeError);
  CHECK_THROWS_AS(relaxed_transport(g, 0.0, 0.05, 0.0, p), StepSizeError);
  CHECK(lattice_cells(0.3, p.grid) == 3);
}

TEST_CASE("shift: number bookkeeping") {
  const auto p = model(1.0, 12, 0.05, 201);
  const auto g = ramp_state(p);
  for (double dt : {0.05, 0.2, 1.0}) {
    auto [s, bo] = shift_transport(g, dt, p);
    const double N0 = class_sum(g, p);
    const double N1 = class_sum(s, p) + bo.total_outflow() + bo.total_overflow();
    CHECK(std::abs(N1 - N0) <= 1e-12 * N0);
    for (double v : bo.outflow) CHECK(v >= 0.0);
  }
}

TEST_CASE("shift: semigroup property is bitwise") {
  const auto p = model(1.0, 12, 0.05, 201);
  const auto g = ramp_state(p);
  auto [a, b1] = shift_transport(g, 0.1, p);
  auto [b, b2] = shift_transport(a, 0.1, p);
  auto [c, b3] = shift_transport(g, 0.2, p);
  CHECK(b.f == c.f);
}

TEST_CASE("shift and relaxation keep signs and the flat norm") {
  const auto p = model(1.0, 12, 0.05, 201);
  const auto ss = super_solution(p);
  const auto g = ramp_state(p);
  const double g_flat = flat_norm(g, ss);
  auto [s, bo] = shift_transport(g, 0.25, p);
  CHECK(min_value(s) >= 0.0);
  CHECK(flat_norm(s, ss) <= g_flat);
  const auto r = relaxed_transport(g, 0.0, 0.25, 0.1, p);
  CHECK(min_value(r) >= 0.0);
  CHECK(flat_norm(r, ss) < flat_norm(s, ss));
}

TEST_CASE("relaxed transport") {
  const auto p = model(1.0, 12, 0.05, 201);
  const auto g = ramp_state(p);
  SUBCASE("zero weight is the plain shift") {
    const auto r = relaxed_transport(g, 1.0, 1.25, 0.0, p);
    auto [s, bo] = shift_transport(g, 0.25, p);
    CHECK(r.f == s.f);
  }
  SUBCASE("interior decay rate (2 beta + 1) n") {
    const double G = 0.03;
    const auto r = relaxed_transport(g, 0.0, 0.05, G, p);
    for (std::size_t i = 0; i < g.nodes; ++i)
      CHECK(r.at(6, i) == doctest::Approx(std::exp(-18.0 * G) * g.at(6, i)).epsilon(1e-14));
    for (std::size_t i = 3; i < g.nodes; ++i)
      CHECK(r.at(9, i) == doctest::Approx(std::exp(-27.0 * G) * g.at(9, i - 3)).epsilon(1e-14));
  }
  SUBCASE("super-solution profile with no shift window") {
    const auto ss = super_solution(p);
    SimState phi(p);
    for (int n = 2; n <= p.n0; ++n)
      for (auto& v : phi.cls(n)) v = ss.phi[ModelParams::row(n)];
    const double G = 0.2;
    const auto r = relaxed_transport(phi, 0.5, 0.5, G, p);
    CHECK(flat_norm(r, ss) == doctest::Approx(std::exp(-ss.u[0] * G)));
    CHECK(flat_norm(r, ss) <= 1.0);
  }
  CHECK_THROWS_AS(relaxed_transport(g, 0.0, 0.05, -1.0, p), ContractError);
}

TEST_CASE("overflow past a_max is counted") {
  const auto p = model(1.0, 10, 0.1, 21);
  SimState g(p);
  for (std::size_t i = 1; i < g.nodes; ++i) g.at(10, i) = 1.0;  // flat to the edge
  auto [s, bo] = shift_transport(g, 0.1, p);
  // four cells of a unit density leave, the shifted edge keeps its half cell
  CHECK(bo.overflow[ModelParams::row(10)] == doctest::Approx(0.4));
  CHECK(class_sum(s, p) + bo.total_overflow() == doctest::Approx(class_sum(g, p)));
  CHECK(bo.total_overflow_area() > 0.0);
}
