#include <doctest.h>

#include <cmath>

#include "graink/diagnostics.hpp"
#include "graink/errors.hpp"
#include "support.hpp"

using namespace graink;
using graink::testing::model;

namespace {

// per-class bump of width w centred at c_n, amplitude phi_n
SimState bumps(const ModelParams& p, const std::vector<std::pair<int, double>>& centres,
               double w) {
  SimState s(p);
  const auto ss = super_solution(p);
  for (auto [n, c] : centres)
    for (std::size_t i = 0; i < s.nodes; ++i) {
      const double x = (p.grid.node(i) - c) / w;
      if (std::abs(x) < 1) s.at(n, i) = ss.phi[ModelParams::row(n)] * (1 - x * x) * (1 - x * x);
    }
  return s;
}

}  // namespace

TEST_CASE("first quasi-complement") {
  const auto p = model(1.0, 12, 0.02, 501);
  const auto g = graink::testing::exponential_datum(p);
  const auto m = evaluate_moments(g, p);
  CHECK(quasi_complement_first(g, 0.0, 0, p) == doctest::Approx(m.N).epsilon(1e-14));
  CHECK(quasi_complement_first(g, 0.0, p) == doctest::Approx(m.N).epsilon(1e-14));
  CHECK(quasi_complement_first(g, p.grid.a_max() + 1, p.n0, p) == 0.0);
  // monotone in both cutoffs
  CHECK(quasi_complement_first(g, 2.0, 4, p) >= quasi_complement_first(g, 2.0, 5, p));
  CHECK(quasi_complement_first(g, 2.0, 5, p) >= quasi_complement_first(g, 2.5, 5, p));

  const auto h = graink::testing::hexagon_state(p);
  CHECK(quasi_complement_first(h, 2.0, 6, p) == 0.0);
  // the interpolant runs half a cell past a = 1
  CHECK(quasi_complement_first(h, 0.5, 6, p) ==
        doctest::Approx(0.5 + 0.5 * p.grid.delta_a).epsilon(1e-12));
  CHECK_THROWS_AS(quasi_complement_first(g, -1.0, 0, p), ContractError);
  CHECK_THROWS_AS(quasi_complement_first(g, 1.0, -1, p), ContractError);
}

TEST_CASE("second quasi-complement") {
  const auto p = model(1.0, 12, 0.02, 501);
  const auto g = graink::testing::exponential_datum(p);
  const auto m = evaluate_moments(g, p);
  CHECK(quasi_complement_second(g, 0.0, p) == doctest::Approx(m.M + m.A).epsilon(1e-14));
  for (double a : {0.0, 0.3, 1.0, 2.7, 5.5, 9.0, 12.0, 20.0})
    CHECK(quasi_complement_second(g, a, p) >= quasi_complement_first(g, a, p));
}

TEST_CASE("tail fit recovers a known rate") {
  // classes 2..6 with f = phi_n e^{-lambda a}: for alpha >= 6 only the area tail is
  // left, (alpha/lambda + 1/lambda^2) e^{-lambda alpha}
  const auto p = model(1.0, 10, 0.02, 2001);
  const auto ss = super_solution(p);
  for (double lambda : {0.6, 1.0}) {
    SimState g(p);
    for (int n = 2; n <= 6; ++n)
      for (std::size_t i = 0; i < g.nodes; ++i)
        g.at(n, i) = ss.phi[ModelParams::row(n)] * std::exp(-lambda * p.grid.node(i));
    std::vector<double> al, v;
    for (double a = 10; a <= 30; a += 1) {
      al.push_back(a);
      v.push_back(quasi_complement_second(g, a, p));
    }
    const auto fit = fit_exponential_tail(al, v);
    CHECK(fit.rate == doctest::Approx(lambda).epsilon(0.1));
    for (std::size_t i = 0; i < al.size(); ++i)
      CHECK(v[i] <= fit.prefactor * std::exp(-fit.rate * al[i]) * (1 + 1e-12));
  }
  std::vector<double> one{1.0};
  CHECK_THROWS_AS(fit_exponential_tail(one, one), ContractError);
}

TEST_CASE("initial envelope") {
  const auto p = model(1.0, 12, 0.02, 501);
  const auto g = graink::testing::exponential_datum(p);
  // 1 + int_0^inf N_perp(0, a) da; N_perp jumps at integers (the class cutoff), so
  // use a midpoint rule whose cells end on them. Zero beyond max(a_max, n0 + 1).
  const int per_unit = 200;
  const double h = 1.0 / per_unit;
  double integral = 0;
  for (int j = 0; j < 16 * per_unit; ++j)
    integral += h * quasi_complement_first(g, (j + 0.5) * h, p);
  CHECK(initial_envelope(g, 0.0, p) == doctest::Approx(1.0 + integral).epsilon(1e-6));
  for (double a : {0.5, 3.0, 11.5})
    CHECK(initial_envelope(g, a, p) >= quasi_complement_first(g, a, p) * a);
  CHECK(initial_envelope(g, 40.0, p) == doctest::Approx(41.0 * std::exp(-std::log(2.0) * 40)));
}

TEST_CASE("envelope constants") {
  const double g1 = std::log(2.0);
  CHECK(n_envelope_constant(1.0) == doctest::Approx(2.0 / g1));
  CHECK(m_envelope_constant(1.0) == doctest::Approx(2.0 * (2.0 / g1) * (1.0 + 1.0 / g1)));
  for (double b : {0.1, 0.5, 1.0, 1.9}) CHECK(m_envelope_constant(b) >= 4.0);
}

TEST_CASE("tightness on a stationary state") {
  const auto p = model(1.0, 10, 0.02, 201);
  const auto h = graink::testing::hexagon_state(p);
  StepperConfig cfg;
  cfg.dt = 0.02;
  cfg.sample_every = 10;
  const auto rec = run_simulation(h, 1.0, cfg, p);
  const std::vector<double> ts{0.2, 0.6, 1.0}, as{0.0, 0.5, 1.5, 3.0};
  const auto tr = tightness_envelope(rec, p, ts, as);
  CHECK(tr.n_envelope_ok);
  CHECK(tr.m_envelope_ok);
  CHECK(tr.ordering_ok);
  for (const auto& q : tr.samples)
    CHECK(q.n_perp == quasi_complement_first(h, q.alpha, p));
  const std::vector<double> bad{0.3};
  CHECK_THROWS_AS(tightness_envelope(rec, p, bad, as), ContractError);
}

TEST_CASE("tightness on a short exponential run") {
  const auto p = model(1.0, 14, 0.02, 1501);
  const auto g = graink::testing::exponential_datum(p);
  StepperConfig cfg;
  cfg.dt = 0.02;
  cfg.sample_every = 25;
  const auto rec = run_simulation(g, 2.0, cfg, p);
  REQUIRE(rec.completed());
  const std::vector<double> ts{0.5, 1.0, 1.5, 2.0}, as{1, 2, 4, 6, 8, 10};
  const auto tr = tightness_envelope(rec, p, ts, as);
  CHECK(tr.n_envelope_ok);
  CHECK(tr.m_envelope_ok);
  CHECK(tr.ordering_ok);
  CHECK(tr.fits.size() == ts.size());
}

TEST_CASE("grain count bounds") {
  const auto p = model(1.0, 12, 0.01, 1001);
  InitialSpec spec;
  spec.family = InitialFamily::compact_bump;
  spec.classes = {3, 4, 5, 7, 8, 9};
  spec.a_lo = 0.9;
  spec.a_hi = 1.0;
  spec.area = 1.0;
  const auto g = build_initial_state(spec, p);
  StepperConfig cfg;
  cfg.dt = 0.01;
  cfg.sample_every = 10;
  const auto rec = run_simulation(g, 1.0, cfg, p);
  REQUIRE(rec.completed());
  const auto cb = grain_count_bounds(rec, p, 1.0);
  CHECK(cb.support_ok);
  CHECK(cb.positivity_ok);
  CHECK(cb.notice.empty());
  const auto& first = cb.samples.front();
  const auto& last = cb.samples.back();
  REQUIRE(last.support_bound);
  CHECK(*last.support_bound == doctest::Approx(1.0 / 7.0));
  // the datum sits just below a0, so the t = 0 bound is nearly sharp
  CHECK(*first.support_bound == doctest::Approx(1.0));
  CHECK(first.N >= 1.0);
  CHECK(first.N <= 1.0 / 0.95 * 1.01);
  CHECK(cb.gamma_constant == doctest::Approx((16.0 / 8 + 9.0 / 24 + 4.0 / 64 + 1.0 / 160) / 2.0));

  const auto no = grain_count_bounds(rec, p, std::nullopt);
  CHECK_FALSE(no.notice.empty());
  CHECK_FALSE(no.samples.front().support_bound);
}

TEST_CASE("positivity root solves the relation") {
  for (auto [A, K, kappa, d] : {std::array<double, 4>{1.0, 50.0, 0.3, 0.5},
                                std::array<double, 4>{0.2, 1e3, 0.0, 0.05},
                                std::array<double, 4>{3.0, 10.0, 2.0, 1.0}}) {
    const double x = positivity_root(A, K, kappa, d);
    const double lhs = 2 * x / (A * d) * std::log(2 * K * (1 + kappa / x) / A);
    CHECK(lhs == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK_THROWS_AS(positivity_root(0.0, 1.0, 1.0, 1.0), ContractError);
}

TEST_CASE("energy distance") {
  const auto p = model(1.0, 10, 0.01, 301);
  const auto h = graink::testing::hexagon_state(p);
  const SimState z(p);
  CHECK(energy_distance(h, h, p) == 0.0);
  const double exact = 6 * (1 - std::exp(-1.0)) + 1;
  CHECK(exact == doctest::Approx(4.79272).epsilon(1e-6));
  CHECK(std::abs(energy_distance(h, z, p) - exact) <= 3 * p.grid.delta_a);

  UniformStream rng(9);
  auto rnd = [&] {
    SimState s(p);
    for (double& v : s.f) v = rng.next();
    return s;
  };
  for (int k = 0; k < 10; ++k) {
    const auto a = rnd(), b = rnd(), c = rnd();
    CHECK(energy_distance(a, b, p) == energy_distance(b, a, p));
    CHECK(energy_distance(a, c, p) <= 2 * energy_distance(a, b, p) + 2 * energy_distance(b, c, p));
    CHECK(energy_distance(a, b, p) > 0.0);
  }
  const auto q = model(1.0, 11, 0.01, 301);
  CHECK_THROWS_AS(energy_distance(h, SimState(q), p), ContractError);
}

TEST_CASE("stability experiment bookkeeping") {
  const auto p = model(1.0, 12, 0.02, 1001);
  const auto g = graink::testing::exponential_datum(p);
  InitialSpec b;
  b.family = InitialFamily::compact_bump;
  b.classes = {3, 4, 8, 9};
  const auto bump = build_initial_state(b, p);
  StepperConfig cfg;
  cfg.dt = 0.02;
  cfg.sample_every = 5;
  const auto rep = stability_experiment(g, bump, {1e-2, 1e-3}, 0.5, cfg, p);
  REQUIRE(rep.runs.size() == 2);
  for (const auto& r : rep.runs) {
    CHECK(r.t.size() == 6);
    CHECK(r.energy.front() > 0.0);
  }
  // E is quadratic in delta
  CHECK(rep.runs[0].energy.front() / rep.runs[1].energy.front() ==
        doctest::Approx(100.0).epsilon(1e-6));
  CHECK(rep.envelope_ok);
  CHECK(rep.slope_spread < 0.25);
}

TEST_CASE("invariant report") {
  const auto p = model(1.0, 10, 0.02, 201);
  const auto h = graink::testing::hexagon_state(p);
  StepperConfig cfg;
  cfg.dt = 0.02;
  const auto rec = run_simulation(h, 0.5, cfg, p);
  const auto r = invariant_report(rec, p);
  CHECK(r.passes(1.0));
  CHECK(r.area_drift == 0.0);
  CHECK(r.n_violations == 0);
  CHECK(r.flat_ratio == 1.0);
  CHECK(r.min_gamma_d_ratio == doctest::Approx(6.0));
}

TEST_CASE("Lewis means") {
  const auto p = model(1.0, 16, 0.01, 2001);
  SUBCASE("narrow bump") {
    const auto s = bumps(p, {{7, 3.0}}, 0.05);
    const auto fit = lewis_means(s, p);
    REQUIRE(fit.classes.size() == 1);
    CHECK(fit.classes[0] == 7);
    CHECK(fit.means[0] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK_FALSE(fit.fitted);
  }
  SUBCASE("exact line over the window") {
    std::vector<std::pair<int, double>> c;
    for (int n = 3; n <= 16; ++n) c.push_back({n, 4.0 + 0.5 * (n - 6)});
    const auto fit = lewis_means(bumps(p, c, 0.3), p);
    CHECK(fit.classes.size() == 14);
    CHECK(fit.window_lo == 8);
    CHECK(fit.window_hi == 14);
    REQUIRE(fit.fitted);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(fit.intercept == doctest::Approx(4.0).epsilon(1e-6));
  }
}
