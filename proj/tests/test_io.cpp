#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "graink/commands.hpp"
#include "graink/config.hpp"
#include "graink/errors.hpp"
#include "graink/io.hpp"
#include "support.hpp"

using namespace graink;
using graink::testing::model;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("graink_unit_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

}  // namespace

TEST_CASE("compact bump") {
  const auto p = model(1.0, 10, 0.01, 401);
  InitialSpec s;
  s.family = InitialFamily::compact_bump;
  s.classes = {4, 5, 6, 7, 8};
  const auto g = build_initial_state(s, p);
  for (int n = 2; n <= p.n0; ++n) {
    CHECK(g.at(n, 0) == 0.0);
    for (std::size_t i = 0; i < g.nodes; ++i) {
      const double a = p.grid.node(i);
      if (a <= 1.0 || a >= 2.0) CHECK(g.at(n, i) == 0.0);
    }
  }
  CHECK(std::abs(evaluate_moments(g, p).P) < 1e-12 * evaluate_moments(g, p).M);
  CHECK(g.at(4, 150) > 0.0);
  CHECK(g.at(2, 150) == 0.0);
}

TEST_CASE("exponential family flat norm") {
  for (double lambda : {1.0, 2.0}) {
    const auto p = model(1.0, 10, 0.01, 1001);
    InitialSpec s;
    s.lambda = lambda;
    s.project = false;
    const auto g = build_initial_state(s, p);
    CHECK(flat_norm(g, super_solution(p)) == doctest::Approx(1.0 / (lambda * std::exp(1.0))));
  }
}

TEST_CASE("random amplitudes follow the seed") {
  const auto p = model(1.0, 10, 0.05, 101);
  InitialSpec s;
  s.family = InitialFamily::compact_bump;
  s.random_amplitudes = true;
  const auto a = build_initial_state(s, p, 42), b = build_initial_state(s, p, 42),
             c = build_initial_state(s, p, 43);
  CHECK(a.f == b.f);
  CHECK(a.f != c.f);
  UniformStream u(1);
  for (int k = 0; k < 1000; ++k) {
    const double v = u.next();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("initial spec validation") {
  const auto p = model(1.0, 10, 0.05, 101);
  InitialSpec s;
  s.classes = {1};
  CHECK_THROWS_AS(build_initial_state(s, p), ConfigError);
  s.classes = {};
  s.lambda = -1;
  CHECK_THROWS_AS(build_initial_state(s, p), ConfigError);
  s = InitialSpec{};
  s.family = InitialFamily::compact_bump;
  s.a_hi = 100;
  CHECK_THROWS_AS(build_initial_state(s, p), ConfigError);
  s = InitialSpec{};
  s.family = InitialFamily::custom_table;
  CHECK_THROWS_AS(build_initial_state(s, p), ConfigError);
}

TEST_CASE("projection") {
  const auto p = model(1.0, 10, 0.1, 21);
  SimState s(p);
  // m_5 = 2, m_7 = 1 on a unit interval
  for (std::size_t i = 5; i <= 15; ++i) {
    s.at(5, i) = 2.0;
    s.at(7, i) = 1.0;
  }
  const auto q = project_polyhedral(s, p);
  for (std::size_t i = 0; i < s.nodes; ++i) {
    CHECK(q.at(7, i) == 2.0 * s.at(7, i));
    CHECK(q.at(5, i) == s.at(5, i));
  }
  const auto m = evaluate_moments(q, p);
  CHECK(std::abs(m.P) <= 1e-12 * m.M);
  CHECK(project_polyhedral(q, p).f == q.f);

  SimState low(p);
  for (std::size_t i = 5; i <= 15; ++i) low.at(4, i) = 1.0;
  try {
    project_polyhedral(low, p);
    FAIL("expected a projection error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("above 6") != std::string::npos);
  }
  SimState high(p);
  for (std::size_t i = 5; i <= 15; ++i) high.at(9, i) = 1.0;
  CHECK_THROWS_WITH_AS(project_polyhedral(high, p), doctest::Contains("below 6"), ConfigError);
}

TEST_CASE("snapshot round trip is bit exact") {
  const auto dir = scratch("snap");
  const auto p = model(0.7, 9, 0.013, 57);
  SimState s(p, 0.1 + 0.2);
  UniformStream u(17);
  for (double& v : s.f) v = std::pow(u.next(), 7.0) * 1e-3;
  s.f[3] = 5e-324;  // subnormal
  s.f[4] = 0.0;
  write_snapshot(dir / "s.csv", s, p);
  const auto back = read_snapshot(dir / "s.csv");
  CHECK(back.state.f == s.f);
  CHECK(back.state.time == s.time);
  CHECK(back.header.beta == p.beta);
  CHECK(back.header.n0 == p.n0);
  CHECK(back.header.delta_a == p.grid.delta_a);
  CHECK(back.header.num_nodes == p.grid.num_nodes);
  CHECK(back.header.closure == ClassClosure::truncated);

  // a second write is byte-identical
  write_snapshot(dir / "t.csv", back.state, back.header.params());
  CHECK(slurp(dir / "s.csv") == slurp(dir / "t.csv"));

  // damaged files
  auto text = slurp(dir / "s.csv");
  put(dir / "cut.csv", text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(read_snapshot(dir / "cut.csv"), IoError);
  CHECK_THROWS_AS(read_snapshot(dir / "missing.csv"), IoError);
}

TEST_CASE("custom table") {
  const auto dir = scratch("table");
  const auto p = model(1.0, 10, 0.05, 101);
  const auto g = graink::testing::exponential_datum(p);
  write_snapshot(dir / "g.csv", g, p);
  InitialSpec s;
  s.family = InitialFamily::custom_table;
  s.table = (dir / "g.csv").string();
  s.project = false;
  CHECK(build_initial_state(s, p).f == g.f);
  // g already has P = 0, so projecting again only moves it by rounding
  s.project = true;
  const auto h = build_initial_state(s, p);
  for (std::size_t i = 0; i < h.f.size(); ++i)
    CHECK(std::abs(h.f[i] - g.f[i]) <= 1e-14 * std::abs(g.f[i]));

  auto bad = g;
  bad.at(3, 10) = -1e-6;
  write_snapshot(dir / "bad.csv", bad, p);
  s.table = (dir / "bad.csv").string();
  CHECK_THROWS_AS(build_initial_state(s, p), ConfigError);

  s.table = (dir / "g.csv").string();
  CHECK_THROWS_AS(build_initial_state(s, model(1.0, 11, 0.05, 101)), ConfigError);
}

TEST_CASE("time series columns") {
  const auto dir = scratch("series");
  const auto p = model(1.0, 10, 0.05, 101);
  const auto h = graink::testing::hexagon_state(p);
  StepperConfig cfg;
  cfg.dt = 0.05;
  const auto rec = run_simulation(h, 0.2, cfg, p);
  write_time_series(dir / "s.csv", rec);
  std::istringstream is(slurp(dir / "s.csv"));
  std::string header, line;
  std::getline(is, header);
  CHECK(header ==
        "t,N,A,P,M,R,gamma_n,gamma_d,gamma,gamma_bar,flat_norm,min_value,theta,overflow,"
        "overflow_area");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 5);
}

TEST_CASE("config parsing") {
  const std::string base = R"({"model": {"beta": 1, "n0": 12, "delta_a": 0.02, "num_nodes": 501},
    "stepper": {"dt": 0.04}, "t_final": 0.4, "output_every": 0.2, "seed": 9, "out": "x"})";
  const auto c = parse_config(base);
  CHECK(c.model.n0 == 12);
  CHECK(c.stepper.dt == 0.04);
  CHECK(c.stepper.sample_every == 5);
  CHECK(c.seed == 9);
  CHECK(c.selfsim.beta == 1.0);
  CHECK(c.selfsim.boundary[0] == 1.0);
  // dump and parse again
  CHECK(dump_config(parse_config(dump_config(c))) == dump_config(c));

  CHECK_THROWS_AS(parse_config(R"({"model": {"beta": 2.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"modle": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"stepper": {"dt": 0.015}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"t_final": 0.015})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"n0": "many"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"ladder": {"rungs": [10, 9]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"initial": {"family": "gaussian"}})"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/graink.json"), IoError);
}

TEST_CASE("commands: exit codes and artefacts") {
  const auto dir = scratch("cmd");
  const auto p = model(1.0, 10, 0.05, 101);
  write_snapshot(dir / "hex.csv", graink::testing::hexagon_state(p), p);
  const std::string cfg = R"({"model": {"beta": 1, "n0": 10, "delta_a": 0.05, "num_nodes": 101},
    "stepper": {"dt": 0.05}, "t_final": 1.0, "output_every": 0.25,
    "initial": {"family": "custom_table", "table": ")" +
                          (dir / "hex.csv").string() + R"("}, "out": ")" +
                          (dir / "hex_out").string() + R"("})";
  put(dir / "hex.json", cfg);
  CommandOptions o;
  o.config = dir / "hex.json";
  o.quiet = true;
  REQUIRE(run_command("simulate", o) == exit_ok);
  std::istringstream is(slurp(dir / "hex_out" / "series.csv"));
  std::string line;
  std::getline(is, line);
  std::string first;
  std::getline(is, first);
  const auto cols = [](const std::string& s) {
    std::vector<std::string> v;
    std::stringstream ss(s);
    for (std::string x; std::getline(ss, x, ',');) v.push_back(x);
    return v;
  };
  const auto c0 = cols(first);
  while (std::getline(is, line)) {
    const auto c = cols(line);
    CHECK(c[1] == c0[1]);  // N
    CHECK(c[2] == c0[2]);  // A
  }
  CHECK(slurp(dir / "hex_out" / "report.json").find("\"passes\": true") != std::string::npos);
  CHECK(fs::exists(dir / "hex_out" / "snapshots" / "snap_000004.csv"));

  put(dir / "beta.json", R"({"model": {"beta": 2.5}})");
  o.config = dir / "beta.json";
  CHECK(run_command("simulate", o) == exit_config);
  o.config = dir / "absent.json";
  CHECK(run_command("simulate", o) == exit_io);
  o.config = dir / "hex.json";
  CHECK(run_command("check", o) == exit_ok);
  o.snapshot = dir / "hex.csv";
  CHECK(run_command("check", o) == exit_ok);
  auto bad = graink::testing::hexagon_state(p);
  bad.at(8, 0) = 1.0;
  write_snapshot(dir / "bad.csv", bad, p);
  o.snapshot = dir / "bad.csv";
  CHECK(run_command("check", o) == exit_config);
  o.snapshot.reset();
  CHECK(run_command("bogus", o) != exit_ok);

  // leakage mid-run: distinct code, artefacts kept
  put(dir / "leak.json", R"({"model": {"beta": 1, "n0": 10, "delta_a": 0.05, "num_nodes": 81},
    "stepper": {"dt": 0.05}, "t_final": 2.0, "output_every": 0.5, "out": ")" +
                             (dir / "leak_out").string() + R"("})");
  o.config = dir / "leak.json";
  CHECK(run_command("simulate", o) == exit_admissibility);
  CHECK(fs::exists(dir / "leak_out" / "series.csv"));
  CHECK(slurp(dir / "leak_out" / "report.json").find("overflow_leak") != std::string::npos);
}
