#include "graink/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "graink/errors.hpp"

namespace graink {

namespace fs = std::filesystem;

double UniformStream::next() {
  x_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

void InitialSpec::validate(const ModelParams& p) const {
  for (int n : classes)
    if (n < 2 || n > p.n0)
      throw ConfigError("initial class " + std::to_string(n) + " outside 2.." +
                        std::to_string(p.n0));
  if (!(amplitude > 0.0) || !std::isfinite(amplitude))
    throw ConfigError("amplitude must be positive");
  if (area && !(*area > 0.0)) throw ConfigError("target area must be positive");
  switch (family) {
    case InitialFamily::compact_bump:
      if (!(a_lo >= 0.0 && a_hi > a_lo)) throw ConfigError("bump needs 0 <= a_lo < a_hi");
      if (a_hi > p.grid.a_max()) throw ConfigError("bump support exceeds a_max");
      if (a_hi - a_lo < 2.0 * p.grid.delta_a) throw ConfigError("bump narrower than two cells");
      break;
    case InitialFamily::exponential:
      if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
      break;
    case InitialFamily::custom_table:
      if (table.empty()) throw ConfigError("custom table needs a file path");
      break;
  }
}

namespace {

double bump_shape(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double y = x * (1.0 - x);
  return 16.0 * y * y;
}

}  // namespace

SimState build_initial_state(const InitialSpec& spec, const ModelParams& p, std::uint64_t seed) {
  p.validate();
  spec.validate(p);
  SimState g(p);
  if (spec.family == InitialFamily::custom_table) {
    auto snap = read_snapshot(spec.table);
    if (snap.header.n0 != p.n0 || snap.header.num_nodes != p.grid.num_nodes ||
        snap.header.delta_a != p.grid.delta_a)
      throw ConfigError("custom table grid does not match the model");
    g = std::move(snap.state);
    g.time = 0.0;
    for (double v : g.f)
      if (!(v >= 0.0)) throw ConfigError("custom table has a negative or non-finite entry");
  } else {
    std::vector<int> cls = spec.classes;
    if (cls.empty())
      for (int n = 2; n <= p.n0; ++n) cls.push_back(n);
    const auto ss = super_solution(p);
    UniformStream rng(seed);
    for (int n : cls) {
      double c = spec.amplitude * ss.phi[ModelParams::row(n)];
      if (spec.random_amplitudes) c *= 0.5 + rng.next();
      auto row = g.cls(n);
      for (std::size_t i = 0; i < row.size(); ++i) {
        const double a = p.grid.node(i);
        row[i] = spec.family == InitialFamily::exponential
                     ? c * a * std::exp(-spec.lambda * a)
                     : c * bump_shape((a - spec.a_lo) / (spec.a_hi - spec.a_lo));
      }
    }
  }
  for (int n = 7; n <= p.n0; ++n)
    if (g.at(n, 0) != 0.0)
      throw ConfigError("initial data violate f_n(0) = 0 for n = " + std::to_string(n));
  if (spec.project) g = project_polyhedral(g, p);
  if (spec.area) {
    const double A = evaluate_moments(g, p).A;
    if (!(A > 0.0)) throw ConfigError("initial data cover no area");
    for (double& v : g.f) v *= *spec.area / A;
  }
  return g;
}

SimState project_polyhedral(const SimState& s, const ModelParams& p) {
  const auto m = class_integrals(s, p);
  double below = 0.0, above = 0.0;
  for (int n = 2; n <= p.n0; ++n) {
    const double w = m[ModelParams::row(n)];
    if (n < 6) below += (6.0 - n) * w;
    if (n > 6) above += (n - 6.0) * w;
  }
  if (below == above) return s;
  if (!(below > 0.0))
    throw ConfigError("cannot project to P = 0: no mass in classes below 6");
  if (!(above > 0.0))
    throw ConfigError("cannot project to P = 0: no mass in classes above 6");
  SimState out = s;
  const double scale = below / above;
  for (int n = 7; n <= p.n0; ++n)
    for (double& v : out.cls(n)) v *= scale;
  return out;
}

// ---------------------------------------------------------------------------

ModelParams SnapshotHeader::params() const {
  ModelParams p;
  p.beta = beta;
  p.n0 = n0;
  p.grid.delta_a = delta_a;
  p.grid.num_nodes = num_nodes;
  p.closure = closure;
  return p;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

void close_checked(std::ofstream& os, const fs::path& path) {
  os.close();
  if (!os) throw IoError("write failed for " + path.string());
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
  const char* b = s.c_str();
  char* e = nullptr;
  const double v = std::strtod(b, &e);
  if (e == b || *e != '\0')
    throw IoError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

void write_snapshot(const fs::path& path, const SimState& s, const ModelParams& p) {
  s.check_shape(p);
  auto os = open_out(path);
  os << "# time=" << format_double(s.time) << '\n';
  os << "# beta=" << format_double(p.beta) << '\n';
  os << "# n0=" << p.n0 << '\n';
  os << "# delta_a=" << format_double(p.grid.delta_a) << '\n';
  os << "# num_nodes=" << p.grid.num_nodes << '\n';
  os << "# closure=" << (p.closure == ClassClosure::full ? "full" : "truncated") << '\n';
  os << "n,a,f\n";
  for (int n = 2; n <= p.n0; ++n) {
    const auto row = s.cls(n);
    for (std::size_t i = 0; i < row.size(); ++i)
      os << n << ',' << format_double(p.grid.node(i)) << ',' << format_double(row[i]) << '\n';
  }
  close_checked(os, path);
}

LoadedSnapshot read_snapshot(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  LoadedSnapshot out;
  auto& h = out.header;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  bool seen[5] = {false, false, false, false, false};
  while (std::getline(is, line)) {
    ++lineno;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2), val = line.substr(eq + 1);
      if (key == "time") h.time = parse_double(val, path, lineno), seen[0] = true;
      else if (key == "beta") h.beta = parse_double(val, path, lineno), seen[1] = true;
      else if (key == "n0") h.n0 = static_cast<int>(parse_double(val, path, lineno)), seen[2] = true;
      else if (key == "delta_a") h.delta_a = parse_double(val, path, lineno), seen[3] = true;
      else if (key == "num_nodes")
        h.num_nodes = static_cast<std::size_t>(parse_double(val, path, lineno)), seen[4] = true;
      else if (key == "closure") {
        if (val != "full" && val != "truncated")
          throw IoError(path.string() + ": unknown closure '" + val + "'");
        h.closure = val == "full" ? ClassClosure::full : ClassClosure::truncated;
      }
      continue;
    }
    if (line == "n,a,f") {
      have_header = true;
      break;
    }
    throw IoError(path.string() + ":" + std::to_string(lineno) + ": unexpected line");
  }
  if (!have_header || !std::all_of(std::begin(seen), std::end(seen), [](bool b) { return b; }))
    throw IoError(path.string() + ": incomplete snapshot header");

  const ModelParams p = h.params();
  try {
    p.validate();
  } catch (const ContractError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  out.state = SimState(p, h.time);
  const std::size_t expected = out.state.f.size();
  std::size_t k = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected n,a,f");
    if (k >= expected) throw IoError(path.string() + ": too many rows");
    const int n = static_cast<int>(parse_double(line.substr(0, c1), path, lineno));
    const double a = parse_double(line.substr(c1 + 1, c2 - c1 - 1), path, lineno);
    const std::size_t i = k % h.num_nodes;
    if (n != static_cast<int>(k / h.num_nodes) + 2 || std::abs(a - p.grid.node(i)) > 1e-9 * (1 + a))
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": row out of order");
    out.state.f[k++] = parse_double(line.substr(c2 + 1), path, lineno);
  }
  if (k != expected)
    throw IoError(path.string() + ": expected " + std::to_string(expected) + " rows, got " +
                  std::to_string(k));
  return out;
}

void write_time_series(const fs::path& path, const TrajectoryRecord& rec) {
  auto os = open_out(path);
  os << "t,N,A,P,M,R,gamma_n,gamma_d,gamma,gamma_bar,flat_norm,min_value,theta,overflow,"
        "overflow_area\n";
  for (const auto& r : rec.steps) {
    const auto& m = r.moments;
    const double vals[] = {r.t,        m.N,       m.A,          m.P,
                           m.M,        m.R,       m.gamma_n,    m.gamma_d,
                           r.gamma,    r.gamma_bar, r.flat_norm, r.min_value,
                           r.theta,    r.cumulative_overflow, r.cumulative_overflow_area};
    for (std::size_t j = 0; j < std::size(vals); ++j) os << (j ? "," : "") << format_double(vals[j]);
    os << '\n';
  }
  close_checked(os, path);
}

}  // namespace graink
