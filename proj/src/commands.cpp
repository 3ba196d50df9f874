#include "graink/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "graink/diagnostics.hpp"
#include "graink/errors.hpp"
#include "graink/io.hpp"
#include "graink/selfsim.hpp"

namespace graink {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void say(bool quiet, const std::string& msg) {
  if (!quiet) std::cerr << msg << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string());
  os << text;
  os.close();
  if (!os) throw IoError("write failed for " + path.string());
}

// non-finite values become null
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::admissibility_lost: return "admissibility_lost";
    case Termination::overflow_leak: return "overflow_leak";
    case Termination::non_contraction: return "non_contraction";
  }
  return "";
}

json invariants_json(const InvariantReport& r, double beta) {
  return {{"area_drift", num(r.area_drift)},
          {"leak_corrected_area_drift", num(r.leak_area_drift)},
          {"defect_ratio", num(r.defect_ratio)},
          {"n_violations", r.n_violations},
          {"max_n_increase", num(r.max_n_increase)},
          {"min_node", num(r.min_node)},
          {"flat_ratio", num(r.flat_ratio)},
          {"min_gamma_d_ratio", num(r.min_gamma_d_ratio)},
          {"overflow_number", num(r.overflow_number)},
          {"overflow_area", num(r.overflow_area)},
          {"passes", r.passes(beta)}};
}

std::string snapshot_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%06zu.csv", j);
  return buf;
}

}  // namespace

int simulate_cmd(const RunConfig& cfg, bool quiet) {
  const fs::path out(cfg.out);
  const auto& p = cfg.model;
  const SimState g = build_initial_state(cfg.initial, p, cfg.seed);
  say(quiet, "simulate: " + std::to_string(p.num_classes()) + " classes x " +
                 std::to_string(p.grid.num_nodes) + " nodes to t = " + format_double(cfg.t_final));
  const auto rec = run_simulation(g, cfg.t_final, cfg.stepper, p);

  write_time_series(out / "series.csv", rec);
  for (std::size_t j = 0; j < rec.snapshots.size(); ++j)
    write_snapshot(out / "snapshots" / snapshot_name(j), rec.snapshots[j], p);

  json rep;
  rep["termination"] = termination_name(rec.termination);
  rep["message"] = rec.message;
  const auto inv = invariant_report(rec, p);
  rep["invariants"] = invariants_json(inv, p.beta);

  if (cfg.diagnostics.tightness && rec.snapshots.size() > 1) {
    std::vector<double> times = cfg.diagnostics.times, alphas = cfg.diagnostics.alphas;
    if (times.empty())
      for (std::size_t j = 1; j < rec.snapshots.size(); ++j) times.push_back(rec.snapshots[j].time);
    if (alphas.empty())
      for (int a = 1; a <= 10; ++a) alphas.push_back(a);
    const auto tr = tightness_envelope(rec, p, times, alphas);
    json samples = json::array();
    for (const auto& q : tr.samples)
      samples.push_back({{"t", q.t}, {"alpha", q.alpha}, {"n_perp", num(q.n_perp)},
                         {"n_bound", num(q.n_bound)}, {"m_perp", num(q.m_perp)},
                         {"m_bound", num(q.m_bound)}});
    json fits = json::array();
    for (std::size_t j = 0; j < tr.fits.size(); ++j)
      fits.push_back({{"t", tr.times[j]}, {"d", num(tr.fits[j].rate)},
                      {"D", num(tr.fits[j].prefactor)}});
    rep["tightness"] = {{"n_envelope_ok", tr.n_envelope_ok}, {"m_envelope_ok", tr.m_envelope_ok},
                        {"ordering_ok", tr.ordering_ok}, {"min_n_margin", num(tr.min_n_margin)},
                        {"min_m_margin", num(tr.min_m_margin)}, {"fits", fits},
                        {"samples", samples}, {"overflow_number", num(tr.overflow_number)},
                        {"overflow_area", num(tr.overflow_area)}};

    const auto cb = grain_count_bounds(rec, p, cfg.diagnostics.support_edge);
    double min_ratio = INFINITY;
    for (const auto& q : cb.samples) min_ratio = std::min(min_ratio, q.N / q.positivity_bound);
    rep["count_bounds"] = {{"support_ok", cb.support_ok}, {"positivity_ok", cb.positivity_ok},
                           {"gamma_ok", cb.gamma_ok}, {"notice", cb.notice},
                           {"fit_rate", num(cb.initial_fit.rate)},
                           {"fit_prefactor", num(cb.initial_fit.prefactor)},
                           {"min_n_over_ct", num(min_ratio)}};
  }
  if (cfg.diagnostics.lewis && !rec.snapshots.empty()) {
    const auto lf = lewis_means(rec.snapshots.back(), p);
    json means = json::array();
    for (std::size_t i = 0; i < lf.classes.size(); ++i)
      means.push_back({{"n", lf.classes[i]}, {"mean_area", num(lf.means[i])}});
    rep["lewis"] = {{"means", means}, {"fitted", lf.fitted}, {"slope", num(lf.slope)},
                    {"intercept", num(lf.intercept)}, {"window", {lf.window_lo, lf.window_hi}}};
  }
  write_text(out / "report.json", rep.dump(2) + "\n");
  say(quiet, std::string("simulate: ") + termination_name(rec.termination) + ", invariants " +
                 (inv.passes(p.beta) ? "pass" : "fail"));
  return rec.completed() ? exit_ok : exit_admissibility;
}

int ladder_cmd(const RunConfig& cfg, bool quiet) {
  if (cfg.rungs.empty()) throw ConfigError("ladder needs rungs");
  const fs::path out(cfg.out);
  ModelParams top = cfg.model;
  top.n0 = cfg.rungs.back();
  InitialSpec init = cfg.initial;
  if (init.classes.empty())
    for (int n = 2; n <= cfg.rungs.front(); ++n) init.classes.push_back(n);
  const SimState g = build_initial_state(init, top, cfg.seed);
  say(quiet, "ladder: " + std::to_string(cfg.rungs.size()) + " rungs to t = " +
                 format_double(cfg.t_final));
  const auto rep = truncation_ladder(g, cfg.rungs, cfg.t_final, cfg.stepper, top, cfg.class_limit);

  std::string csv = "n0_low,n0_high,class_diff,all_class_diff,n_diff,a_diff,gamma_diff\n";
  json pairs = json::array();
  bool monotone = true;
  for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
    const auto& q = rep.pairs[i];
    csv += std::to_string(q.n0_low) + "," + std::to_string(q.n0_high) + "," +
           format_double(q.class_diff) + "," + format_double(q.all_class_diff) + "," +
           format_double(q.n_diff) + "," + format_double(q.a_diff) + "," +
           format_double(q.gamma_diff) + "\n";
    pairs.push_back({{"n0_low", q.n0_low}, {"n0_high", q.n0_high},
                     {"class_diff", num(q.class_diff)}, {"all_class_diff", num(q.all_class_diff)},
                     {"n_diff", num(q.n_diff)}, {"a_diff", num(q.a_diff)},
                     {"gamma_diff", num(q.gamma_diff)}});
    if (i && !(q.class_diff < rep.pairs[i - 1].class_diff)) monotone = false;
  }
  write_text(out / "ladder.csv", csv);
  bool all_done = true;
  json runs = json::array();
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    write_time_series(out / ("series_n0_" + std::to_string(rep.rungs[i]) + ".csv"), rep.runs[i]);
    runs.push_back({{"n0", rep.rungs[i]}, {"termination", termination_name(rep.runs[i].termination)},
                    {"message", rep.runs[i].message}});
    all_done = all_done && rep.runs[i].completed();
  }
  json j = {{"rungs", rep.rungs}, {"class_limit", rep.class_limit}, {"pairs", pairs},
            {"differences_decreasing", monotone}, {"runs", runs}};
  write_text(out / "report.json", j.dump(2) + "\n");
  say(quiet, std::string("ladder: differences ") + (monotone ? "decreasing" : "not decreasing"));
  return all_done ? exit_ok : exit_admissibility;
}

int selfsim_cmd(const RunConfig& cfg, bool quiet) {
  const fs::path out(cfg.out);
  const auto res = selfsim_moments(cfg.selfsim);
  std::string csv = "n,Phi\n";
  for (std::size_t r = 0; r < res.phi.size(); ++r)
    csv += std::to_string(r + 2) + "," + format_double(res.phi[r]) + "\n";
  write_text(out / "selfsim.csv", csv);

  json j = {{"converged", res.converged}, {"trivial", res.trivial},
            {"admissible", res.admissible}, {"gamma", num(res.gamma)},
            {"gamma_n", num(res.gamma_n)}, {"gamma_d", num(res.gamma_d)},
            {"iterations", res.iterations}, {"relation_residual", num(res.relation_residual)},
            {"consistency_residual", num(res.consistency_residual)},
            {"fixed_point_residual", num(res.fixed_point_residual)}};
  if (res.converged && !res.trivial) {
    j["cap_sensitivity"] = num(cap_sensitivity(cfg.selfsim));
    const auto [b, c] = lewis_asymptote(cfg.selfsim.beta, res.gamma);
    j["lewis_b"] = num(b);
    j["lewis_c"] = num(c);
  }
  if (!res.converged) {
    json h = json::array();
    for (double v : res.residual_history) h.push_back(num(v));
    j["residual_history"] = h;
  }
  write_text(out / "report.json", j.dump(2) + "\n");
  say(quiet, res.converged ? "selfsim: Gamma = " + format_double(res.gamma) +
                                 (res.admissible ? "" : " (Phi has negative entries)")
                           : std::string("selfsim: no fixed point found"));
  return res.converged ? exit_ok : exit_failure;
}

int stability_cmd(const RunConfig& cfg, bool quiet) {
  const fs::path out(cfg.out);
  const auto& p = cfg.model;
  const SimState g = build_initial_state(cfg.initial, p, cfg.seed);
  SimState bump = build_initial_state(cfg.perturbation, p, cfg.seed);
  const auto ss = super_solution(p);
  const double scale = flat_norm(g, ss) / flat_norm(bump, ss);
  for (double& v : bump.f) v *= scale;
  say(quiet, "stability: " + std::to_string(cfg.deltas.size()) + " perturbation sizes");
  const auto rep = stability_experiment(g, bump, cfg.deltas, cfg.t_final, cfg.stepper, p);

  std::string csv = "delta,t,E\n";
  json runs = json::array();
  for (const auto& r : rep.runs) {
    for (std::size_t j = 0; j < r.t.size(); ++j)
      csv += format_double(r.delta) + "," + format_double(r.t[j]) + "," +
             format_double(r.energy[j]) + "\n";
    runs.push_back({{"delta", r.delta}, {"slope", num(r.slope)}, {"c", num(r.envelope)}});
  }
  write_text(out / "stability.csv", csv);
  json j = {{"runs", runs},
            {"c_hat", num(rep.c_hat)},
            {"slope_spread", num(rep.slope_spread)},
            {"c_hat_spread", num(rep.c_hat_spread)},
            {"slopes_agree", rep.slope_spread <= 0.25},
            {"envelope_ok", rep.envelope_ok}};
  write_text(out / "report.json", j.dump(2) + "\n");
  say(quiet, "stability: C = " + format_double(rep.c_hat));
  return exit_ok;
}

int run_command(const std::string& name, const CommandOptions& opts) {
  try {
    if (name == "check" && opts.snapshot) {
      const auto snap = read_snapshot(*opts.snapshot);
      try {
        check_admissible(snap.state, snap.header.params());
      } catch (const AdmissibilityError& e) {
        std::cerr << "check: snapshot not admissible: " << e.what() << '\n';
        return exit_config;
      }
      say(opts.quiet, "check: snapshot ok");
      return exit_ok;
    }
    if (opts.config.empty()) throw ConfigError("--config is required");
    RunConfig cfg = load_config(opts.config);
    if (opts.out) cfg.out = opts.out->string();
    if (opts.seed) cfg.seed = *opts.seed;
    cfg.validate();
    if (name == "check") {
      say(opts.quiet, "check: config ok");
      return exit_ok;
    }
    if (name == "simulate") return simulate_cmd(cfg, opts.quiet);
    if (name == "ladder") return ladder_cmd(cfg, opts.quiet);
    if (name == "selfsim") return selfsim_cmd(cfg, opts.quiet);
    if (name == "stability") return stability_cmd(cfg, opts.quiet);
    throw ConfigError("unknown command '" + name + "'");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const ContractError& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return exit_config;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return exit_io;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return exit_io;
  } catch (const AdmissibilityError& e) {
    std::cerr << "admissibility lost: " << e.what() << '\n';
    return exit_admissibility;
  } catch (const DegenerateWeightError& e) {
    std::cerr << "admissibility lost: " << e.what() << '\n';
    return exit_admissibility;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace graink
