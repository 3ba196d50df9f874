#include "graink/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "graink/errors.hpp"
#include "graink/transport.hpp"

namespace graink {

using nlohmann::json;

RunConfig::RunConfig() {
  perturbation.family = InitialFamily::compact_bump;
  perturbation.classes = {3, 4, 5, 7, 8, 9, 10};
  perturbation.a_lo = 1.0;
  perturbation.a_hi = 2.0;
  perturbation.random_amplitudes = true;
  selfsim.boundary = {1.0, 0.0, 0.0, 0.0};
}

void RunConfig::validate() const {
  try {
    model.validate();
    stepper.validate(model);
    if (!(t_final > 0.0)) throw ConfigError("t_final must be positive");
    const int k = lattice_cells(stepper.dt, model.grid);
    if (lattice_cells(t_final, model.grid) % k != 0)
      throw ConfigError("t_final must be a multiple of dt");
    if (!(output_every > 0.0) || lattice_cells(output_every, model.grid) % k != 0)
      throw ConfigError("output_every must be a positive multiple of dt");
    initial.validate(model);
    perturbation.validate(model);
    for (std::size_t i = 0; i < rungs.size(); ++i) {
      if (rungs[i] < 8) throw ConfigError("ladder rungs must be at least 8");
      if (i && rungs[i] <= rungs[i - 1]) throw ConfigError("ladder rungs must increase");
    }
    if (class_limit < 2) throw ConfigError("class_limit must be at least 2");
    for (double d : deltas)
      if (!(d > 0.0)) throw ConfigError("perturbation sizes must be positive");
    selfsim.validate();
    for (double a : diagnostics.alphas)
      if (!(a >= 0.0)) throw ConfigError("tightness alphas must be non-negative");
    if (diagnostics.support_edge && !(*diagnostics.support_edge > 0.0))
      throw ConfigError("support_edge must be positive");
    if (out.empty()) throw ConfigError("output directory must be named");
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
}

namespace {

void allow_keys(const json& j, const char* where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void take(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

InitialFamily parse_family(const std::string& s) {
  if (s == "compact_bump") return InitialFamily::compact_bump;
  if (s == "exponential") return InitialFamily::exponential;
  if (s == "custom_table") return InitialFamily::custom_table;
  throw ConfigError("unknown initial family '" + s + "'");
}

const char* family_name(InitialFamily f) {
  switch (f) {
    case InitialFamily::compact_bump: return "compact_bump";
    case InitialFamily::exponential: return "exponential";
    case InitialFamily::custom_table: return "custom_table";
  }
  return "";
}

void parse_initial(const json& j, const char* where, InitialSpec& s) {
  allow_keys(j, where,
             {"family", "classes", "a_lo", "a_hi", "lambda", "amplitude", "random_amplitudes",
              "table", "project", "area"});
  std::string fam;
  take(j, "family", fam);
  if (!fam.empty()) s.family = parse_family(fam);
  take(j, "classes", s.classes);
  take(j, "a_lo", s.a_lo);
  take(j, "a_hi", s.a_hi);
  take(j, "lambda", s.lambda);
  take(j, "amplitude", s.amplitude);
  take(j, "random_amplitudes", s.random_amplitudes);
  take(j, "table", s.table);
  take(j, "project", s.project);
  if (j.contains("area") && !j["area"].is_null()) {
    double a = 0;
    take(j, "area", a);
    s.area = a;
  }
}

json initial_json(const InitialSpec& s) {
  json j;
  j["family"] = family_name(s.family);
  j["classes"] = s.classes;
  j["a_lo"] = s.a_lo;
  j["a_hi"] = s.a_hi;
  j["lambda"] = s.lambda;
  j["amplitude"] = s.amplitude;
  j["random_amplitudes"] = s.random_amplitudes;
  j["table"] = s.table;
  j["project"] = s.project;
  j["area"] = s.area ? json(*s.area) : json(nullptr);
  return j;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  allow_keys(j, "config",
             {"model", "stepper", "t_final", "output_every", "initial", "ladder", "stability",
              "selfsim", "diagnostics", "seed", "out"});
  if (j.contains("model")) {
    const auto& m = j["model"];
    allow_keys(m, "model", {"beta", "n0", "delta_a", "num_nodes", "closure"});
    take(m, "beta", c.model.beta);
    take(m, "n0", c.model.n0);
    take(m, "delta_a", c.model.grid.delta_a);
    take(m, "num_nodes", c.model.grid.num_nodes);
    std::string cl;
    take(m, "closure", cl);
    if (cl == "full") c.model.closure = ClassClosure::full;
    else if (!cl.empty() && cl != "truncated") throw ConfigError("unknown closure '" + cl + "'");
  }
  c.selfsim.beta = c.model.beta;
  if (j.contains("stepper")) {
    const auto& s = j["stepper"];
    allow_keys(s, "stepper",
               {"dt", "scheme", "closure", "picard_tol", "picard_max_iter", "window",
                "window_retries", "gamma_d_floor_factor", "overflow_tolerance", "layer_repair"});
    take(s, "dt", c.stepper.dt);
    std::string sch, cl;
    take(s, "scheme", sch);
    if (sch == "picard") c.stepper.scheme = Scheme::picard;
    else if (!sch.empty() && sch != "strang") throw ConfigError("unknown scheme '" + sch + "'");
    take(s, "closure", cl);
    if (cl == "predictor") c.stepper.closure = WeightClosure::predictor;
    else if (!cl.empty() && cl != "conservative")
      throw ConfigError("unknown weight closure '" + cl + "'");
    take(s, "picard_tol", c.stepper.picard_tol);
    take(s, "picard_max_iter", c.stepper.picard_max_iter);
    take(s, "window", c.stepper.window);
    take(s, "window_retries", c.stepper.window_retries);
    take(s, "gamma_d_floor_factor", c.stepper.gamma_d_floor_factor);
    take(s, "overflow_tolerance", c.stepper.overflow_tolerance);
    take(s, "layer_repair", c.stepper.layer_repair);
  }
  take(j, "t_final", c.t_final);
  take(j, "output_every", c.output_every);
  if (j.contains("initial")) parse_initial(j["initial"], "initial", c.initial);
  if (j.contains("ladder")) {
    allow_keys(j["ladder"], "ladder", {"rungs", "class_limit"});
    take(j["ladder"], "rungs", c.rungs);
    take(j["ladder"], "class_limit", c.class_limit);
  }
  if (j.contains("stability")) {
    allow_keys(j["stability"], "stability", {"deltas", "perturbation"});
    take(j["stability"], "deltas", c.deltas);
    if (j["stability"].contains("perturbation"))
      parse_initial(j["stability"]["perturbation"], "stability.perturbation", c.perturbation);
  }
  if (j.contains("selfsim")) {
    const auto& s = j["selfsim"];
    allow_keys(s, "selfsim", {"boundary", "beta", "cap", "tol", "max_iter", "method", "gamma0"});
    take(s, "boundary", c.selfsim.boundary);
    take(s, "beta", c.selfsim.beta);
    take(s, "cap", c.selfsim.cap);
    take(s, "tol", c.selfsim.tol);
    take(s, "max_iter", c.selfsim.max_iter);
    take(s, "gamma0", c.selfsim.gamma0);
    std::string m;
    take(s, "method", m);
    if (m == "damped") c.selfsim.method = SelfSimMethod::damped;
    else if (!m.empty() && m != "bracketed") throw ConfigError("unknown selfsim method '" + m + "'");
  }
  if (j.contains("diagnostics")) {
    const auto& d = j["diagnostics"];
    allow_keys(d, "diagnostics", {"tightness", "times", "alphas", "support_edge", "lewis"});
    take(d, "tightness", c.diagnostics.tightness);
    take(d, "times", c.diagnostics.times);
    take(d, "alphas", c.diagnostics.alphas);
    take(d, "lewis", c.diagnostics.lewis);
    if (d.contains("support_edge") && !d["support_edge"].is_null()) {
      double a = 0;
      take(d, "support_edge", a);
      c.diagnostics.support_edge = a;
    }
  }
  take(j, "seed", c.seed);
  take(j, "out", c.out);
  c.stepper.sample_every = static_cast<std::size_t>(std::llround(c.output_every / c.stepper.dt));
  if (c.stepper.sample_every == 0) c.stepper.sample_every = 1;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  json j;
  j["model"] = {{"beta", c.model.beta},
                {"n0", c.model.n0},
                {"delta_a", c.model.grid.delta_a},
                {"num_nodes", c.model.grid.num_nodes},
                {"closure", c.model.closure == ClassClosure::full ? "full" : "truncated"}};
  j["stepper"] = {{"dt", c.stepper.dt},
                  {"scheme", c.stepper.scheme == Scheme::picard ? "picard" : "strang"},
                  {"closure", c.stepper.closure == WeightClosure::predictor ? "predictor"
                                                                             : "conservative"},
                  {"picard_tol", c.stepper.picard_tol},
                  {"picard_max_iter", c.stepper.picard_max_iter},
                  {"window", c.stepper.window},
                  {"window_retries", c.stepper.window_retries},
                  {"gamma_d_floor_factor", c.stepper.gamma_d_floor_factor},
                  {"overflow_tolerance", c.stepper.overflow_tolerance},
                  {"layer_repair", c.stepper.layer_repair}};
  j["t_final"] = c.t_final;
  j["output_every"] = c.output_every;
  j["initial"] = initial_json(c.initial);
  j["ladder"] = {{"rungs", c.rungs}, {"class_limit", c.class_limit}};
  j["stability"] = {{"deltas", c.deltas}, {"perturbation", initial_json(c.perturbation)}};
  j["selfsim"] = {{"boundary", c.selfsim.boundary},
                  {"beta", c.selfsim.beta},
                  {"cap", c.selfsim.cap},
                  {"tol", c.selfsim.tol},
                  {"max_iter", c.selfsim.max_iter},
                  {"method", c.selfsim.method == SelfSimMethod::damped ? "damped" : "bracketed"},
                  {"gamma0", c.selfsim.gamma0}};
  j["diagnostics"] = {{"tightness", c.diagnostics.tightness},
                      {"times", c.diagnostics.times},
                      {"alphas", c.diagnostics.alphas},
                      {"support_edge", c.diagnostics.support_edge
                                           ? json(*c.diagnostics.support_edge)
                                           : json(nullptr)},
                      {"lewis", c.diagnostics.lewis}};
  j["seed"] = c.seed;
  j["out"] = c.out;
  return j.dump(2) + "\n";
}

}  // namespace graink
