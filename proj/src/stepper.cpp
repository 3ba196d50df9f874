#include "graink/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "graink/errors.hpp"

namespace graink {

using RowPanel = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void StepperConfig::validate(const ModelParams& p) const {
  const int k = lattice_cells(dt, p.grid);
  if (k <= 0) throw StepSizeError("dt must be a positive multiple of delta_a");
  if (!(picard_tol > 0.0)) throw ContractError("picard_tol must be positive");
  if (picard_max_iter < 1) throw ContractError("picard_max_iter must be at least 1");
  if (scheme == Scheme::picard) {
    const int w = lattice_cells(window, p.grid);
    if (w <= 0 || w % k != 0) throw ContractError("window must be a positive multiple of dt");
  }
  if (!(gamma_d_floor_factor >= 0.0)) throw ContractError("gamma_d_floor_factor must be >= 0");
  if (!(overflow_tolerance >= 0.0)) throw ContractError("overflow_tolerance must be >= 0");
  if (sample_every == 0) throw ContractError("sample_every must be positive");
}

namespace {

bool is_zero(const SimState& s) {
  return std::all_of(s.f.begin(), s.f.end(), [](double v) { return v == 0.0; });
}

// Gamma of a lattice state; the empty state carries no flow.
double state_gamma(const SimState& s, const ModelParams& p) {
  const auto m = evaluate_moments(s, p);
  if (m.gamma) return *m.gamma;
  if (is_zero(s)) return 0.0;
  throw DegenerateWeightError("Gamma_D = " + std::to_string(m.gamma_d) + " at t = " +
                              std::to_string(s.time));
}

// layer width in cells for class n, or 0 when there is nothing to interpolate
std::size_t layer_cells(int n, int k, std::size_t nodes) {
  if (n <= 6) return 0;
  const std::size_t s = static_cast<std::size_t>(n - 6) * static_cast<std::size_t>(k);
  return (s >= 2 && s <= nodes - 1) ? s : 0;
}

// c <- R^T c for the boundary repair R
void repair_adjoint(RowPanel& c, int k, bool layer, const ModelParams& p) {
  const std::size_t K = p.grid.num_nodes;
  for (int n = 7; n <= p.n0; ++n) {
    const auto r = static_cast<Eigen::Index>(ModelParams::row(n));
    c(r, 0) = 0.0;
    const std::size_t s = layer ? layer_cells(n, k, K) : 0;
    if (s == 0) continue;
    double acc = 0.0;
    for (std::size_t i = 1; i < s; ++i) {
      acc += (static_cast<double>(i) / static_cast<double>(s)) * c(r, static_cast<Eigen::Index>(i));
      c(r, static_cast<Eigen::Index>(i)) = 0.0;
    }
    c(r, static_cast<Eigen::Index>(s)) += acc;
  }
}

// trace(E W) = sum_ab E_ab W_ba
double pair_trace(const Eigen::MatrixXd& E, const Eigen::MatrixXd& W) {
  return E.cwiseProduct(W.transpose()).sum();
}

// Smallest-effort root of theta -> trace(exp(theta J) W) - target on theta >= 0.
// Returns 0 when the value at 0 is already non-positive.
double solve_weight(CollisionPropagator& prop, const Eigen::MatrixXd& W, double target) {
  const Eigen::MatrixXd& J = prop.generator();
  auto value = [&](double th) { return pair_trace(prop(th), W) - target; };
  auto slope = [&](double th) { return pair_trace(J * prop(th), W); };

  const double g0 = value(0.0);
  if (!(g0 > 0.0)) return 0.0;
  const double d0 = slope(0.0);
  double lo = 0.0;
  double hi = d0 < 0.0 ? 2.0 * g0 / -d0 : 1e-6;
  int expand = 0;
  while (value(hi) > 0.0) {
    lo = hi;
    hi *= 4.0;
    if (++expand > 60) throw NumericalError("collision weight root not bracketed");
  }
  double th = d0 < 0.0 ? std::min(g0 / -d0, 0.5 * (lo + hi)) : 0.5 * (lo + hi);
  if (!(th > lo && th < hi)) th = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double v = value(th);
    if (v == 0.0) return th;
    if (v > 0.0) lo = th; else hi = th;
    const double d = slope(th);
    double next = (d < 0.0) ? th - v / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - th) <= 1e-15 * th || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi)
      return next;
    th = next;
  }
  throw NumericalError("collision weight root did not converge");
}

}  // namespace

void repair_boundary(SimState& s, int k, bool layer, const ModelParams& p,
                     BoundaryOutflow* flow) {
  const std::size_t K = s.nodes;
  const double da = p.grid.delta_a;
  for (int n = 7; n <= p.n0; ++n) {
    auto v = s.cls(n);
    double removed = 0.5 * da * v[0];
    v[0] = 0.0;
    const std::size_t c = layer ? layer_cells(n, k, K) : 0;
    if (c > 0) {
      const double top = v[c];
      for (std::size_t i = 1; i < c; ++i) {
        const double lin = (static_cast<double>(i) / static_cast<double>(c)) * top;
        removed += da * (v[i] - lin);
        v[i] = lin;
      }
    }
    if (flow && !flow->outflow.empty()) flow->outflow[ModelParams::row(n)] += removed;
  }
}

// ---------------------------------------------------------------------------

StrangStepper::StrangStepper(const ModelParams& p, const StepperConfig& cfg)
    : p_(p), cfg_(cfg), k_(lattice_cells(cfg.dt, p.grid)), prop_(p) {
  p_.validate();
  if (k_ <= 0) throw StepSizeError("dt must be a positive multiple of delta_a");
  build_functionals();
}

void StrangStepper::build_functionals() {
  const auto K = static_cast<Eigen::Index>(p_.num_classes());
  const std::size_t nodes = p_.grid.num_nodes;
  const auto nn = static_cast<Eigen::Index>(nodes);
  const double da = p_.grid.delta_a;
  auto w = [&](std::size_t i) { return p_.grid.weight(i); };
  auto a = [&](std::size_t i) { return p_.grid.node(i); };

  // Transport area change: on-grid change for everything that stays on the
  // grid; mass pushed past a_max counted as if it were still there.
  area_shift_ = RowPanel::Zero(K, nn);
  for (int n = 2; n <= p_.n0; ++n) {
    const auto r = static_cast<Eigen::Index>(ModelParams::row(n));
    if (n == 6) continue;
    const std::size_t s = static_cast<std::size_t>(std::abs(n - 6)) * static_cast<std::size_t>(k_);
    for (std::size_t i = 0; i < nodes; ++i) {
      double q = 0.0;
      if (n < 6) {
        if (i >= s) q = w(i - s) * a(i - s);
      } else if (s > nodes - 1) {
        q = w(i) * (a(i) + static_cast<double>(s) * da);
      } else {
        const double wt = (i + 1 == nodes) ? 0.5 * da : da;
        q = wt * (a(i) + static_cast<double>(s) * da);
      }
      area_shift_(r, static_cast<Eigen::Index>(i)) = q - w(i) * a(i);
    }
  }

  defect_final_ = RowPanel::Zero(K, nn);
  RowPanel area = RowPanel::Zero(K, nn);
  for (int n = 2; n <= p_.n0; ++n) {
    const auto r = static_cast<Eigen::Index>(ModelParams::row(n));
    for (std::size_t i = 0; i < nodes; ++i) {
      defect_final_(r, static_cast<Eigen::Index>(i)) = (n - 6.0) * w(i);
      area(r, static_cast<Eigen::Index>(i)) = w(i) * a(i);
    }
  }
  repair_adjoint(defect_final_, k_, cfg_.layer_repair, p_);
  area_repair_ = area;
  repair_adjoint(area_repair_, k_, cfg_.layer_repair, p_);
  area_repair_ -= area;
}

StepDiagnostics StrangStepper::advance(SimState& s) {
  s.check_shape(p_);
  if (is_zero(s)) {
    StepDiagnostics d;
    d.flow.outflow.assign(s.classes, 0.0);
    d.flow.overflow.assign(s.classes, 0.0);
    d.flow.overflow_area.assign(s.classes, 0.0);
    d.flow.boundary_values.assign(s.classes, 0.0);
    s.time += cfg_.dt;
    d.moments = evaluate_moments(s, p_);
    return d;
  }
  return cfg_.closure == WeightClosure::conservative ? advance_conservative(s)
                                                     : advance_predictor(s);
}

StepDiagnostics StrangStepper::advance_conservative(SimState& s) {
  const auto K = static_cast<Eigen::Index>(s.classes);
  const auto nn = static_cast<Eigen::Index>(s.nodes);
  Eigen::Map<const RowPanel> F(s.f.data(), K, nn);
  const Eigen::MatrixXd W_shift = F * area_shift_.transpose();
  const double scale = std::max(std::abs(evaluate_moments(s, p_).A), 1e-300);

  StepDiagnostics d;
  SimState h(p_, s.time);
  double layer_area = 0.0;
  double theta1 = 0.0, theta2 = 0.0;
  for (int sweep = 0; sweep < 16; ++sweep) {
    theta1 = solve_weight(prop_, W_shift, -layer_area);
    h.f = s.f;
    apply_columnwise(prop_(theta1), h);
    d.flow = shift_in_place(h, k_, p_);
    Eigen::Map<const RowPanel> H(h.f.data(), K, nn);
    const Eigen::MatrixXd W_def = H * defect_final_.transpose();
    theta2 = solve_weight(prop_, W_def, 0.0);
    if (!cfg_.layer_repair) break;
    const Eigen::MatrixXd W_rep = H * area_repair_.transpose();
    const double next = pair_trace(prop_(theta2), W_rep);
    const bool done = std::abs(next - layer_area) <= 1e-16 * scale;
    layer_area = next;
    if (done) break;
  }
  apply_columnwise(prop_(theta2), h);
  repair_boundary(h, k_, cfg_.layer_repair, p_, &d.flow);
  h.time = s.time + cfg_.dt;
  s = std::move(h);

  d.theta_pre = theta1;
  d.theta_post = theta2;
  d.gamma_effective = (theta1 + theta2) / cfg_.dt;
  d.moments = evaluate_moments(s, p_);
  return d;
}

StepDiagnostics StrangStepper::advance_predictor(SimState& s) {
  auto trial = [&](const SimState& in, double theta, StepDiagnostics& d) {
    SimState h = in;
    apply_columnwise(prop_(0.5 * theta), h);
    d.flow = shift_in_place(h, k_, p_);
    apply_columnwise(prop_(0.5 * theta), h);
    repair_boundary(h, k_, cfg_.layer_repair, p_, &d.flow);
    h.time = in.time + cfg_.dt;
    return h;
  };
  StepDiagnostics d;
  const double g0 = state_gamma(s, p_);
  const SimState pred = trial(s, g0 * cfg_.dt, d);
  const double g1 = state_gamma(pred, p_);
  const double theta = 0.5 * (g0 + g1) * cfg_.dt;
  s = trial(s, theta, d);
  d.theta_pre = d.theta_post = 0.5 * theta;
  d.gamma_effective = theta / cfg_.dt;
  d.moments = evaluate_moments(s, p_);
  return d;
}

std::pair<SimState, StepDiagnostics> strang_step(const SimState& s, const StepperConfig& cfg,
                                                 const ModelParams& p) {
  StrangStepper st(p, cfg);
  SimState out = s;
  auto d = st.advance(out);
  return {std::move(out), std::move(d)};
}

// ---------------------------------------------------------------------------

namespace {

// weights of the endpoint values in the exactly-relaxed trapezoid rule
void relaxed_weights(double z, double& ia, double& ib) {
  if (z < 0.5) {
    ia = 0.0;
    ib = 0.0;
    double term = 1.0;  // (-z)^k / k!
    for (int k = 0; k < 30; ++k) {
      ia += term / (k + 2.0);
      ib += term / ((k + 1.0) * (k + 2.0));
      term *= -z / (k + 1.0);
    }
    return;
  }
  const double e = std::exp(-z);
  ia = (1.0 - e * (1.0 + z)) / (z * z);
  ib = (1.0 - e) / z - ia;
}

double sup_flat_diff(const SimState& x, const SimState& y, const SuperSolution& ss) {
  double mx = 0.0;
  for (std::size_t r = 0; r < x.classes; ++r) {
    const double* a = x.f.data() + r * x.nodes;
    const double* b = y.f.data() + r * y.nodes;
    double m = 0.0;
    for (std::size_t i = 0; i < x.nodes; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    mx = std::max(mx, m / ss.phi[r]);
  }
  return mx;
}

}  // namespace

PicardResult picard_window(const SimState& g, double tau, const StepperConfig& cfg,
                           const ModelParams& p, const WeightFunction* prescribed) {
  g.check_shape(p);
  const int k = lattice_cells(cfg.dt, p.grid);
  if (k <= 0) throw StepSizeError("dt must be a positive multiple of delta_a");
  const int kw = lattice_cells(tau, p.grid);
  if (kw <= 0 || kw % k != 0) throw StepSizeError("window must be a positive multiple of dt");
  const int steps = kw / k;
  const double dt = cfg.dt;

  const auto ss = super_solution(p);
  const Eigen::MatrixXd Gp = gain_matrix(p);
  const auto K = static_cast<Eigen::Index>(g.classes);
  const auto nn = static_cast<Eigen::Index>(g.nodes);

  PicardResult res;
  std::vector<SimState> X(static_cast<std::size_t>(steps) + 1, g);
  res.flows.resize(static_cast<std::size_t>(steps));
  for (int j = 0; j < steps; ++j) {
    X[j + 1] = X[j];
    res.flows[j] = shift_in_place(X[j + 1], k, p);
    repair_boundary(X[j + 1], k, cfg.layer_repair, p, &res.flows[j]);
    X[j + 1].time = g.time + (j + 1) * dt;
  }
  auto sup_norm = [&](const std::vector<SimState>& v) {
    double m = 0.0;
    for (const auto& s : v) m = std::max(m, flat_norm(s, ss));
    return m;
  };
  res.sup_norms.push_back(sup_norm(X));

  std::vector<double> G(static_cast<std::size_t>(steps) + 1);
  std::vector<RowPanel> H(static_cast<std::size_t>(steps) + 1);
  std::vector<SimState> Y = X;
  for (int it = 1; it <= cfg.picard_max_iter; ++it) {
    for (int j = 0; j <= steps; ++j) {
      G[j] = prescribed ? (*prescribed)(g.time + j * dt) : state_gamma(X[j], p);
      Eigen::Map<const RowPanel> Fj(X[j].f.data(), K, nn);
      H[j].noalias() = Gp * Fj;
    }
    Y[0] = g;
    for (int j = 0; j < steps; ++j) {
      const double dG = 0.5 * dt * (G[j] + G[j + 1]);
      SimState& y = Y[j + 1];
      y.f = Y[j].f;
      std::vector<double> ib(y.classes);
      for (std::size_t r = 0; r < y.classes; ++r) {
        double ia = 0.0;
        relaxed_weights(ss.u[r] * dG, ia, ib[r]);
        const double decay = std::exp(-ss.u[r] * dG);
        double* v = y.f.data() + r * y.nodes;
        const double* hj = H[j].data() + r * y.nodes;
        for (std::size_t i = 0; i < y.nodes; ++i) v[i] = decay * v[i] + dG * ia * hj[i];
      }
      res.flows[j] = shift_in_place(y, k, p);
      for (std::size_t r = 0; r < y.classes; ++r) {
        double* v = y.f.data() + r * y.nodes;
        const double* h1 = H[j + 1].data() + r * y.nodes;
        const double c = dG * ib[r];
        for (std::size_t i = 0; i < y.nodes; ++i) v[i] += c * h1[i];
      }
      repair_boundary(y, k, cfg.layer_repair, p, &res.flows[j]);
      y.time = g.time + (j + 1) * dt;
    }
    double diff = 0.0;
    for (int j = 0; j <= steps; ++j) diff = std::max(diff, sup_flat_diff(Y[j], X[j], ss));
    res.increments.push_back(diff);
    std::swap(X, Y);
    res.sup_norms.push_back(sup_norm(X));
    res.iterations = it;
    if (diff < cfg.picard_tol) {
      for (int j = 0; j <= steps; ++j)
        G[j] = prescribed ? (*prescribed)(g.time + j * dt) : state_gamma(X[j], p);
      res.gamma = G;
      res.states = std::move(X);
      return res;
    }
  }
  throw NonContractionError("Picard iteration did not reach tolerance in " +
                            std::to_string(cfg.picard_max_iter) + " sweeps (last increment " +
                            std::to_string(res.increments.back()) + ")");
}

// ---------------------------------------------------------------------------

const SimState* TrajectoryRecord::snapshot_at(double t, double tol) const {
  for (const auto& s : snapshots)
    if (std::abs(s.time - t) <= tol) return &s;
  return nullptr;
}

void check_admissible(const SimState& s, const ModelParams& p, double p_tol) {
  s.check_shape(p);
  for (double v : s.f) {
    if (!std::isfinite(v)) throw AdmissibilityError("non-finite density");
    if (v < 0.0) throw AdmissibilityError("negative density " + std::to_string(v));
  }
  for (int n = 7; n <= p.n0; ++n)
    if (s.at(n, 0) != 0.0)
      throw AdmissibilityError("boundary value f_" + std::to_string(n) + "(0) is nonzero");
  const auto m = evaluate_moments(s, p);
  if (!(m.A > 0.0)) throw AdmissibilityError("covered area must be positive");
  if (std::abs(m.P) > p_tol * m.M)
    throw AdmissibilityError("polyhedral defect P = " + std::to_string(m.P) + " is not zero");
}

namespace {

struct Recorder {
  const ModelParams& p;
  const StepperConfig& cfg;
  SuperSolution ss;
  TrajectoryRecord rec;
  double gamma_bar = 0.0;
  std::vector<double> cum_out;
  double cum_over = 0.0, cum_over_area = 0.0;
  std::size_t index = 0;

  Recorder(const ModelParams& p_, const StepperConfig& c) : p(p_), cfg(c), ss(super_solution(p_)) {
    cum_out.assign(p.num_classes(), 0.0);
  }

  void push(const SimState& s, const MomentSet& m, double theta, double gamma_eff,
            const BoundaryOutflow* flow, bool last) {
    StepRecord r;
    r.t = s.time;
    r.moments = m;
    r.gamma = m.gamma.value_or(0.0);
    gamma_bar = std::max({gamma_bar, r.gamma, gamma_eff});
    r.gamma_bar = gamma_bar;
    r.flat_norm = flat_norm(s, ss);
    r.min_value = min_value(s);
    r.theta = theta;
    if (flow) {
      for (std::size_t i = 0; i < cum_out.size(); ++i) cum_out[i] += flow->outflow[i];
      cum_over += flow->total_overflow();
      cum_over_area += flow->total_overflow_area();
    }
    r.cumulative_outflow = cum_out;
    r.cumulative_overflow = cum_over;
    r.cumulative_overflow_area = cum_over_area;
    rec.steps.push_back(std::move(r));
    if (index % cfg.sample_every == 0 || last) rec.snapshots.push_back(s);
    ++index;
  }
};

}  // namespace

TrajectoryRecord run_simulation(const SimState& g, double t_final, const StepperConfig& cfg,
                                const ModelParams& p) {
  p.validate();
  cfg.validate(p);
  check_admissible(g, p);
  const int k = lattice_cells(cfg.dt, p.grid);
  const int kt = lattice_cells(t_final, p.grid);
  if (kt % k != 0) throw StepSizeError("t_final must be a multiple of dt");
  const int nsteps = kt / k;

  Recorder R(p, cfg);
  const auto m0 = compute_moments(g, p);
  R.rec.initial_flat_norm = flat_norm(g, R.ss);
  const double floor_d = cfg.gamma_d_floor_factor * (6.0 - 2.0 * (p.beta + 1.0)) * m0.N;
  const double leak_cap = cfg.overflow_tolerance * m0.N;
  R.push(g, m0, 0.0, 0.0, nullptr, nsteps == 0);

  auto healthy = [&](const MomentSet& m, double t) {
    if (!(m.gamma_d >= floor_d) || !m.gamma) {
      R.rec.termination = Termination::admissibility_lost;
      R.rec.message = "Gamma_D = " + std::to_string(m.gamma_d) + " below floor " +
                      std::to_string(floor_d) + " at t = " + std::to_string(t);
      return false;
    }
    if (std::abs(R.cum_over) > leak_cap) {
      R.rec.termination = Termination::overflow_leak;
      R.rec.message = "overflow past a_max " + std::to_string(R.cum_over) + " exceeds " +
                      std::to_string(leak_cap) + " at t = " + std::to_string(t);
      return false;
    }
    return true;
  };

  if (cfg.scheme == Scheme::strang) {
    StrangStepper st(p, cfg);
    SimState s = g;
    for (int j = 1; j <= nsteps; ++j) {
      StepDiagnostics d;
      try {
        d = st.advance(s);
      } catch (const DegenerateWeightError& e) {
        R.rec.termination = Termination::admissibility_lost;
        R.rec.message = e.what();
        return R.rec;
      }
      s.time = g.time + j * cfg.dt;  // no drift from repeated addition
      R.push(s, d.moments, d.theta_pre + d.theta_post, d.gamma_effective, &d.flow, j == nsteps);
      if (!healthy(d.moments, s.time)) {
        if (R.rec.snapshots.empty() || R.rec.snapshots.back().time != s.time)
          R.rec.snapshots.push_back(s);
        return R.rec;
      }
    }
    return R.rec;
  }

  // Picard: consecutive windows, halving on non-contraction
  const int kwin = lattice_cells(cfg.window, p.grid) / k;
  SimState s = g;
  int done = 0;
  while (done < nsteps) {
    int w = std::min(kwin, nsteps - done);
    PicardResult pr;
    bool ok = false;
    for (int attempt = 0; attempt <= cfg.window_retries; ++attempt) {
      try {
        pr = picard_window(s, w * cfg.dt, cfg, p);
        ok = true;
        break;
      } catch (const NonContractionError&) {
        if (w == 1) break;
        w = std::max(1, w / 2);
      } catch (const DegenerateWeightError& e) {
        R.rec.termination = Termination::admissibility_lost;
        R.rec.message = e.what();
        return R.rec;
      }
    }
    if (!ok) {
      R.rec.termination = Termination::non_contraction;
      R.rec.message = "Picard window failed to contract at t = " + std::to_string(s.time);
      return R.rec;
    }
    for (int j = 1; j <= w; ++j) {
      SimState& sj = pr.states[j];
      sj.time = g.time + (done + j) * cfg.dt;
      const auto m = evaluate_moments(sj, p);
      const double geff = std::max(pr.gamma[j - 1], pr.gamma[j]);
      R.push(sj, m, 0.5 * cfg.dt * (pr.gamma[j - 1] + pr.gamma[j]), geff, &pr.flows[j - 1],
             done + j == nsteps);
      if (!healthy(m, sj.time)) {
        if (R.rec.snapshots.empty() || R.rec.snapshots.back().time != sj.time)
          R.rec.snapshots.push_back(sj);
        return R.rec;
      }
    }
    s = pr.states[w];
    done += w;
  }
  return R.rec;
}

// ---------------------------------------------------------------------------

SimState restrict_classes(const SimState& g, const ModelParams& from, const ModelParams& to) {
  g.check_shape(from);
  if (to.grid.num_nodes != from.grid.num_nodes || to.grid.delta_a != from.grid.delta_a)
    throw ContractError("restriction needs the same area grid");
  SimState out(to, g.time);
  const int top = std::min(from.n0, to.n0);
  for (int n = 2; n <= top; ++n) {
    const auto src = g.cls(n);
    std::copy(src.begin(), src.end(), out.cls(n).begin());
  }
  return out;
}

LadderReport truncation_ladder(const SimState& g, const std::vector<int>& rungs, double t_final,
                               const StepperConfig& cfg, const ModelParams& top,
                               int class_limit) {
  if (rungs.empty()) throw ContractError("ladder needs at least one rung");
  for (std::size_t i = 1; i < rungs.size(); ++i)
    if (rungs[i] < rungs[i - 1]) throw ContractError("ladder rungs must be non-decreasing");
  if (rungs.back() > top.n0) throw ContractError("datum does not cover the top rung");
  // restriction must not drop mass, or the lower rungs start with P != 0
  for (int n = rungs.front() + 1; n <= top.n0; ++n)
    for (double v : g.cls(n))
      if (v != 0.0)
        throw ContractError("ladder datum must vanish above the lowest rung (class " +
                            std::to_string(n) + " is populated)");

  LadderReport rep;
  rep.rungs = rungs;
  rep.class_limit = class_limit;
  for (int n0 : rungs) {
    ModelParams p = top;
    p.n0 = n0;
    rep.runs.push_back(run_simulation(restrict_classes(g, top, p), t_final, cfg, p));
  }
  for (std::size_t q = 1; q < rungs.size(); ++q) {
    const auto& lo = rep.runs[q - 1];
    const auto& hi = rep.runs[q];
    RungPair pr;
    pr.n0_low = rungs[q - 1];
    pr.n0_high = rungs[q];
    const std::size_t ns = std::min(lo.snapshots.size(), hi.snapshots.size());
    for (std::size_t j = 0; j < ns; ++j) {
      const auto& a = lo.snapshots[j];
      const auto& b = hi.snapshots[j];
      for (int n = 2; n <= pr.n0_low; ++n) {
        const auto x = a.cls(n);
        const auto y = b.cls(n);
        double m = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
        pr.all_class_diff = std::max(pr.all_class_diff, m);
        if (n <= class_limit) pr.class_diff = std::max(pr.class_diff, m);
      }
    }
    const std::size_t nt = std::min(lo.steps.size(), hi.steps.size());
    for (std::size_t j = 0; j < nt; ++j) {
      pr.n_diff = std::max(pr.n_diff, std::abs(lo.steps[j].moments.N - hi.steps[j].moments.N));
      pr.a_diff = std::max(pr.a_diff, std::abs(lo.steps[j].moments.A - hi.steps[j].moments.A));
      pr.gamma_diff = std::max(pr.gamma_diff, std::abs(lo.steps[j].gamma - hi.steps[j].gamma));
    }
    rep.pairs.push_back(pr);
  }
  return rep;
}

}  // namespace graink
