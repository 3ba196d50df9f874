#include "graink/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "graink/errors.hpp"

namespace graink {

bool InvariantReport::passes(double beta) const {
  return area_drift <= 1e-6 && defect_ratio <= 1e-6 && n_violations == 0 &&
         min_node >= -1e-14 && flat_ratio <= 1.0 + 1e-10 &&
         min_gamma_d_ratio >= 6.0 - 2.0 * (beta + 1.0);
}

InvariantReport invariant_report(const TrajectoryRecord& rec, const ModelParams&) {
  InvariantReport r;
  if (rec.steps.empty()) return r;
  const auto& m0 = rec.steps.front().moments;
  const double g_flat = rec.initial_flat_norm > 0 ? rec.initial_flat_norm : 1.0;
  r.min_node = std::numeric_limits<double>::infinity();
  r.min_gamma_d_ratio = std::numeric_limits<double>::infinity();
  double prev_n = m0.N;
  for (std::size_t j = 0; j < rec.steps.size(); ++j) {
    const auto& s = rec.steps[j];
    const auto& m = s.moments;
    r.area_drift = std::max(r.area_drift, std::abs(m.A - m0.A) / m0.A);
    r.leak_area_drift = std::max(
        r.leak_area_drift, std::abs(m.A + s.cumulative_overflow_area - m0.A) / m0.A);
    r.defect_ratio = std::max(r.defect_ratio, std::abs(m.P) / m0.M);
    if (j > 0) {
      const double inc = (m.N - prev_n) / m0.N;
      r.max_n_increase = std::max(r.max_n_increase, inc);
      if (inc > 1e-12) ++r.n_violations;
    }
    prev_n = m.N;
    r.min_node = std::min(r.min_node, s.min_value / g_flat);
    r.flat_ratio = std::max(r.flat_ratio, s.flat_norm / g_flat);
    if (m.N > 0) r.min_gamma_d_ratio = std::min(r.min_gamma_d_ratio, m.gamma_d / m.N);
    r.overflow_number = s.cumulative_overflow;
    r.overflow_area = s.cumulative_overflow_area;
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// Cumulative integrals of the linear interpolants of f_n and a f_n from 0.
struct Profile {
  std::size_t K = 0, nodes = 0;
  double da = 0;
  int n0 = 0;
  std::vector<double> f, cf, caf;  // class-major

  Profile(const SimState& s, const ModelParams& p)
      : K(s.classes), nodes(s.nodes), da(p.grid.delta_a), n0(p.n0), f(s.f) {
    s.check_shape(p);
    cf.assign(K * nodes, 0.0);
    caf.assign(K * nodes, 0.0);
    for (std::size_t r = 0; r < K; ++r) {
      const double* v = f.data() + r * nodes;
      double* c = cf.data() + r * nodes;
      double* ca = caf.data() + r * nodes;
      for (std::size_t i = 1; i < nodes; ++i) {
        c[i] = c[i - 1] + 0.5 * da * (v[i - 1] + v[i]);
        const double a0 = (i - 1) * da, a1 = i * da;
        ca[i] = ca[i - 1] + 0.5 * da * (a0 * v[i - 1] + a1 * v[i]);
      }
    }
  }

  double total(std::size_t r, bool area) const {
    return (area ? caf : cf)[r * nodes + nodes - 1];
  }

  // integral over [0, alpha]
  double head(std::size_t r, double alpha, bool area) const {
    if (alpha <= 0) return 0.0;
    const double x = alpha / da;
    if (x >= static_cast<double>(nodes - 1)) return total(r, area);
    const auto i = static_cast<std::size_t>(x);
    const double th = x - static_cast<double>(i);
    const double* v = f.data() + r * nodes;
    const double* c = (area ? caf : cf).data() + r * nodes;
    double y0 = v[i], y1 = v[i + 1];
    if (area) {
      y0 *= i * da;
      y1 *= (i + 1) * da;
    }
    const double ym = y0 + th * (y1 - y0);
    return c[i] + 0.5 * th * da * (y0 + ym);
  }

  double n_perp(double alpha, int nu) const {
    double acc = 0.0;
    for (std::size_t r = 0; r < K; ++r) {
      const int n = static_cast<int>(r) + 2;
      const double h = head(r, alpha, false);
      if (n > nu) acc += h;
      acc += total(r, false) - h;
    }
    return acc;
  }

  double m_perp(double alpha) const {
    const int nu = static_cast<int>(std::floor(alpha));
    double acc = 0.0;
    for (std::size_t r = 0; r < K; ++r) {
      const int n = static_cast<int>(r) + 2;
      if (n > nu) acc += n * total(r, false);
      acc += total(r, true) - head(r, alpha, true);
    }
    return acc;
  }
};

// alpha N_perp(0, alpha) + int_alpha^inf N_perp(0, a) da, with the integral
// tabulated backwards over the breakpoints (grid nodes and integers).
struct EnvelopeTable {
  const Profile& pr;
  double gamma;
  std::vector<double> bp, tail;  // tail[j] = int_{bp[j]}^L N_perp(0, a) da

  EnvelopeTable(const Profile& p, double g) : pr(p), gamma(g) {
    const double L = std::max(pr.da * (pr.nodes - 1), static_cast<double>(pr.n0 + 1));
    for (std::size_t i = 0; i < pr.nodes; ++i) bp.push_back(i * pr.da);
    for (int m = 0; m <= pr.n0 + 1; ++m) bp.push_back(m);
    bp.push_back(L);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end(),
                         [](double x, double y) { return std::abs(x - y) < 1e-12; }),
             bp.end());
    tail.assign(bp.size(), 0.0);
    for (std::size_t j = bp.size() - 1; j-- > 0;)
      tail[j] = tail[j + 1] + piece(bp[j], bp[j + 1]);
  }

  // N_perp(0, .) is quadratic between breakpoints; nu from the left end
  double piece(double x0, double x1) const {
    if (x1 <= x0) return 0.0;
    const int nu = static_cast<int>(std::floor(x0 + 1e-12));
    const double xm = 0.5 * (x0 + x1);
    return (x1 - x0) / 6.0 * (pr.n_perp(x0, nu) + 4.0 * pr.n_perp(xm, nu) + pr.n_perp(x1, nu));
  }

  double integral_from(double alpha) const {
    if (alpha >= bp.back()) return 0.0;
    const auto it = std::upper_bound(bp.begin(), bp.end(), alpha);
    const auto j = static_cast<std::size_t>(it - bp.begin());
    return piece(alpha, bp[j]) + tail[j];
  }

  double operator()(double alpha) const {
    const int nu = static_cast<int>(std::floor(alpha));
    return (alpha + 1.0) * std::exp(-gamma * alpha) + alpha * pr.n_perp(alpha, nu) +
           integral_from(alpha);
  }

  double support_end() const { return bp.back(); }
};

void check_alpha(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ContractError("alpha must be >= 0");
}

}  // namespace

double quasi_complement_first(const SimState& s, double alpha, int nu, const ModelParams& p) {
  check_alpha(alpha);
  if (nu < 0) throw ContractError("nu must be >= 0");
  return Profile(s, p).n_perp(alpha, nu);
}

double quasi_complement_first(const SimState& s, double alpha, const ModelParams& p) {
  check_alpha(alpha);
  return Profile(s, p).n_perp(alpha, static_cast<int>(std::floor(alpha)));
}

double quasi_complement_second(const SimState& s, double alpha, const ModelParams& p) {
  check_alpha(alpha);
  return Profile(s, p).m_perp(alpha);
}

double initial_envelope(const SimState& g, double alpha, const ModelParams& p) {
  check_alpha(alpha);
  const Profile pr(g, p);
  return EnvelopeTable(pr, std::log1p(1.0 / p.beta))(alpha);
}

TailFit fit_exponential_tail(std::span<const double> alphas, std::span<const double> values) {
  if (alphas.size() != values.size() || alphas.size() < 2)
    throw ContractError("tail fit needs at least two paired samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(values[i] > 0)) continue;
    const double y = std::log(values[i]);
    sx += alphas[i];
    sy += y;
    sxx += alphas[i] * alphas[i];
    sxy += alphas[i] * y;
    ++cnt;
  }
  if (cnt < 2) throw NumericalError("tail fit: fewer than two positive samples");
  const double den = cnt * sxx - sx * sx;
  if (!(std::abs(den) > 0)) throw NumericalError("tail fit: degenerate abscissae");
  TailFit fit;
  fit.rate = -(cnt * sxy - sx * sy) / den;
  for (std::size_t i = 0; i < alphas.size(); ++i)
    fit.prefactor = std::max(fit.prefactor, values[i] * std::exp(fit.rate * alphas[i]));
  return fit;
}

double n_envelope_constant(double beta) {
  const double g = std::log1p(1.0 / beta);
  return std::exp(g) / g;
}

double m_envelope_constant(double beta) {
  const double g = std::log1p(1.0 / beta);
  const double c1 = std::exp(g) / g;
  return std::max({4.0, 2.0 * c1 * (1.0 + 1.0 / g), 2.0 * (1.0 + beta) * (1.0 + beta) / beta});
}

TightnessRecord tightness_envelope(const TrajectoryRecord& rec, const ModelParams& p,
                                   std::span<const double> times,
                                   std::span<const double> alphas) {
  if (rec.snapshots.empty() || rec.steps.empty())
    throw ContractError("tightness needs a trajectory with snapshots");
  TightnessRecord out;
  const SimState& g = rec.snapshots.front();
  const Profile p0(g, p);
  const double gam = std::log1p(1.0 / p.beta);
  const EnvelopeTable env(p0, gam);
  const double gflat = rec.initial_flat_norm;
  const double cn = n_envelope_constant(p.beta), cm = m_envelope_constant(p.beta);
  out.min_n_margin = out.min_m_margin = std::numeric_limits<double>::infinity();

  for (double t : times) {
    const SimState* s = rec.snapshot_at(t);
    if (!s) throw ContractError("no snapshot at t = " + std::to_string(t));
    const auto step = std::find_if(rec.steps.begin(), rec.steps.end(),
                                   [&](const StepRecord& r) { return std::abs(r.t - t) <= 1e-9; });
    if (step == rec.steps.end()) throw ContractError("no step record at t");
    const double gbar = step->gamma_bar;
    const Profile pt(*s, p);
    std::vector<double> mvals;
    for (double a : alphas) {
      check_alpha(a);
      TightnessSample q;
      q.t = t;
      q.alpha = a;
      q.n_perp = pt.n_perp(a, static_cast<int>(std::floor(a)));
      q.m_perp = pt.m_perp(a);
      const double x = a * std::exp(-t);
      q.n_bound = p0.n_perp(x, static_cast<int>(std::floor(x))) +
                  cn * gflat * gbar * std::exp(-gam * x);
      q.m_bound = cm * std::exp(t) * (1.0 + gflat + gflat * gbar) * env(x);
      out.n_envelope_ok = out.n_envelope_ok && q.n_margin() >= 0;
      out.m_envelope_ok = out.m_envelope_ok && q.m_margin() >= 0;
      out.ordering_ok = out.ordering_ok && q.n_perp <= q.m_perp;
      out.min_n_margin = std::min(out.min_n_margin, q.n_margin());
      out.min_m_margin = std::min(out.min_m_margin, q.m_margin());
      out.samples.push_back(q);
      mvals.push_back(q.m_perp / (1.0 + gbar));
    }
    out.times.push_back(t);
    out.fits.push_back(alphas.size() >= 2 ? fit_exponential_tail(alphas, mvals) : TailFit{});
    out.overflow_number = step->cumulative_overflow;
    out.overflow_area = step->cumulative_overflow_area;
  }
  return out;
}

// ---------------------------------------------------------------------------

double positivity_root(double A, double K, double kappa, double d) {
  if (!(A > 0 && K > 0 && kappa >= 0 && d > 0)) throw ContractError("bad positivity constants");
  auto phi = [&](double x) { return 2.0 * x / (A * d) * std::log(2.0 * K * (1.0 + kappa / x) / A); };
  // phi -> 0 as x -> 0 and grows without bound; bracket then bisect
  double hi = 1.0;
  while (phi(hi) < 1.0) {
    hi *= 2.0;
    if (hi > 1e300) throw NumericalError("positivity root not bracketed");
  }
  double lo = hi;
  while (phi(lo) >= 1.0) {
    lo *= 0.5;
    if (lo < 1e-300) return 0.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) >= 1.0 ? hi : lo) = mid;
  }
  return hi;
}

CountBoundReport grain_count_bounds(const TrajectoryRecord& rec, const ModelParams& p,
                                    std::optional<double> support_edge) {
  if (rec.snapshots.empty() || rec.steps.empty())
    throw ContractError("count bounds need a trajectory");
  CountBoundReport out;
  const SimState& g = rec.snapshots.front();
  const auto& m0 = rec.steps.front().moments;
  const double gam = std::log1p(1.0 / p.beta);
  const double gflat = rec.initial_flat_norm;
  const auto ss = super_solution(p);

  if (!support_edge) out.notice = "support bound skipped: no compact support edge given";

  // Gamma_bar <= c |g|_flat / N
  double head = 0.0;
  for (int n = 2; n <= 5; ++n) head += (n - 6.0) * (n - 6.0) * ss.phi[ModelParams::row(n)];
  out.gamma_constant = head / (6.0 - 2.0 * (p.beta + 1.0));

  // initial envelope fit: rate below gamma, prefactor is a sup over a fine
  // lattice plus the closed-form tail beyond the data
  const Profile p0(g, p);
  const EnvelopeTable env(p0, gam);
  const double L = env.support_end();
  std::vector<double> xs, ys;
  const int samples = 400;
  for (int i = 0; i <= samples; ++i) {
    const double x = L * i / samples;
    xs.push_back(x);
    ys.push_back(env(x));
  }
  TailFit fit = fit_exponential_tail(xs, ys);
  fit.rate = std::clamp(fit.rate, 1e-3 * gam, 0.9 * gam);
  fit.prefactor = 0.0;
  // the sup must also cover points between samples; refine with the node lattice
  const std::size_t fine = std::max<std::size_t>(4 * p.grid.num_nodes, 4000);
  for (std::size_t i = 0; i <= fine; ++i) {
    const double x = L * static_cast<double>(i) / static_cast<double>(fine);
    fit.prefactor = std::max(fit.prefactor, env(x) * std::exp(fit.rate * x));
  }
  {
    const double xstar = 1.0 / (gam - fit.rate) - 1.0;
    const double x = std::max(L, xstar);
    fit.prefactor = std::max(fit.prefactor, (x + 1.0) * std::exp(-(gam - fit.rate) * x));
    fit.prefactor = std::max(fit.prefactor, (L + 1.0) * std::exp(-(gam - fit.rate) * L));
  }
  out.initial_fit = fit;

  const double cm = m_envelope_constant(p.beta);
  const double kappa = out.gamma_constant * gflat * gflat / (1.0 + gflat);
  for (const auto& st : rec.steps) {
    CountBoundSample q;
    q.t = st.t;
    q.N = st.moments.N;
    if (support_edge)
      q.support_bound = m0.A / (*support_edge + st.t * (p.n0 - 6.0));
    const double K = cm * std::exp(st.t) * fit.prefactor * (1.0 + gflat);
    const double d = fit.rate * std::exp(-st.t);
    q.positivity_bound = positivity_root(m0.A, K, kappa, d);
    q.gamma_bar = st.gamma_bar;
    q.gamma_bar_bound = q.N > 0 ? out.gamma_constant * gflat / q.N
                                : std::numeric_limits<double>::infinity();
    if (q.support_bound) out.support_ok = out.support_ok && q.N >= *q.support_bound;
    out.positivity_ok = out.positivity_ok && q.N >= q.positivity_bound;
    out.gamma_ok = out.gamma_ok && q.gamma_bar <= q.gamma_bar_bound;
    out.samples.push_back(q);
  }
  return out;
}

// ---------------------------------------------------------------------------

double energy_distance(const SimState& f, const SimState& g, const ModelParams& p) {
  f.check_shape(p);
  g.check_shape(p);
  const double da = p.grid.delta_a;
  double acc = 0.0;
  for (int n = 2; n <= p.n0; ++n) {
    const auto x = f.cls(n);
    const auto y = g.cls(n);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      s += p.grid.weight(i) * std::exp(-static_cast<double>(i) * da) * d * d;
    }
    acc += n * s;
  }
  const double dn = evaluate_moments(f, p).N - evaluate_moments(g, p).N;
  return acc + dn * dn;
}

namespace {

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0)) throw NumericalError("regression: degenerate abscissae");
  return (n * sxy - sx * sy) / den;
}

}  // namespace

StabilityReport stability_experiment(const SimState& g, const SimState& bump,
                                     const std::vector<double>& deltas, double t_final,
                                     const StepperConfig& cfg, const ModelParams& p) {
  if (deltas.empty()) throw ContractError("stability needs at least one delta");
  StabilityReport rep;
  const auto base = run_simulation(g, t_final, cfg, p);
  if (!base.completed()) throw AdmissibilityError("reference run stopped: " + base.message);
  for (double delta : deltas) {
    SimState h = g;
    for (std::size_t i = 0; i < h.f.size(); ++i) h.f[i] += delta * bump.f[i];
    const auto pert = run_simulation(h, t_final, cfg, p);
    if (!pert.completed()) throw AdmissibilityError("perturbed run stopped: " + pert.message);
    StabilityRun run;
    run.delta = delta;
    const std::size_t ns = std::min(base.snapshots.size(), pert.snapshots.size());
    for (std::size_t j = 0; j < ns; ++j) {
      run.t.push_back(base.snapshots[j].time - g.time);
      run.energy.push_back(energy_distance(base.snapshots[j], pert.snapshots[j], p));
    }
    std::vector<double> le;
    for (double e : run.energy) le.push_back(std::log(e));
    run.slope = ls_slope(run.t, le);
    // largest local log-growth rate; a Gronwall constant for the sampled E
    run.envelope = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < run.t.size(); ++j)
      run.envelope = std::max(run.envelope, (le[j] - le[j - 1]) / (run.t[j] - run.t[j - 1]));
    rep.runs.push_back(std::move(run));
  }
  auto spread = [&](auto field) {
    double lo = field(rep.runs.front()), hi = lo, mean = 0;
    for (const auto& r : rep.runs) {
      lo = std::min(lo, field(r));
      hi = std::max(hi, field(r));
      mean += field(r);
    }
    mean /= static_cast<double>(rep.runs.size());
    return (hi - lo) / std::abs(mean);
  };
  rep.slope_spread = spread([](const StabilityRun& r) { return r.slope; });
  rep.c_hat_spread = spread([](const StabilityRun& r) { return r.envelope; });
  rep.c_hat = rep.runs.front().envelope;
  for (const auto& r : rep.runs) rep.c_hat = std::max(rep.c_hat, r.envelope);
  for (const auto& r : rep.runs)
    for (std::size_t j = 0; j < r.t.size(); ++j)
      if (r.energy[j] > std::exp(rep.c_hat * r.t[j]) * r.energy[0] * (1.0 + 1e-12))
        rep.envelope_ok = false;
  return rep;
}

// ---------------------------------------------------------------------------

LewisFit lewis_means(const SimState& s, const ModelParams& p, double mass_floor, int window_lo,
                     int window_hi) {
  const auto m = class_integrals(s, p);
  const auto ma = class_area_integrals(s, p);
  LewisFit out;
  out.window_lo = window_lo;
  out.window_hi = window_hi < 0 ? p.n0 - 2 : window_hi;
  std::vector<double> x, y;
  for (int n = 2; n <= p.n0; ++n) {
    const std::size_t r = ModelParams::row(n);
    if (!(m[r] > mass_floor)) continue;
    const double mean = ma[r] / m[r];
    out.classes.push_back(n);
    out.means.push_back(mean);
    if (n >= out.window_lo && n <= out.window_hi) {
      x.push_back(n - 6.0);
      y.push_back(mean);
    }
  }
  if (x.size() >= 2) {
    out.slope = ls_slope(x, y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    out.intercept = (my - out.slope * mx) / static_cast<double>(x.size());
    out.fitted = true;
  }
  return out;
}

}  // namespace graink
