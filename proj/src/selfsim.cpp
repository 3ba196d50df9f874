#include "graink/selfsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "graink/errors.hpp"
#include "graink/kinetic.hpp"
#include "graink/propagator.hpp"

namespace graink {

void SelfSimInput::validate() const {
  for (double v : boundary)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ContractError("boundary values must be finite and non-negative");
  if (!(beta > 0.0 && beta < 2.0)) throw ContractError("beta must lie in (0, 2)");
  if (cap < 8) throw ContractError("class cap must be at least 8");
  if (!(tol > 0.0)) throw ContractError("tolerance must be positive");
  if (max_iter < 1) throw ContractError("iteration cap must be positive");
}

namespace {

struct MomentSystem {
  Eigen::MatrixXd J;
  Eigen::VectorXd b, d;          // d symmetrises J: diag(d) J diag(d)^-1
  Eigen::VectorXd lambda;        // eigenvalues of J
  Eigen::MatrixXd Q;             // orthonormal eigenvectors of the symmetrised J
  Eigen::VectorXd qb;            // Q^T diag(d) b
  Eigen::VectorXd weights_n;     // n, by row
  double gamma_n = 0;

  explicit MomentSystem(const SelfSimInput& in) {
    ModelParams p;
    p.beta = in.beta;
    p.n0 = in.cap;
    p.grid.num_nodes = 2;
    J = collision_matrix(p);
    const Eigen::Index K = J.rows();
    b = Eigen::VectorXd::Zero(K);
    weights_n.resize(K);
    for (Eigen::Index r = 0; r < K; ++r) weights_n(r) = static_cast<double>(r + 2);
    for (int n = 2; n <= 5; ++n) {
      const double phi0 = in.boundary[static_cast<std::size_t>(n - 2)];
      b(n - 2) = (6.0 - n) * phi0;
      gamma_n += (n - 6.0) * (n - 6.0) * phi0;
    }
    d.resize(K);
    d(0) = 1.0;
    for (Eigen::Index r = 0; r + 1 < K; ++r) d(r + 1) = d(r) * std::sqrt(J(r, r + 1) / J(r + 1, r));
    Eigen::MatrixXd S = d.asDiagonal() * J * d.cwiseInverse().asDiagonal();
    S = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw NumericalError("eigen-decomposition failed");
    lambda = es.eigenvalues();
    Q = es.eigenvectors();
    qb = Q.transpose() * (d.asDiagonal() * b);
  }

  // fast solve of (I + Gamma J) Phi = b through the spectral form
  Eigen::VectorXd phi_spectral(double g) const {
    Eigen::VectorXd y = qb;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) /= 1.0 + g * lambda(i);
    return d.cwiseInverse().asDiagonal() * (Q * y);
  }

  Eigen::VectorXd phi_lu(double g) const {
    const Eigen::Index K = J.rows();
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(K, K) + g * J;
    return A.partialPivLu().solve(b);
  }

  double gamma_d(const Eigen::VectorXd& phi) const { return -weights_n.dot(J * phi); }

  // Gamma J Phi = b - Phi, so Gamma Gamma_D = sum n (Phi - b); no cancellation at large Gamma
  double residual(double g, bool exact) const {
    const Eigen::VectorXd phi = exact ? phi_lu(g) : phi_spectral(g);
    return weights_n.dot(phi - b) - gamma_n;
  }

  std::vector<double> poles() const {
    std::vector<double> out;
    const double scale = lambda.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
      if (lambda(i) < -1e-12 * scale) out.push_back(-1.0 / lambda(i));
    std::sort(out.begin(), out.end());
    return out;
  }
};

double bisect(const MomentSystem& sys, double lo, double hi, double rlo, int& iters) {
  for (iters = 0; iters < 400; ++iters) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double rm = sys.residual(mid, true);
    if (rm == 0.0) return mid;
    if ((rm < 0) == (rlo < 0)) {
      lo = mid;
      rlo = rm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void finish(const MomentSystem& sys, SelfSimResult& res) {
  const Eigen::VectorXd phi = sys.phi_lu(res.gamma);
  res.phi.assign(phi.data(), phi.data() + phi.size());
  res.gamma_n = sys.gamma_n;
  res.gamma_d = sys.gamma_d(phi);
  if (!(res.gamma_d > 0.0))
    throw DegenerateWeightError("Gamma_D of the moment vector is " + std::to_string(res.gamma_d));
  res.admissible = phi.minCoeff() >= 0.0;
  const double bmax = sys.b.cwiseAbs().maxCoeff();
  res.relation_residual = (phi + res.gamma * (sys.J * phi) - sys.b).cwiseAbs().maxCoeff() / bmax;
  res.consistency_residual = std::abs(phi.sum() - sys.b.sum()) / std::abs(sys.b.sum());
  res.fixed_point_residual = std::abs(res.gamma - res.gamma_n / res.gamma_d) / res.gamma;
}

SelfSimResult solve_bracketed(const MomentSystem& sys, const SelfSimInput& in) {
  SelfSimResult res;
  res.poles = sys.poles();
  // pole-free intervals, top one first; (p_top, inf) is scanned on a log scale
  std::vector<std::pair<double, double>> intervals;
  double upper = std::numeric_limits<double>::infinity();
  for (auto it = res.poles.rbegin(); it != res.poles.rend(); ++it) {
    intervals.emplace_back(*it, upper);
    upper = *it;
  }
  intervals.emplace_back(0.0, upper);

  const int samples = 256;
  for (const auto& [a, bnd] : intervals) {
    std::vector<double> xs;
    if (std::isinf(bnd)) {
      const double base = a > 0 ? a : 1.0;
      for (int k = 0; k <= samples; ++k)
        xs.push_back(a + base * std::pow(10.0, -10.0 + 18.0 * k / samples));
      std::reverse(xs.begin(), xs.end());
    } else {
      // clustered at both ends, where the residual blows up
      for (int k = samples - 1; k >= 1; --k)
        xs.push_back(a + (bnd - a) * 0.5 * (1.0 - std::cos(M_PI * k / samples)));
    }
    double prev_x = xs.front();
    double prev_r = sys.residual(prev_x, false);
    res.residual_history.push_back(prev_r);
    for (std::size_t k = 1; k < xs.size(); ++k) {
      const double x = xs[k];
      const double r = sys.residual(x, false);
      res.residual_history.push_back(r);
      if (std::isfinite(r) && std::isfinite(prev_r) && (r < 0) != (prev_r < 0)) {
        // x < prev_x; refine with the exact solve
        const double rlo = sys.residual(x, true);
        const double rhi = sys.residual(prev_x, true);
        if ((rlo < 0) == (rhi < 0)) {
          prev_x = x;
          prev_r = r;
          continue;
        }
        res.gamma = bisect(sys, x, prev_x, rlo, res.iterations);
        res.converged = true;
        finish(sys, res);
        if (res.fixed_point_residual > in.tol) res.converged = false;
        return res;
      }
      prev_x = x;
      prev_r = r;
    }
  }
  return res;
}

SelfSimResult solve_damped(const MomentSystem& sys, const SelfSimInput& in) {
  SelfSimResult res;
  res.poles = sys.poles();
  double g = in.gamma0;
  for (int k = 1; k <= in.max_iter; ++k) {
    res.iterations = k;
    const Eigen::VectorXd phi = sys.phi_lu(g);
    const double gd = sys.gamma_d(phi);
    if (!(gd > 0.0)) {
      res.gamma = g;
      return res;  // degenerate step; reported as not converged
    }
    const double next = 0.5 * g + 0.5 * sys.gamma_n / gd;
    const double step = std::abs(next - g);
    res.residual_history.push_back(step);
    g = next;
    if (!std::isfinite(g)) break;
    if (step <= in.tol * std::max(1.0, std::abs(g))) {
      res.gamma = g;
      res.converged = true;
      finish(sys, res);
      return res;
    }
  }
  res.gamma = g;
  return res;
}

}  // namespace

SelfSimResult selfsim_moments(const SelfSimInput& in) {
  in.validate();
  if (std::all_of(in.boundary.begin(), in.boundary.end(), [](double v) { return v == 0.0; })) {
    SelfSimResult res;
    res.phi.assign(static_cast<std::size_t>(in.cap - 1), 0.0);
    res.trivial = res.converged = res.admissible = true;
    return res;
  }
  const MomentSystem sys(in);
  return in.method == SelfSimMethod::bracketed ? solve_bracketed(sys, in) : solve_damped(sys, in);
}

double cap_sensitivity(const SelfSimInput& in) {
  const auto a = selfsim_moments(in);
  SelfSimInput doubled = in;
  doubled.cap = 2 * in.cap;
  const auto b = selfsim_moments(doubled);
  if (!a.converged || !b.converged) throw NumericalError("cap comparison needs converged solves");
  double diff = 0.0, scale = 0.0;
  for (std::size_t r = 0; r < a.phi.size(); ++r) {
    diff = std::max(diff, std::abs(a.phi[r] - b.phi[r]));
    scale = std::max(scale, std::abs(a.phi[r]));
  }
  return scale > 0 ? diff / scale : diff;
}

std::pair<double, double> lewis_asymptote(double beta, double gamma) {
  if (!(gamma >= 0.0)) throw ContractError("gamma must be non-negative");
  const double b = 1.0 / (gamma + 1.0);
  return {b, b * ((2.0 * beta + 1.0) - 6.0 * gamma)};
}

}  // namespace graink
