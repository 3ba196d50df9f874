#include "graink/propagator.hpp"

#include <cmath>
#include <string>

#include "graink/errors.hpp"

namespace graink {

using RowPanel = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd gain_matrix(const ModelParams& p) {
  const Eigen::Index K = static_cast<Eigen::Index>(p.num_classes());
  const double b = p.beta;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(K, K);
  G(0, 1) = 3.0 * (b + 1.0);
  for (Eigen::Index r = 1; r + 1 < K; ++r) {
    const double n = static_cast<double>(r + 2);
    G(r, r + 1) = (b + 1.0) * (n + 1.0);
    G(r, r - 1) = b * (n - 1.0);
  }
  G(K - 1, K - 2) = b * (p.n0 - 1.0);
  return G;
}

Eigen::MatrixXd collision_matrix(const ModelParams& p) {
  Eigen::MatrixXd J = gain_matrix(p);
  const auto u = relaxation_constants(p);
  for (Eigen::Index r = 0; r < J.rows(); ++r) J(r, r) -= u[static_cast<std::size_t>(r)];
  return J;
}

Eigen::MatrixXd metzler_expm(const Eigen::MatrixXd& Q, double theta) {
  if (!std::isfinite(theta) || theta < 0.0)
    throw ContractError("propagator exponent must be finite and non-negative");
  const Eigen::Index K = Q.rows();
  if (theta == 0.0) return Eigen::MatrixXd::Identity(K, K);

  double c = 0.0;
  for (Eigen::Index i = 0; i < K; ++i) c = std::max(c, -Q(i, i));
  Eigen::MatrixXd B = theta * (Q + c * Eigen::MatrixXd::Identity(K, K));

  const double norm = B.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  B /= std::ldexp(1.0, squarings);

  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(K, K);
  Eigen::MatrixXd term = X;
  bool converged = false;
  for (int m = 1; m <= 40; ++m) {
    term = (term * B) / static_cast<double>(m);
    X += term;
    if (term.maxCoeff() <= 1e-18 * X.maxCoeff()) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NumericalError("Taylor series did not converge (scaled norm " +
                         std::to_string(B.cwiseAbs().colwise().sum().maxCoeff()) + ")");
  X *= std::exp(-c * theta / std::ldexp(1.0, squarings));
  for (int k = 0; k < squarings; ++k) X = X * X;
  if (!X.allFinite())
    throw NumericalError("propagator not finite (theta " + std::to_string(theta) +
                         ", squarings " + std::to_string(squarings) + ")");
  return X;
}

CollisionPropagator::CollisionPropagator(const ModelParams& p) : J_(collision_matrix(p)) {}

const Eigen::MatrixXd& CollisionPropagator::operator()(double theta) {
  if (theta != cached_theta_) {
    cached_ = metzler_expm(J_, theta);
    cached_theta_ = theta;
  }
  return cached_;
}

void apply_columnwise(const Eigen::MatrixXd& E, SimState& s) {
  const auto K = static_cast<Eigen::Index>(s.classes);
  const auto n = static_cast<Eigen::Index>(s.nodes);
  if (E.rows() != K || E.cols() != K) throw ContractError("propagator size mismatch");
  Eigen::Map<RowPanel> F(s.f.data(), K, n);
  RowPanel out(K, n);
  out.noalias() = E * F;
  F = out;
}

SimState collision_propagate(const SimState& s, double theta, const ModelParams& p) {
  s.check_shape(p);
  SimState out = s;
  if (theta == 0.0) return out;
  apply_columnwise(metzler_expm(collision_matrix(p), theta), out);
  return out;
}

}  // namespace graink
