#pragma once

#include <Eigen/Dense>

#include "graink/kinetic.hpp"

namespace graink {

Eigen::MatrixXd collision_matrix(const ModelParams& p);
Eigen::MatrixXd gain_matrix(const ModelParams& p);

/// exp(theta * Q) for a Metzler generator Q (non-negative off-diagonal).
///
/// Uniformised Taylor series with scaling and squaring: every partial sum and
/// every squaring is entrywise non-negative, so the result is too.
Eigen::MatrixXd metzler_expm(const Eigen::MatrixXd& Q, double theta);

/// exp(theta J) with a one-entry cache; theta repeats within a step.
class CollisionPropagator {
 public:
  explicit CollisionPropagator(const ModelParams& p);

  const Eigen::MatrixXd& operator()(double theta);
  const Eigen::MatrixXd& generator() const { return J_; }

 private:
  Eigen::MatrixXd J_;
  Eigen::MatrixXd cached_;
  double cached_theta_ = -1.0;
};

/// F <- E F over all nodes (the matrix-panel product).
void apply_columnwise(const Eigen::MatrixXd& E, SimState& s);

SimState collision_propagate(const SimState& s, double theta, const ModelParams& p);

}  // namespace graink
