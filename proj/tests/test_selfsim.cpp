#include <doctest.h>

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "graink/errors.hpp"
#include "graink/propagator.hpp"
#include "graink/selfsim.hpp"
#include "support.hpp"

using namespace graink;

namespace {

struct Oracle {
  double gamma = 0;
  Eigen::VectorXd phi;
};

// Independent solve at a higher cap: dense LU for Phi(Gamma) and a secant on
// Gamma Gamma_D(Phi) - Gamma_N, started next to the candidate.
Oracle dense_oracle(const SelfSimInput& in, int cap, double start) {
  const auto p = graink::testing::model(in.beta, cap, 1.0, 2);
  const Eigen::MatrixXd J = collision_matrix(p);
  const auto K = J.rows();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
  double gn = 0;
  for (int n = 2; n <= 5; ++n) {
    b(n - 2) = (6.0 - n) * in.boundary[n - 2];
    gn += (n - 6.0) * (n - 6.0) * in.boundary[n - 2];
  }
  Eigen::VectorXd w(K);
  for (Eigen::Index r = 0; r < K; ++r) w(r) = static_cast<double>(r + 2);
  auto phi_of = [&](double G) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(K, K) + G * J;
    return Eigen::VectorXd(A.partialPivLu().solve(b));
  };
  auto r = [&](double G) {
    const Eigen::VectorXd x = phi_of(G);
    const double gd = -w.dot(J * x);
    return G * gd - gn;
  };
  double x0 = start * (1 - 1e-4), x1 = start * (1 + 1e-4);
  double f0 = r(x0), f1 = r(x1);
  for (int it = 0; it < 100 && std::abs(x1 - x0) > 1e-15 * x1; ++it) {
    const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = r(x1);
  }
  return {x1, phi_of(x1)};
}

}  // namespace

TEST_CASE("Lewis asymptote") {
  auto [b, c] = lewis_asymptote(1.0, 1.0);
  CHECK(b == 0.5);
  CHECK(c == -1.5);
  for (double beta : {0.5, 1.0, 1.5}) {
    auto [b0, c0] = lewis_asymptote(beta, 0.0);
    CHECK(b0 == 1.0);
    CHECK(c0 == 2 * beta + 1);
  }
  CHECK_THROWS_AS(lewis_asymptote(1.0, -0.1), ContractError);
}

TEST_CASE("trivial input") {
  SelfSimInput in;
  const auto r = selfsim_moments(in);
  CHECK(r.trivial);
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  for (double v : r.phi) CHECK(v == 0.0);
}

TEST_CASE("input validation") {
  SelfSimInput in;
  in.boundary = {1, 0, 0, 0};
  in.beta = 2.0;
  CHECK_THROWS_AS(selfsim_moments(in), ContractError);
  in.beta = 1.0;
  in.boundary = {-1, 0, 0, 0};
  CHECK_THROWS_AS(selfsim_moments(in), ContractError);
  in.boundary = {1, 0, 0, 0};
  in.cap = 4;
  CHECK_THROWS_AS(selfsim_moments(in), ContractError);
}

TEST_CASE("beta = 1, phi_2(0) = 1") {
  SelfSimInput in;
  in.boundary = {1, 0, 0, 0};
  const auto r = selfsim_moments(in);
  REQUIRE(r.converged);
  CHECK_FALSE(r.trivial);
  CHECK(r.gamma > 0.0);
  CHECK(r.relation_residual < 1e-10);
  CHECK(r.consistency_residual < 1e-10);
  CHECK(r.fixed_point_residual < 1e-10);
  CHECK(r.gamma_n == 16.0);
  CHECK(r.gamma * r.gamma_d == doctest::Approx(r.gamma_n).epsilon(1e-10));
  CHECK(std::accumulate(r.phi.begin(), r.phi.end(), 0.0) == doctest::Approx(4.0).epsilon(1e-10));
  // the candidate has a negative class-2 moment
  CHECK(r.phi[0] < 0.0);
  CHECK_FALSE(r.admissible);
  // no pole sits on or above the root
  for (double q : r.poles) CHECK(q < r.gamma);

  const auto o = dense_oracle(in, 2 * in.cap, r.gamma);
  CHECK(std::abs(o.gamma - r.gamma) <= 1e-8 * r.gamma);
  double mx = 0, d = 0;
  for (std::size_t k = 0; k < r.phi.size(); ++k) {
    mx = std::max(mx, std::abs(r.phi[k]));
    d = std::max(d, std::abs(r.phi[k] - o.phi(static_cast<Eigen::Index>(k))));
  }
  CHECK(d <= 1e-8 * mx);
  CHECK(cap_sensitivity(in) < 1e-8);

  auto [b, c] = lewis_asymptote(1.0, r.gamma);
  CHECK(b == 1.0 / (r.gamma + 1.0));
  CHECK(c == b * (3.0 - 6.0 * r.gamma));
}

TEST_CASE("other boundary data obey the consistency identity") {
  SelfSimInput in;
  in.boundary = {0.2, 0.5, 0.1, 1.0};
  in.beta = 0.7;
  const auto r = selfsim_moments(in);
  if (r.converged) {
    const double sb = 4 * 0.2 + 3 * 0.5 + 2 * 0.1 + 1 * 1.0;
    CHECK(std::accumulate(r.phi.begin(), r.phi.end(), 0.0) == doctest::Approx(sb).epsilon(1e-10));
    CHECK(r.relation_residual < 1e-10);
  } else {
    CHECK(r.phi.empty());
  }
}

TEST_CASE("damped alternation reports its history") {
  SelfSimInput in;
  in.boundary = {1, 0, 0, 0};
  in.method = SelfSimMethod::damped;
  in.max_iter = 40;
  const auto r = selfsim_moments(in);
  CHECK_FALSE(r.residual_history.empty());
  if (!r.converged) CHECK(r.iterations <= in.max_iter);
}
