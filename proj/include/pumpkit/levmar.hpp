#pragma once

#include <Eigen/Dense>
#include <functional>

namespace pumpkit::levmar {

// Residual callback: fills r (size m) for parameter vector p (size n).
using ResidualFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
// Optional analytic Jacobian callback: fills J (m x n).
using JacobianFn = std::function<void(const Eigen::VectorXd&, Eigen::MatrixXd&)>;

struct Options {
  int max_iterations = 500;
  double relative_cost_tol = 1e-12;  // stop when accepted steps change cost less
  double gradient_tol = 1e-14;
  double initial_lambda = 1e-3;
  double fd_step = 1e-7;  // forward-difference step when no Jacobian is given
};

struct Result {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // residual-scaled (J^T J)^-1 at the optimum
  double cost = 0.0;           // 0.5 * ||r||^2
  int iterations = 0;
  bool converged = false;
};

// Damped Gauss-Newton (Levenberg-Marquardt) minimizer of 0.5*||r(p)||^2.
// Accepted steps always decrease the cost; lambda adapts multiplicatively.
Result minimize(const ResidualFn& residual, Eigen::VectorXd p0,
                std::size_t n_residuals, const JacobianFn& jacobian = nullptr,
                const Options& opts = {});

}  // namespace pumpkit::levmar
