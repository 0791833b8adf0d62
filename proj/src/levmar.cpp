#include "pumpkit/levmar.hpp"

#include <cmath>

namespace pumpkit::levmar {

namespace {

void numeric_jacobian(const ResidualFn& residual, const Eigen::VectorXd& p,
                      const Eigen::VectorXd& r0, double step,
                      Eigen::MatrixXd& jac) {
  const auto n = p.size();
  Eigen::VectorXd pj = p;
  Eigen::VectorXd rj(r0.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = step * std::max(1.0, std::abs(p[j]));
    pj[j] = p[j] + h;
    residual(pj, rj);
    jac.col(j) = (rj - r0) / h;
    pj[j] = p[j];
  }
}

}  // namespace

Result minimize(const ResidualFn& residual, Eigen::VectorXd p,
                std::size_t n_residuals, const JacobianFn& jacobian,
                const Options& opts) {
  const auto n = p.size();
  const auto m = static_cast<Eigen::Index>(n_residuals);

  Eigen::VectorXd r(m);
  residual(p, r);
  double cost = 0.5 * r.squaredNorm();

  Eigen::MatrixXd jac(m, n);
  double lambda = opts.initial_lambda;

  Result out;
  out.converged = false;

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    if (jacobian)
      jacobian(p, jac);
    else
      numeric_jacobian(residual, p, r, opts.fd_step, jac);

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;

    if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tol) {
      out.converged = true;
      break;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      const Eigen::VectorXd p_try = p + step;
      Eigen::VectorXd r_try(m);
      residual(p_try, r_try);
      const double cost_try = 0.5 * r_try.squaredNorm();
      if (std::isfinite(cost_try) && cost_try < cost) {
        const double rel_change =
            (cost - cost_try) / std::max(cost, 1e-300);
        p = p_try;
        r = r_try;
        cost = cost_try;
        lambda = std::max(lambda * 0.3, 1e-14);
        accepted = true;
        if (rel_change < opts.relative_cost_tol) out.converged = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e14) break;
    }
    if (!accepted || out.converged) {
      // no downhill step found at any damping: local optimum
      if (!accepted) out.converged = true;
      break;
    }
  }

  // covariance from the residual-scaled normal matrix at the optimum
  if (jacobian)
    jacobian(p, jac);
  else
    numeric_jacobian(residual, p, r, opts.fd_step, jac);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  const double dof = static_cast<double>(m > n ? m - n : 1);
  const double s2 = 2.0 * cost / dof;
  out.covariance =
      s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();

  out.params = std::move(p);
  out.cost = cost;
  out.iterations = iter;
  return out;
}

}  // namespace pumpkit::levmar
