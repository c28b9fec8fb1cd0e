#include "spinpump/levmar.hpp"

#include <cmath>

namespace spinpump {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& residual,
                                 const Eigen::VectorXd& params) {
  const double rel = std::cbrt(std::numeric_limits<double>::epsilon());
  const Eigen::VectorXd r0 = residual(params);
  Eigen::MatrixXd j(r0.size(), params.size());
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    const double h = rel * std::max(std::abs(params(k)), 1.0);
    Eigen::VectorXd lo = params, hi = params;
    lo(k) -= h;
    hi(k) += h;
    j.col(k) = (residual(hi) - residual(lo)) / (2.0 * h);
  }
  return j;
}

LevMarResult levmar_fit(const ResidualFn& residual, const Eigen::VectorXd& p0,
                        const LevMarOptions& options,
                        const JacobianFn& jacobian) {
  LevMarResult out;
  Eigen::VectorXd p = p0;
  Eigen::VectorXd r = residual(p);
  double cost = r.squaredNorm();
  double lambda = options.initial_lambda;
  int plateau = 0;

  Eigen::MatrixXd j;
  for (out.iterations = 0; out.iterations < options.max_iterations;
       ++out.iterations) {
    j = jacobian ? jacobian(p) : numeric_jacobian(residual, p);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    const Eigen::VectorXd diag =
        jtj.diagonal().cwiseMax(1e-30 * jtj.diagonal().maxCoeff() + 1e-300);

    Eigen::VectorXd dp;
    bool accepted = false;
    const double cost_before = cost;
    while (lambda <= options.max_lambda) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      dp = a.ldlt().solve(-g);
      const Eigen::VectorXd p_new = p + dp;
      const Eigen::VectorXd r_new = residual(p_new);
      const double cost_new = r_new.squaredNorm();
      if (std::isfinite(cost_new) && cost_new < cost) {
        p = p_new;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda * options.lambda_down, 1e-12);
        accepted = true;
        break;
      }
      lambda *= options.lambda_up;
    }
    if (!accepted) {
      // No representable damped step improves the cost: we are at a local
      // minimum to working precision.
      out.converged = true;
      break;
    }

    double step_rel = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      step_rel = std::max(step_rel,
                          std::abs(dp(k)) / std::max(std::abs(p(k)), 1.0));
    }
    if (step_rel < options.param_tol) {
      out.converged = true;
      break;
    }
    // Cost plateau: two consecutive negligible improvements mean the fit is
    // done even when a parameter ridge runs to infinity (degenerate models
    // keep crawling with O(1) relative steps).
    plateau = (cost_before - cost) < 1e-12 * (cost + 1e-300) ? plateau + 1 : 0;
    if (plateau >= 2) {
      out.converged = true;
      break;
    }
  }

  out.params = p;
  out.residual_norm = std::sqrt(cost);

  // Covariance through an SVD of the final Jacobian.
  j = jacobian ? jacobian(p) : numeric_jacobian(residual, p);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeThinV);
  Eigen::VectorXd sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double clamp = std::max(smax, 1.0) * 1e-12;
  out.ill_conditioned = sv.size() && (sv(sv.size() - 1) < 1e-8 * smax);
  const Eigen::Index m = r.size(), n = p.size();
  const double dof = std::max<Eigen::Index>(m - n, 1);
  const double s2 = cost / static_cast<double>(dof);
  Eigen::VectorXd inv2(sv.size());
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    const double s = std::max(sv(k), clamp);
    inv2(k) = 1.0 / (s * s);
  }
  out.covariance =
      s2 * svd.matrixV() * inv2.asDiagonal() * svd.matrixV().transpose();
  out.sigma = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace spinpump
