#pragma once

#include <Eigen/Dense>

#include <functional>

namespace spinpump {

struct LevMarOptions {
  int max_iterations = 200;
  double param_tol = 1e-10;  ///< relative step size below which we stop
  double initial_lambda = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double max_lambda = 1e14;
};

struct LevMarResult {
  Eigen::VectorXd params;
  Eigen::VectorXd sigma;       ///< 1-sigma uncertainties from J at the optimum
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;  ///< ||r||_2 at the optimum
  int iterations = 0;
  bool converged = false;
  bool ill_conditioned = false;  ///< near-singular normal matrix; sigma inflated
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Central-difference Jacobian of a residual function.
Eigen::MatrixXd numeric_jacobian(const ResidualFn& residual,
                                 const Eigen::VectorXd& params);

/// Damped Gauss-Newton least squares: minimizes ||residual(p)||^2 from p0
/// with Marquardt diagonal scaling. Deterministic for fixed inputs. The
/// covariance is SSR/(m-n) * (J^T J)^-1 evaluated through an SVD of J;
/// singular directions are clamped, which inflates the corresponding sigmas
/// and sets ill_conditioned.
LevMarResult levmar_fit(const ResidualFn& residual, const Eigen::VectorXd& p0,
                        const LevMarOptions& options = {},
                        const JacobianFn& jacobian = {});

}  // namespace spinpump
