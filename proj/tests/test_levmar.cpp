#include <doctest.h>

#include <cmath>

#include "spinpump/fit.hpp"
#include "spinpump/levmar.hpp"

using namespace spinpump;

TEST_CASE("exact recovery of an exponential model") {
  Eigen::VectorXd x(30), y(30);
  const double a_true = 3.5, k_true = 0.8;
  for (int i = 0; i < 30; ++i) {
    x(i) = 0.1 * i;
    y(i) = a_true * std::exp(-k_true * x(i));
  }
  auto resid = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(x.size());
    for (int i = 0; i < x.size(); ++i) {
      r(i) = p(0) * std::exp(-p(1) * x(i)) - y(i);
    }
    return r;
  };
  Eigen::VectorXd p0(2);
  p0 << 1.0, 0.2;
  const LevMarResult res = levmar_fit(resid, p0);
  CHECK(res.converged);
  CHECK(res.params(0) == doctest::Approx(a_true).epsilon(1e-8));
  CHECK(res.params(1) == doctest::Approx(k_true).epsilon(1e-8));
  CHECK(res.residual_norm < 1e-8);
}

TEST_CASE("numeric jacobian matches the analytic one") {
  auto resid = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(2);
    r(0) = p(0) * p(0) + 2.0 * p(1);
    r(1) = std::sin(p(0)) * p(1);
    return r;
  };
  Eigen::VectorXd p(2);
  p << 1.3, -0.7;
  const Eigen::MatrixXd j = numeric_jacobian(resid, p);
  CHECK(j(0, 0) == doctest::Approx(2.0 * p(0)).epsilon(1e-8));
  CHECK(j(0, 1) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(j(1, 0) == doctest::Approx(std::cos(p(0)) * p(1)).epsilon(1e-8));
  CHECK(j(1, 1) == doctest::Approx(std::sin(p(0))).epsilon(1e-8));
}

TEST_CASE("degenerate parameter pair is flagged ill-conditioned") {
  // model a + b with only the sum identifiable
  Eigen::VectorXd y(10);
  for (int i = 0; i < y.size(); ++i) y(i) = 2.0 + 1e-3 * ((i % 2) ? 1 : -1);
  auto resid = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(y.size());
    for (int i = 0; i < y.size(); ++i) r(i) = p(0) + p(1) - y(i);
    return r;
  };
  Eigen::VectorXd p0(2);
  p0 << 0.3, 0.4;
  const LevMarResult res = levmar_fit(resid, p0);
  CHECK(res.converged);
  CHECK(res.ill_conditioned);
  CHECK(res.params(0) + res.params(1) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(res.sigma(0) > 1.0);  // inflated along the flat direction
}

TEST_CASE("regularized incomplete beta against reference values") {
  CHECK(regularized_incomplete_beta(2.5, 3.0, 0.4) ==
        doctest::Approx(0.4123610068859569).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(0.5, 0.5, 0.25) ==
        doctest::Approx(0.33333333333333337).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(4.5, 297.0, 0.01) ==
        doctest::Approx(0.26058145781538933).epsilon(1e-11));
  CHECK(regularized_incomplete_beta(150.0, 150.0, 0.6) ==
        doctest::Approx(0.9997643939443918).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("F-test p-values against reference values") {
  CHECK(f_test_p_value(5.0, 9.0, 588.0) ==
        doctest::Approx(1.660089069869012e-06).epsilon(1e-9));
  CHECK(f_test_p_value(2.5, 6.0, 1188.0) ==
        doctest::Approx(0.020799051281704076).epsilon(1e-10));
  CHECK(f_test_p_value(0.8, 3.0, 100.0) ==
        doctest::Approx(0.4967250187101039).epsilon(1e-10));
  CHECK(f_test_p_value(0.0, 3.0, 100.0) == 1.0);
}
