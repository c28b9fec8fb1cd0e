#include "spinpump/quantum.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "spinpump/errors.hpp"

namespace spinpump {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

Matrix4c unit_matrix(int i, int j) {
  Matrix4c m = Matrix4c::Zero();
  m(i, j) = 1.0;
  return m;
}

Matrix16c kron4(const Matrix4c& a, const Matrix4c& b) {
  Matrix16c out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out.block<4, 4>(4 * i, 4 * j) = a(i, j) * b;
  return out;
}

Vector16c vectorize(const Matrix4c& m) {
  return Eigen::Map<const Vector16c>(m.data());
}

Matrix4c unvectorize(const Vector16c& v) {
  return Eigen::Map<const Matrix4c>(v.data());
}

// Hermitize and renormalize the trace; cleanup at roundoff scale only.
DensityMatrix finalize_state(const Matrix4c& raw) {
  Matrix4c rho = 0.5 * (raw + raw.adjoint());
  rho /= rho.trace().real();
  return DensityMatrix{rho};
}

double max_abs(const Matrix4c& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

DensityMatrix DensityMatrix::pure(int level) {
  if (level < 1 || level > 4) {
    throw std::out_of_range("DensityMatrix::pure: level must be in 1..4");
  }
  DensityMatrix d;
  d.rho(level - 1, level - 1) = 1.0;
  return d;
}

double DensityMatrix::hermiticity_defect() const {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::trace_defect() const {
  return std::abs(rho.trace() - std::complex<double>(1.0));
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (rho + rho.adjoint()),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool DensityMatrix::is_valid(double herm_tol, double trace_tol,
                             double psd_tol) const {
  return hermiticity_defect() <= herm_tol && trace_defect() <= trace_tol &&
         min_eigenvalue() >= -psd_tol;
}

Eigen::Matrix4d build_rotating_hamiltonian(const SystemParams& p) {
  p.validate();
  Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
  h(0, 0) = -0.5 * p.delta_h;
  h(1, 1) = +0.5 * p.delta_h;
  h(2, 2) = -p.laser_detuning - 0.5 * p.delta_e;
  h(3, 3) = -p.laser_detuning + 0.5 * p.delta_e;
  h(0, 2) = h(2, 0) = p.rabi;
  h(1, 3) = h(3, 1) = p.rabi;
  return h;
}

CollapseSet build_collapse_operators(const SystemParams& p) {
  p.validate();
  const double amp = std::sqrt(p.gamma);
  CollapseSet ops;
  ops.push_back(amp * unit_matrix(0, 2));  // lower trion -> spin down
  ops.push_back(amp * unit_matrix(1, 2));  // lower trion -> spin up
  ops.push_back(amp * unit_matrix(0, 3));  // upper trion -> spin down
  ops.push_back(amp * unit_matrix(1, 3));  // upper trion -> spin up
  if (p.t1_spin) {
    const double flip = std::sqrt(0.5 / *p.t1_spin);
    ops.push_back(flip * unit_matrix(0, 1));
    ops.push_back(flip * unit_matrix(1, 0));
  }
  return ops;
}

Matrix16c build_liouvillian(const Matrix4c& hamiltonian,
                            const CollapseSet& collapse) {
  const Matrix4c id = Matrix4c::Identity();
  Matrix16c l =
      -kI * (kron4(id, hamiltonian) - kron4(hamiltonian.transpose(), id));
  for (const Matrix4c& c : collapse) {
    const Matrix4c cdc = c.adjoint() * c;
    l += kron4(c.conjugate(), c) - 0.5 * kron4(id, cdc) -
         0.5 * kron4(cdc.transpose(), id);
  }
  return l;
}

double liouvillian_trace_defect(const Matrix16c& liouvillian) {
  const Vector16c trace_vec = vectorize(Matrix4c::Identity());
  return (trace_vec.transpose() * liouvillian).cwiseAbs().maxCoeff();
}

DensityMatrix steady_state(const Matrix16c& liouvillian, int population_row) {
  if (population_row < 0 || population_row >= 4) {
    throw std::out_of_range("steady_state: population_row must be in 0..3");
  }
  const int trace_row = 5 * population_row;  // vec index of a diagonal entry

  Eigen::FullPivLU<Matrix16c> rank_lu(liouvillian);
  rank_lu.setThreshold(1e-9);  // pivots below 1e-9 * |max pivot| count as zero
  const int null_dim = 16 - static_cast<int>(rank_lu.rank());
  if (null_dim > 1) throw DegenerateSteadyState(null_dim);
  if (null_dim == 0) {
    throw std::invalid_argument(
        "steady_state: generator has full rank (not trace-preserving?)");
  }

  Matrix16c a = liouvillian;
  a.row(trace_row).setZero();
  for (int k = 0; k < 4; ++k) a(trace_row, 5 * k) = 1.0;  // vec'd diagonal
  Vector16c b = Vector16c::Zero();
  b(trace_row) = 1.0;

  Eigen::FullPivLU<Matrix16c> lu(a);
  if (!lu.isInvertible()) {
    throw std::invalid_argument(
        "steady_state: trace-constrained system is singular");
  }
  return finalize_state(unvectorize(lu.solve(b)));
}

DensityMatrix steady_state(const SystemParams& p) {
  const Matrix4c h = build_rotating_hamiltonian(p);
  return steady_state(build_liouvillian(h, build_collapse_operators(p)));
}

Matrix4c master_equation_rhs(const Matrix4c& hamiltonian,
                             const CollapseSet& collapse, const Matrix4c& rho) {
  Matrix4c d = -kI * (hamiltonian * rho - rho * hamiltonian);
  for (const Matrix4c& c : collapse) {
    const Matrix4c cdc = c.adjoint() * c;
    d += c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
  }
  return d;
}

double stable_timestep(const Matrix4c& hamiltonian, const CollapseSet& collapse,
                       double margin) {
  double scale = max_abs(hamiltonian);
  for (const Matrix4c& c : collapse) {
    scale = std::max(scale, (c.adjoint() * c).cwiseAbs().maxCoeff());
  }
  if (scale == 0.0) return margin;  // static system, any step works
  return margin / scale;
}

DensityMatrix evolve_to_steady_state(const Matrix4c& hamiltonian,
                                     const CollapseSet& collapse,
                                     const DensityMatrix& rho0, double dt,
                                     double tol, std::uint64_t max_steps) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("evolve_to_steady_state: dt must be > 0");
  }
  if (dt >= stable_timestep(hamiltonian, collapse, 0.1)) {
    throw std::invalid_argument(
        "evolve_to_steady_state: dt too large for the fastest system scale");
  }

  // Matrix representation of the right-hand side, column by column. This is
  // built from the direct master-equation action, not from the Kronecker
  // form used by build_liouvillian.
  Matrix16c gen;
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) {
      gen.col(4 * j + i) =
          vectorize(master_equation_rhs(hamiltonian, collapse, unit_matrix(i, j)));
    }
  }

  // One classical RK4 step of the linear system v' = gen v.
  const Matrix16c id = Matrix16c::Identity();
  const Matrix16c z = dt * gen;
  Matrix16c step =
      id + z * (id + z * (id / 2.0 + z * (id / 6.0 + z / 24.0)));

  const Vector16c v0 = vectorize(rho0.rho);
  Vector16c v_prev = v0;
  std::uint64_t steps = 1;
  for (;;) {
    Vector16c v = step * v0;
    // Trace renormalization: roundoff in the step operator perturbs the
    // unit eigenvalue of the stationary mode, which would otherwise decay
    // the whole state over very long horizons.
    const std::complex<double> tr = v(0) + v(5) + v(10) + v(15);
    if (std::abs(tr) > 1e-300) v /= tr;
    const double residual = (gen * v).cwiseAbs().maxCoeff();
    const double state_change = (v - v_prev).cwiseAbs().maxCoeff();
    // Stop once the residual criterion holds and doubling the horizon no
    // longer moves the state (slow modes fully decayed).
    if (residual < tol && state_change < 1e-12) {
      return finalize_state(unvectorize(v));
    }
    if (steps >= max_steps) {
      throw NoConvergence(
          "evolve_to_steady_state: residual " + std::to_string(residual) +
          " after " + std::to_string(steps) + " steps");
    }
    v_prev = v;
    step = (step * step).eval();
    steps = steps > (max_steps >> 1) ? max_steps : steps * 2;
  }
}

double population(const DensityMatrix& rho, int level) {
  if (level < 1 || level > 4) {
    throw std::out_of_range("population: level must be in 1..4");
  }
  return rho.rho(level - 1, level - 1).real();
}

std::string format_matrix(const Eigen::MatrixXcd& m) {
  std::string out;
  char buf[96];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g%+.17gj", m(i, j).real(),
                    m(i, j).imag());
      out += buf;
      out += (j + 1 < m.cols()) ? ' ' : '\n';
    }
  }
  return out;
}

}  // namespace spinpump
