#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "spinpump/system.hpp"

namespace spinpump {

using Matrix4c = Eigen::Matrix4cd;
using Matrix16c = Eigen::Matrix<std::complex<double>, 16, 16>;
using Vector16c = Eigen::Matrix<std::complex<double>, 16, 1>;

/// Collapse operators with the rate folded into the amplitude,
/// i.e. each entry is sqrt(rate) * |i><j|.
using CollapseSet = std::vector<Matrix4c>;

/// 4x4 density matrix in the ordered basis
/// (|1> = spin down, |2> = spin up, |3> = lower trion, |4> = upper trion).
struct DensityMatrix {
  Matrix4c rho = Matrix4c::Zero();

  static DensityMatrix pure(int level);  // |level><level|, level in 1..4

  double hermiticity_defect() const;  // max |rho - rho^dagger| elementwise
  double trace_defect() const;        // |tr(rho) - 1|
  double min_eigenvalue() const;      // smallest eigenvalue of (rho+rho^dag)/2
  bool is_valid(double herm_tol = 1e-12, double trace_tol = 1e-12,
                double psd_tol = 1e-10) const;
};

/// Rotating-frame Hamiltonian
///   diag(-dh/2, +dh/2, -D-de/2, -D+de/2) + rabi on (1,3),(3,1),(2,4),(4,2),
/// real symmetric by construction.
Eigen::Matrix4d build_rotating_hamiltonian(const SystemParams& p);

/// Four radiative channels sqrt(gamma)*|g><t| for g in {1,2}, t in {3,4}
/// (each trion decays to both ground states with equal rates), plus two
/// spin-flip channels at rate 1/(2*T1) each when t1_spin is set.
CollapseSet build_collapse_operators(const SystemParams& p);

/// 16x16 generator acting on column-major vectorized density matrices:
///   L = -i(I (x) H - H^T (x) I)
///       + sum_j [ conj(c_j) (x) c_j - (I (x) c_j^dag c_j)/2
///                 - ((c_j^dag c_j)^T (x) I)/2 ].
Matrix16c build_liouvillian(const Matrix4c& hamiltonian,
                            const CollapseSet& collapse);

/// Residual of the trace-preservation identity: max entry of vec(I)^T * L.
double liouvillian_trace_defect(const Matrix16c& liouvillian);

/// Unique stationary density matrix of a trace-preserving generator,
/// obtained by replacing one population row of L with the trace constraint
/// and solving the dense linear system. Trace preservation makes exactly
/// the four population rows (vec indices 0, 5, 10, 15) linearly dependent,
/// so `population_row` selects which of those four is replaced (0..3); the
/// result does not depend on the choice. Throws DegenerateSteadyState when
/// the null space of L has dimension > 1 (rank test with tolerance
/// 1e-9 * ||L||).
DensityMatrix steady_state(const Matrix16c& liouvillian,
                           int population_row = 0);

/// Convenience overload building the Liouvillian from params.
DensityMatrix steady_state(const SystemParams& p);

/// Right-hand side of the master equation,
///   drho/dt = -i[H, rho] + sum_j (c rho c^dag - {c^dag c, rho}/2).
Matrix4c master_equation_rhs(const Matrix4c& hamiltonian,
                             const CollapseSet& collapse, const Matrix4c& rho);

/// Largest timestep satisfying dt * max(|H|, rates) = margin; the evolution
/// precondition requires margin < 0.1.
double stable_timestep(const Matrix4c& hamiltonian, const CollapseSet& collapse,
                       double margin = 0.05);

/// Fixed-step classical 4th-order integration of the master equation from
/// rho0 until max |drho/dt| < tol. The one-step update is linear in rho, so
/// successive step counts are doubled by squaring the step operator; the
/// limit is identical to stepping one dt at a time. Throws NoConvergence
/// once the step count exceeds max_steps, which signals a degenerate or
/// oscillatory residual. Precondition: dt * max(|H|, rates) < 0.1.
DensityMatrix evolve_to_steady_state(const Matrix4c& hamiltonian,
                                     const CollapseSet& collapse,
                                     const DensityMatrix& rho0, double dt,
                                     double tol,
                                     std::uint64_t max_steps = (1ull << 60));

/// Occupation of one level, 1-based. Throws std::out_of_range.
double population(const DensityMatrix& rho, int level);

/// Debug dump: row-major, space-separated "re+imj" pairs, rows on lines.
std::string format_matrix(const Eigen::MatrixXcd& m);

}  // namespace spinpump
