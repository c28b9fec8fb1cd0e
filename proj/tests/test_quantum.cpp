#include <doctest.h>

#include <complex>
#include <random>

#include "spinpump/errors.hpp"
#include "spinpump/quantum.hpp"
#include "spinpump/system.hpp"
#include "spinpump/units.hpp"

using namespace spinpump;

namespace {

SystemParams fig4_params() {
  return SystemParams::from_ghz(23.8, 23.8, 0.0, 1.0, 0.25);
}

Matrix4c complex_h(const SystemParams& p) {
  return build_rotating_hamiltonian(p).cast<std::complex<double>>();
}

SystemParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  return SystemParams::from_ghz(30.0 * u01(rng), 30.0 * u01(rng),
                                -3.0 + 6.0 * u01(rng), 0.05 + 2.8 * u01(rng),
                                0.05 + 0.95 * u01(rng));
}

DensityMatrix oracle_state(const SystemParams& p, int initial_level = 1,
                           double tol = 1e-12) {
  const Matrix4c h = complex_h(p);
  const CollapseSet c = build_collapse_operators(p);
  return evolve_to_steady_state(h, c, DensityMatrix::pure(initial_level),
                                stable_timestep(h, c), tol);
}

}  // namespace

TEST_CASE("hamiltonian: all-zero parameters give the zero matrix") {
  const SystemParams p = SystemParams::from_ghz(0, 0, 0, 0, 0.25);
  CHECK(build_rotating_hamiltonian(p).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hamiltonian: canonical resonance parameters") {
  const Eigen::Matrix4d h = build_rotating_hamiltonian(fig4_params());
  const double gu = units::kTwoPi;  // 1 GHz in rad/ns
  CHECK(h(0, 0) == doctest::Approx(-11.9 * gu).epsilon(1e-12));
  CHECK(h(1, 1) == doctest::Approx(+11.9 * gu).epsilon(1e-12));
  CHECK(h(2, 2) == doctest::Approx(-11.9 * gu).epsilon(1e-12));
  CHECK(h(3, 3) == doctest::Approx(+11.9 * gu).epsilon(1e-12));
  CHECK(h(0, 2) == doctest::Approx(1.0 * gu).epsilon(1e-12));
  CHECK(h(2, 0) == doctest::Approx(1.0 * gu).epsilon(1e-12));
  CHECK(h(1, 3) == doctest::Approx(1.0 * gu).epsilon(1e-12));
  CHECK(h(3, 1) == doctest::Approx(1.0 * gu).epsilon(1e-12));
  CHECK(h(0, 1) == 0.0);
  CHECK(h(0, 3) == 0.0);
  CHECK(h(1, 2) == 0.0);
  CHECK(h(2, 3) == 0.0);
}

TEST_CASE("hamiltonian: direct substitution with detuning") {
  const SystemParams p = SystemParams::from_ghz(23.8, 21.0, 1.5, 0.7, 0.25);
  const Eigen::Matrix4d h = build_rotating_hamiltonian(p);
  const double gu = units::kTwoPi;
  CHECK(h(0, 0) == doctest::Approx(-10.5 * gu).epsilon(1e-12));
  CHECK(h(1, 1) == doctest::Approx(+10.5 * gu).epsilon(1e-12));
  CHECK(h(2, 2) == doctest::Approx(-13.4 * gu).epsilon(1e-12));
  CHECK(h(3, 3) == doctest::Approx(+10.4 * gu).epsilon(1e-12));
}

TEST_CASE("hamiltonian is exactly real symmetric for random parameters") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Matrix4d h = build_rotating_hamiltonian(random_params(rng));
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("parameter validation") {
  SystemParams p = fig4_params();
  p.gamma = 0.0;
  CHECK_THROWS_AS(build_rotating_hamiltonian(p), std::invalid_argument);
  p = fig4_params();
  p.rabi = -1.0;
  CHECK_THROWS_AS(build_collapse_operators(p), std::invalid_argument);
  p = fig4_params();
  p.t1_spin = 0.0;
  CHECK_THROWS_AS(build_collapse_operators(p), std::invalid_argument);
}

TEST_CASE("collapse operators: four radiative channels, rates folded in") {
  const CollapseSet c = build_collapse_operators(fig4_params());
  REQUIRE(c.size() == 4);
  const double gamma = units::ghz_to_angular(0.25);
  for (const auto& op : c) {
    CHECK((op.adjoint() * op).trace().real() ==
          doctest::Approx(gamma).epsilon(1e-12));
  }
  // each trion level decays at total rate 2 gamma
  Matrix4c total = Matrix4c::Zero();
  for (const auto& op : c) total += op.adjoint() * op;
  CHECK(total(2, 2).real() == doctest::Approx(2.0 * gamma).epsilon(1e-12));
  CHECK(total(3, 3).real() == doctest::Approx(2.0 * gamma).epsilon(1e-12));
}

TEST_CASE("collapse operators: spin lifetime adds two flip channels") {
  SystemParams p = fig4_params();
  p.t1_spin = 1000.0;  // 1 us
  const CollapseSet c = build_collapse_operators(p);
  REQUIRE(c.size() == 6);
  CHECK((c[4].adjoint() * c[4]).trace().real() ==
        doctest::Approx(0.5 / 1000.0).epsilon(1e-12));
  CHECK((c[5].adjoint() * c[5]).trace().real() ==
        doctest::Approx(0.5 / 1000.0).epsilon(1e-12));
}

TEST_CASE("liouvillian: empty generator is the zero matrix") {
  CHECK(build_liouvillian(Matrix4c::Zero(), {}).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("liouvillian trace preservation over random draws") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const SystemParams p = random_params(rng);
    const Matrix16c l =
        build_liouvillian(complex_h(p), build_collapse_operators(p));
    CHECK(liouvillian_trace_defect(l) < 1e-10 * l.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("liouvillian annihilates the oracle steady state") {
  const SystemParams p = fig4_params();
  const Matrix16c l =
      build_liouvillian(complex_h(p), build_collapse_operators(p));
  const DensityMatrix rho = oracle_state(p);
  const Vector16c v = Eigen::Map<const Vector16c>(rho.rho.data());
  CHECK((l * v).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("steady state: undriven system without spin flips is degenerate") {
  const SystemParams p = SystemParams::from_ghz(23.8, 23.8, 0.0, 0.0, 0.25);
  const Matrix16c l =
      build_liouvillian(complex_h(p), build_collapse_operators(p));
  CHECK_THROWS_AS(steady_state(l), DegenerateSteadyState);
  try {
    steady_state(l);
  } catch (const DegenerateSteadyState& e) {
    CHECK(e.null_space_dimension() >= 2);
  }
}

TEST_CASE("steady state at the canonical resonance point") {
  const DensityMatrix rho = steady_state(fig4_params());
  CHECK(rho.is_valid());
  CHECK(std::abs(population(rho, 1) - population(rho, 2)) < 1e-10);
  CHECK(std::abs(population(rho, 3) - population(rho, 4)) < 1e-10);
  // populations frozen from the time-evolution oracle
  CHECK(population(rho, 1) == doctest::Approx(0.25757575757576).epsilon(1e-9));
  CHECK(population(rho, 4) == doctest::Approx(0.24242424242424).epsilon(1e-9));
}

TEST_CASE("steady state: opposite detunings swap the trion populations") {
  SystemParams plus = fig4_params().with_detuning_ghz(0.5);
  SystemParams minus = fig4_params().with_detuning_ghz(-0.5);
  const DensityMatrix a = steady_state(plus);
  const DensityMatrix b = steady_state(minus);
  CHECK(std::abs(population(a, 4) - population(b, 3)) < 1e-10);
  CHECK(std::abs(population(a, 3) - population(b, 4)) < 1e-10);
  CHECK(std::abs(population(a, 1) - population(b, 2)) < 1e-10);
}

TEST_CASE("steady state does not depend on the replaced population row") {
  const SystemParams p = fig4_params().with_detuning_ghz(0.7);
  const Matrix16c l =
      build_liouvillian(complex_h(p), build_collapse_operators(p));
  const DensityMatrix ref = steady_state(l, 0);
  for (int row : {1, 2, 3}) {
    const DensityMatrix alt = steady_state(l, row);
    CHECK((ref.rho - alt.rho).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(steady_state(l, 4), std::out_of_range);
}

TEST_CASE("steady state is invariant under a global energy offset") {
  const SystemParams p = fig4_params().with_detuning_ghz(1.1);
  const Matrix4c h = complex_h(p);
  const CollapseSet c = build_collapse_operators(p);
  const DensityMatrix a = steady_state(build_liouvillian(h, c));
  const Matrix4c shifted = h + 17.3 * Matrix4c::Identity();
  const DensityMatrix b = steady_state(build_liouvillian(shifted, c));
  for (int level = 1; level <= 4; ++level) {
    CHECK(std::abs(population(a, level) - population(b, level)) < 1e-10);
  }
}

TEST_CASE("evolution: pure decay drains into the sink state") {
  const Matrix4c h = Matrix4c::Zero();
  Matrix4c op = Matrix4c::Zero();
  op(0, 2) = std::sqrt(units::ghz_to_angular(0.25));
  const CollapseSet c{op};
  const DensityMatrix rho = evolve_to_steady_state(
      h, c, DensityMatrix::pure(3), stable_timestep(h, c), 1e-12);
  CHECK(population(rho, 1) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("evolution matches the direct solve at the canonical point") {
  const DensityMatrix direct = steady_state(fig4_params());
  const DensityMatrix evolved = oracle_state(fig4_params());
  CHECK((direct.rho - evolved.rho).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("evolution limit does not depend on the initial state") {
  const DensityMatrix a = oracle_state(fig4_params(), 1);
  const DensityMatrix b = oracle_state(fig4_params(), 2);
  CHECK((a.rho - b.rho).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("evolution rejects a timestep above the stability margin") {
  const SystemParams p = fig4_params();
  const Matrix4c h = complex_h(p);
  const CollapseSet c = build_collapse_operators(p);
  CHECK_THROWS_AS(evolve_to_steady_state(h, c, DensityMatrix::pure(1),
                                         10.0 * stable_timestep(h, c, 0.1),
                                         1e-10),
                  std::invalid_argument);
}

TEST_CASE("evolution reports no convergence for an impossible tolerance") {
  const SystemParams p = fig4_params();
  const Matrix4c h = complex_h(p);
  const CollapseSet c = build_collapse_operators(p);
  CHECK_THROWS_AS(evolve_to_steady_state(h, c, DensityMatrix::pure(1),
                                         stable_timestep(h, c), 0.0, 1 << 20),
                  NoConvergence);
}

TEST_CASE("oracle equivalence over 50 random draws") {
  std::mt19937_64 rng(20260810);
  for (int i = 0; i < 50; ++i) {
    const SystemParams p = random_params(rng);
    const DensityMatrix direct = steady_state(p);
    const DensityMatrix evolved = oracle_state(p);
    CHECK((direct.rho - evolved.rho).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(direct.hermiticity_defect() <= 1e-12);
    CHECK(direct.trace_defect() <= 1e-12);
    CHECK(direct.min_eigenvalue() >= -1e-10);
  }
}

TEST_CASE("mirror symmetry: flipping the detuning swaps the level pairs") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 20; ++i) {
    SystemParams p = random_params(rng);
    SystemParams m = p;
    m.laser_detuning = -p.laser_detuning;
    const DensityMatrix a = steady_state(p);
    const DensityMatrix b = steady_state(m);
    CHECK(std::abs(population(a, 1) - population(b, 2)) < 1e-10);
    CHECK(std::abs(population(a, 3) - population(b, 4)) < 1e-10);
  }
}

TEST_CASE("equal splittings at zero detuning give pairwise equal levels") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const double split = 30.0 * u01(rng);
    const SystemParams p = SystemParams::from_ghz(
        split, split, 0.0, 0.05 + 2.8 * u01(rng), 0.05 + 0.95 * u01(rng));
    const DensityMatrix rho = steady_state(p);
    CHECK(std::abs(population(rho, 1) - population(rho, 2)) < 1e-10);
    CHECK(std::abs(population(rho, 3) - population(rho, 4)) < 1e-10);
  }
}

TEST_CASE("population accessor") {
  CHECK(population(DensityMatrix::pure(1), 1) == 1.0);
  CHECK(population(DensityMatrix::pure(1), 2) == 0.0);
  DensityMatrix mixed;
  mixed.rho = 0.25 * Matrix4c::Identity();
  double total = 0.0;
  for (int level = 1; level <= 4; ++level) {
    CHECK(population(mixed, level) == doctest::Approx(0.25));
    total += population(mixed, level);
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK_THROWS_AS(population(mixed, 0), std::out_of_range);
  CHECK_THROWS_AS(population(mixed, 5), std::out_of_range);
}

TEST_CASE("matrix debug format") {
  Eigen::MatrixXcd m(1, 2);
  m(0, 0) = {1.5, 0.25};
  m(0, 1) = {0.0, -1.0};
  CHECK(format_matrix(m) == "1.5+0.25j 0-1j\n");
}
