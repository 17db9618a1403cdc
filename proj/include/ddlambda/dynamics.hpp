#pragma once

// Master equation for the two-atom density matrix.
//
// The generator is split by its explicit time dependence,
//
//   d vec(rho)/dt = (L0 + e^{i Delta t} L+ + e^{-i Delta t} L-) vec(rho),
//
// with vec() column stacking in the A-major basis. L0 holds detunings, laser
// drive, single-atom decay and the parallel dipole-dipole terms; L+ holds the
// cross-coupling terms and L- is their Hermitian-conjugate partner,
// L-(rho) = (L+(rho^dagger))^dagger.

#include "ddlambda/couplings.hpp"
#include "ddlambda/model.hpp"

#include <Eigen/Sparse>

#include <cstddef>
#include <limits>
#include <vector>

namespace ddlambda {

inline constexpr int kSuperDim = kDim * kDim;

using Vec81 = Eigen::Matrix<cplx, kSuperDim, 1>;
using Superoperator = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

class DensityMatrix {
 public:
  // Throws std::invalid_argument unless the matrix is Hermitian to 1e-10
  // and has unit trace to 1e-8.
  explicit DensityMatrix(const Op9& m);

  // |a, b><a, b| with a, b in {1, 2, 3}.
  static DensityMatrix product_state(int atom_a_state, int atom_b_state);
  static DensityMatrix pure(const Eigen::Matrix<cplx, kDim, 1>& psi);

  const Op9& matrix() const { return m_; }
  cplx operator()(int row, int col) const { return m_(row, col); }

  // <S_33^(k)>
  double upper_population(int which_atom) const;
  // <S_31^(1) S_13^(2)> = <1,3| rho |3,1>
  cplx interatomic_coherence() const;

 private:
  Op9 m_;
};

double trace_defect(const Op9& rho);
double hermiticity_defect(const Op9& rho);
double min_eigenvalue(const Op9& rho);

struct SuperoperatorTriple {
  Superoperator l0;
  Superoperator lplus;
  Superoperator lminus;
};

// Laser phase of atom B is e^{i k0 r12 cos(theta)} (lasers along z, atom A at
// the origin).
cplx laser_phase(const Geometry& g, double k0);

SuperoperatorTriple build_superoperators(const PhysParams& p, const CouplingSet& c, const Geometry& g);
// Same, with the drive phase on atom B given directly.
SuperoperatorTriple build_superoperators(const PhysParams& p, const CouplingSet& c, cplx laser_phase_b);

// L^dagger-partner: M -> P conj(M) P with P the vec-transpose permutation.
Superoperator hermitian_partner(const Superoperator& m);

Op9 rhs(double t, const Op9& rho, const SuperoperatorTriple& s, double big_delta);
inline Op9 rhs(double t, const DensityMatrix& rho, const SuperoperatorTriple& s, double big_delta) {
  return rhs(t, rho.matrix(), s, big_delta);
}

// Real coordinates of a Hermitian 9x9 matrix: diagonal entries, then for
// i < j the slot (i, j) holds Re rho_ij and (j, i) holds Im rho_ij, column
// stacked into 81 reals.
using HermitianCoords = Eigen::Matrix<double, kSuperDim, 1>;
HermitianCoords pack_hermitian(const Op9& rho);
Op9 unpack_hermitian(const HermitianCoords& x);

// The generator in Hermitian coordinates:
//   dx/dt = (R0 + cos(Delta t) Rc + sin(Delta t) Rs) x
struct RealGenerator {
  Eigen::SparseMatrix<double, Eigen::RowMajor> r0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> rc;
  Eigen::SparseMatrix<double, Eigen::RowMajor> rs;
  double big_delta = 0.0;
};
RealGenerator to_hermitian_coords(const SuperoperatorTriple& s, double big_delta);

struct TimeGrid {
  double t_end = 50.0;
  double dt = 0.01;

  std::size_t size() const;
  double at(std::size_t i) const { return static_cast<double>(i) * dt; }
  std::vector<double> times() const;
  bool operator==(const TimeGrid&) const = default;
};

enum class StateRepresentation { hermitian, complex };

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_min = 1e-12;
  std::size_t max_steps = 100'000'000;
  // Every output point gets a Cholesky test of rho + tol*I; the exact
  // minimum eigenvalue is computed every positivity_stride points, at the
  // last one and wherever the test fails.
  std::size_t positivity_stride = 10;
  double positivity_tolerance = 1e-6;
  // Hard failure threshold on |Tr rho - 1|.
  double trace_failure = 1e-6;
  bool store_snapshots = false;
  StateRepresentation representation = StateRepresentation::hermitian;
  bool operator==(const IntegratorOptions&) const = default;
};

struct IntegratorStats {
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_evaluations = 0;
};

struct ValidityReport {
  double max_trace_drift = 0.0;
  double max_hermiticity_defect = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  std::size_t positivity_violations = 0;

  bool positive() const { return positivity_violations == 0; }
};

struct Trajectory {
  std::vector<double> t;
  std::vector<double> intensity;
  std::vector<Op9> snapshots;
  Op9 final_state = Op9::Zero();
  IntegratorStats stats;
  ValidityReport validity;
};

// Adaptive Dormand-Prince 5(4) with dense output onto the grid. The
// intensity series uses the detector phase factor (see observables).
// Throws SimulationError on step-size underflow or trace drift beyond
// options.trace_failure.
Trajectory integrate(const DensityMatrix& rho0, const SuperoperatorTriple& s, double big_delta,
                     const TimeGrid& grid, cplx detector_phase, const IntegratorOptions& options = {});

// Classical RK4 with a fixed internal step that must divide grid.dt.
Trajectory integrate_fixed_step(const DensityMatrix& rho0, const SuperoperatorTriple& s, double big_delta,
                                const TimeGrid& grid, cplx detector_phase, double step);

}  // namespace ddlambda
