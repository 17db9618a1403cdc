#include "ddlambda/dynamics.hpp"

#include "ddlambda/observables.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ddlambda {

namespace {

using Dense81 = Eigen::Matrix<cplx, kSuperDim, kSuperDim>;

Dense81 kron(const Op9& a, const Op9& b) {
  Dense81 out;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) out.block<kDim, kDim>(i * kDim, j * kDim) = a(i, j) * b;
  return out;
}

// vec(A X) = (I kron A) vec(X), vec(X B) = (B^T kron I) vec(X).
Dense81 left(const Op9& a) { return kron(Op9::Identity(), a); }
Dense81 right(const Op9& b) { return kron(b.transpose(), Op9::Identity()); }
Dense81 sandwich(const Op9& a, const Op9& b) { return kron(b.transpose(), a); }
Dense81 commutator(const Op9& h) { return left(h) - right(h); }

Op9 op(int atom, int i, int j) { return atomic_operator(atom, i, j); }

int transpose_index(int k) { return (k % kDim) * kDim + k / kDim; }

Superoperator sparse(const Dense81& m) {
  Superoperator s = m.sparseView(cplx(0.0), 0.0);
  s.makeCompressed();
  return s;
}

}  // namespace

DensityMatrix::DensityMatrix(const Op9& m) : m_(m) {
  if (!m.allFinite()) throw std::invalid_argument("density matrix: non-finite entries");
  if (hermiticity_defect(m) > 1e-10) throw std::invalid_argument("density matrix: not Hermitian");
  if (trace_defect(m) > 1e-8) throw std::invalid_argument("density matrix: trace differs from 1");
}

DensityMatrix DensityMatrix::product_state(int atom_a_state, int atom_b_state) {
  if (atom_a_state < 1 || atom_a_state > kLevels || atom_b_state < 1 || atom_b_state > kLevels)
    throw std::out_of_range("product_state: level index must be in {1, 2, 3}");
  Op9 m = Op9::Zero();
  const int k = flat_index(atom_a_state, atom_b_state);
  m(k, k) = 1.0;
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::pure(const Eigen::Matrix<cplx, kDim, 1>& psi) {
  const double norm = psi.norm();
  if (!(norm > 0.0)) throw std::invalid_argument("pure state: zero vector");
  const Eigen::Matrix<cplx, kDim, 1> v = psi / norm;
  return DensityMatrix(v * v.adjoint());
}

double DensityMatrix::upper_population(int which_atom) const {
  return (m_ * atomic_operator(which_atom, 3, 3)).trace().real();
}

cplx DensityMatrix::interatomic_coherence() const { return m_(flat_index(1, 3), flat_index(3, 1)); }

double trace_defect(const Op9& rho) { return std::abs(rho.trace() - cplx(1.0)); }

double hermiticity_defect(const Op9& rho) { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

double min_eigenvalue(const Op9& rho) {
  const Op9 h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Op9> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

cplx laser_phase(const Geometry& g, double k0) {
  return std::polar(1.0, k0 * g.r12 * cos_pi(g.theta / kPi));
}

SuperoperatorTriple build_superoperators(const PhysParams& p, const CouplingSet& c, const Geometry& g) {
  return build_superoperators(p, c, laser_phase(g, p.k0));
}

SuperoperatorTriple build_superoperators(const PhysParams& p, const CouplingSet& c, cplx laser_phase_b) {
  const cplx I(0.0, 1.0);
  const double detuning[3] = {0.0, p.det1, p.det2};
  const double rabi[3] = {0.0, p.rabi1, p.rabi2};
  const double gamma[3] = {0.0, p.gamma1, p.gamma2};
  const double gamma_dd[3] = {0.0, c.gamma1_dd, c.gamma2_dd};
  const double omega_dd[3] = {0.0, c.omega1_dd, c.omega2_dd};
  const cplx drive_phase[3] = {0.0, 1.0, laser_phase_b};

  Dense81 l0 = Dense81::Zero();
  Dense81 lplus = Dense81::Zero();

  // Detunings and laser drive: -i[H, rho] with
  // H = sum Delta_j S_jj - sum (Omega_j(r_mu) S_3j + h.c.).
  Op9 h = Op9::Zero();
  for (int mu = 1; mu <= 2; ++mu)
    for (int j = 1; j <= 2; ++j) {
      h += detuning[j] * op(mu, j, j);
      const cplx drive = rabi[j] * drive_phase[mu];
      h -= drive * op(mu, 3, j) + std::conj(drive) * op(mu, j, 3);
    }
  l0 += -I * commutator(h);

  for (int mu = 1; mu <= 2; ++mu) {
    const int nu = 3 - mu;
    for (int j = 1; j <= 2; ++j) {
      // Single-atom decay 3 -> j at rate 2 gamma_j.
      const Op9 s33 = op(mu, 3, 3);
      l0 -= gamma[j] * (left(s33) + right(s33) - 2.0 * sandwich(op(mu, j, 3), op(mu, 3, j)));
      // Collective decay between parallel dipoles.
      const Op9 exchange = op(mu, 3, j) * op(nu, j, 3);
      l0 -= gamma_dd[j] *
            (left(exchange) + right(exchange) - 2.0 * sandwich(op(nu, j, 3), op(mu, 3, j)));
    }
    // Cross terms (x dipole of atom nu, y dipole of atom mu) carrying e^{i Delta t}.
    const Op9 cross = op(mu, 3, 2) * op(nu, 1, 3);
    lplus -= c.gamma_vc * (left(cross) + right(cross) - 2.0 * sandwich(op(nu, 1, 3), op(mu, 3, 2)));
    lplus += I * c.omega_vc * commutator(cross);
  }

  // Parallel dipole-dipole energy exchange, i Omega [A, rho] + h.c.
  for (int j = 1; j <= 2; ++j) {
    const Op9 exchange = op(1, 3, j) * op(2, j, 3);
    l0 += I * omega_dd[j] * (commutator(exchange) + commutator(exchange.adjoint()));
  }

  SuperoperatorTriple out;
  out.l0 = sparse(l0);
  out.lplus = sparse(lplus);
  out.lminus = hermitian_partner(out.lplus);
  return out;
}

Superoperator hermitian_partner(const Superoperator& m) {
  std::vector<Eigen::Triplet<cplx>> entries;
  entries.reserve(static_cast<std::size_t>(m.nonZeros()));
  for (int row = 0; row < m.outerSize(); ++row)
    for (Superoperator::InnerIterator it(m, row); it; ++it)
      entries.emplace_back(transpose_index(static_cast<int>(it.row())), transpose_index(static_cast<int>(it.col())),
                           std::conj(it.value()));
  Superoperator out(kSuperDim, kSuperDim);
  out.setFromTriplets(entries.begin(), entries.end());
  out.makeCompressed();
  return out;
}

Op9 rhs(double t, const Op9& rho, const SuperoperatorTriple& s, double big_delta) {
  const Eigen::Map<const Vec81> x(rho.data());
  const cplx phase = std::polar(1.0, big_delta * t);
  Vec81 y = s.l0 * x;
  if (s.lplus.nonZeros() > 0) {
    y += phase * (s.lplus * x);
    y += std::conj(phase) * (s.lminus * x);
  }
  Op9 out;
  Eigen::Map<Vec81>(out.data()) = y;
  return out;
}

HermitianCoords pack_hermitian(const Op9& rho) {
  HermitianCoords x;
  Eigen::Map<Eigen::Matrix<double, kDim, kDim>> packed(x.data());
  for (int j = 0; j < kDim; ++j) {
    packed(j, j) = rho(j, j).real();
    for (int i = 0; i < j; ++i) {
      packed(i, j) = rho(i, j).real();
      packed(j, i) = rho(i, j).imag();
    }
  }
  return x;
}

Op9 unpack_hermitian(const HermitianCoords& x) {
  Eigen::Map<const Eigen::Matrix<double, kDim, kDim>> packed(x.data());
  Op9 rho;
  for (int j = 0; j < kDim; ++j) {
    rho(j, j) = packed(j, j);
    for (int i = 0; i < j; ++i) {
      rho(i, j) = cplx(packed(i, j), packed(j, i));
      rho(j, i) = cplx(packed(i, j), -packed(j, i));
    }
  }
  return rho;
}

namespace {

using RealSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Column k of the real generator: apply the (Hermiticity-preserving) complex
// map to the k-th real basis matrix.
template <typename Apply>
RealSparse real_generator(Apply apply) {
  std::vector<Eigen::Triplet<double>> entries;
  for (int k = 0; k < kSuperDim; ++k) {
    HermitianCoords e = HermitianCoords::Zero();
    e(k) = 1.0;
    const Op9 rho = unpack_hermitian(e);
    const Vec81 y = apply(Eigen::Map<const Vec81>(rho.data()));
    Op9 image;
    Eigen::Map<Vec81>(image.data()) = y;
    const HermitianCoords column = pack_hermitian(image);
    for (int i = 0; i < kSuperDim; ++i)
      if (column(i) != 0.0) entries.emplace_back(i, k, column(i));
  }
  RealSparse out(kSuperDim, kSuperDim);
  out.setFromTriplets(entries.begin(), entries.end());
  out.makeCompressed();
  return out;
}

}  // namespace

RealGenerator to_hermitian_coords(const SuperoperatorTriple& s, double big_delta) {
  const cplx I(0.0, 1.0);
  RealGenerator g;
  g.big_delta = big_delta;
  g.r0 = real_generator([&](const auto& x) -> Vec81 { return s.l0 * x; });
  g.rc = real_generator([&](const auto& x) -> Vec81 { return s.lplus * x + s.lminus * x; });
  g.rs = real_generator([&](const auto& x) -> Vec81 { return I * (s.lplus * x) - I * (s.lminus * x); });
  return g;
}

std::size_t TimeGrid::size() const {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("time grid: t_end and dt must be positive");
  return static_cast<std::size_t>(std::llround(t_end / dt)) + 1;
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i);
  return out;
}

namespace {

// Dormand-Prince 5(4) tableau and Hairer's dense-output weights.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// Observer receives (grid index, state) for every grid point, in order.
template <typename State, typename Deriv, typename Observer>
IntegratorStats dopri5(State y, Deriv&& f, const TimeGrid& grid, const IntegratorOptions& opt, Observer&& observe) {
  IntegratorStats stats;
  const std::size_t n_out = grid.size();
  const double t_end = grid.at(n_out - 1);
  const auto n = static_cast<double>(y.size());

  auto error_norm = [&](const State& err, const State& y0, const State& y1) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < y0.size(); ++i) {
      const double scale = opt.atol + opt.rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
      const double r = std::abs(err(i)) / scale;
      sum += r * r;
    }
    return std::sqrt(sum / n);
  };

  State k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, err;
  double t = 0.0;
  f(t, y, k1);
  ++stats.rhs_evaluations;
  observe(0, y);
  std::size_t next_out = 1;

  // Initial step from the derivative scale.
  double h = 1e-3;
  {
    const double d0 = std::sqrt(y.squaredNorm() / n);
    const double d1n = std::sqrt(k1.squaredNorm() / n);
    if (d1n > 1e-12) h = std::min(0.01 * std::max(d0, 1e-5) / d1n, 1e-2);
  }

  double err_prev = 1e-4;
  bool rejected_last = false;
  while (next_out < n_out) {
    if (stats.accepted_steps + stats.rejected_steps >= opt.max_steps)
      throw SimulationError("integrate: step limit exceeded");
    if (h < opt.h_min) throw SimulationError("integrate: step size underflow");
    const bool last = t + h >= t_end;
    if (last) h = t_end - t;

    ytmp = y + h * a21 * k1;
    f(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h, ytmp, k6);
    ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    f(t + h, ynew, k7);
    stats.rhs_evaluations += 6;
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, ynew);

    if (!std::isfinite(en)) {
      ++stats.rejected_steps;
      h *= 0.1;
      rejected_last = true;
      continue;
    }

    if (en <= 1.0) {
      const double t_new = last ? t_end : t + h;
      // Dense output for every grid point in (t, t_new].
      if (next_out < n_out && grid.at(next_out) <= t_new + 1e-12 * std::max(1.0, t_end)) {
        const State ydiff = ynew - y;
        const State bspl = h * k1 - ydiff;
        const State r4 = ydiff - h * k7 - bspl;
        const State r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        while (next_out < n_out && grid.at(next_out) <= t_new + 1e-12 * std::max(1.0, t_end)) {
          const double tk = grid.at(next_out);
          if (next_out + 1 == n_out && last) {
            observe(next_out, ynew);
          } else {
            const double s = std::clamp((tk - t) / h, 0.0, 1.0);
            const double s1 = 1.0 - s;
            const State yk = y + s * (ydiff + s1 * (bspl + s * (r4 + s1 * r5)));
            observe(next_out, yk);
          }
          ++next_out;
        }
      }
      t = t_new;
      y = ynew;
      k1 = k7;
      ++stats.accepted_steps;

      // PI step-size control.
      const double e = std::max(en, 1e-10);
      double factor = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
      factor = std::clamp(factor, 0.2, 10.0);
      if (rejected_last) factor = std::min(factor, 1.0);
      err_prev = std::max(en, 1e-4);
      h *= factor;
      rejected_last = false;
    } else {
      ++stats.rejected_steps;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      rejected_last = true;
    }
  }
  return stats;
}

class TrajectoryRecorder {
 public:
  TrajectoryRecorder(const TimeGrid& grid, cplx detector_phase, const IntegratorOptions& opt)
      : phase_(detector_phase), opt_(opt) {
    traj_.t = grid.times();
    traj_.intensity.resize(traj_.t.size());
    if (opt.store_snapshots) traj_.snapshots.resize(traj_.t.size());
  }

  void record(std::size_t index, const Op9& rho) {
    traj_.intensity[index] = intensity_with_phase(rho, phase_);
    if (opt_.store_snapshots) traj_.snapshots[index] = rho;

    ValidityReport& v = traj_.validity;
    const double drift = trace_defect(rho);
    v.max_trace_drift = std::max(v.max_trace_drift, drift);
    v.max_hermiticity_defect = std::max(v.max_hermiticity_defect, hermiticity_defect(rho));
    if (!(drift <= opt_.trace_failure)) {
      std::ostringstream os;
      os << "integrate: trace drift " << drift << " at t = " << traj_.t[index];
      throw SimulationError(os.str());
    }
    const bool final_point = index + 1 == traj_.t.size();
    const std::size_t stride = std::max<std::size_t>(opt_.positivity_stride, 1);
    // Cholesky of rho + tol*I succeeds iff every eigenvalue exceeds -tol.
    shifted_ = rho;
    shifted_.diagonal().array() += opt_.positivity_tolerance;
    llt_.compute(shifted_);
    const bool negative = llt_.info() != Eigen::Success;
    if (negative || index % stride == 0 || final_point) {
      const double lambda = min_eigenvalue(rho);
      v.min_eigenvalue = std::min(v.min_eigenvalue, lambda);
      if (lambda < -opt_.positivity_tolerance) ++v.positivity_violations;
    }
    if (final_point) traj_.final_state = rho;
  }

  Trajectory finish(IntegratorStats stats) {
    traj_.stats = stats;
    return std::move(traj_);
  }

 private:
  Trajectory traj_;
  cplx phase_;
  IntegratorOptions opt_;
  Op9 shifted_;
  Eigen::LLT<Op9> llt_;
};

}  // namespace

Trajectory integrate(const DensityMatrix& rho0, const SuperoperatorTriple& s, double big_delta,
                     const TimeGrid& grid, cplx detector_phase, const IntegratorOptions& options) {
  TrajectoryRecorder recorder(grid, detector_phase, options);
  IntegratorStats stats;

  if (options.representation == StateRepresentation::hermitian) {
    const RealGenerator gen = to_hermitian_coords(s, big_delta);
    const bool driven = gen.rc.nonZeros() > 0 || gen.rs.nonZeros() > 0;
    auto f = [&](double t, const HermitianCoords& x, HermitianCoords& dx) {
      dx.noalias() = gen.r0 * x;
      if (driven) {
        dx.noalias() += std::cos(big_delta * t) * (gen.rc * x);
        dx.noalias() += std::sin(big_delta * t) * (gen.rs * x);
      }
    };
    stats = dopri5(pack_hermitian(rho0.matrix()), f, grid, options,
                   [&](std::size_t i, const HermitianCoords& x) { recorder.record(i, unpack_hermitian(x)); });
  } else {
    const bool driven = s.lplus.nonZeros() > 0;
    auto f = [&](double t, const Vec81& x, Vec81& dx) {
      dx.noalias() = s.l0 * x;
      if (driven) {
        const cplx phase = std::polar(1.0, big_delta * t);
        dx.noalias() += phase * (s.lplus * x);
        dx.noalias() += std::conj(phase) * (s.lminus * x);
      }
    };
    const Vec81 x0 = Eigen::Map<const Vec81>(rho0.matrix().data());
    stats = dopri5(x0, f, grid, options, [&](std::size_t i, const Vec81& x) {
      Op9 rho;
      Eigen::Map<Vec81>(rho.data()) = x;
      recorder.record(i, rho);
    });
  }
  return recorder.finish(stats);
}

Trajectory integrate_fixed_step(const DensityMatrix& rho0, const SuperoperatorTriple& s, double big_delta,
                                const TimeGrid& grid, cplx detector_phase, double step) {
  const double ratio = grid.dt / step;
  const auto substeps = static_cast<std::size_t>(std::llround(ratio));
  if (substeps == 0 || std::abs(ratio - static_cast<double>(substeps)) > 1e-9 * ratio)
    throw std::invalid_argument("integrate_fixed_step: step must divide the output interval");
  const double h = grid.dt / static_cast<double>(substeps);

  IntegratorOptions options;
  options.positivity_stride = 100;
  TrajectoryRecorder recorder(grid, detector_phase, options);
  const RealGenerator gen = to_hermitian_coords(s, big_delta);
  auto f = [&](double t, const HermitianCoords& x) -> HermitianCoords {
    return gen.r0 * x + std::cos(big_delta * t) * (gen.rc * x) + std::sin(big_delta * t) * (gen.rs * x);
  };

  IntegratorStats stats;
  HermitianCoords x = pack_hermitian(rho0.matrix());
  recorder.record(0, rho0.matrix());
  const std::size_t n_out = grid.size();
  for (std::size_t k = 1; k < n_out; ++k) {
    for (std::size_t m = 0; m < substeps; ++m) {
      const double t = grid.at(k - 1) + static_cast<double>(m) * h;
      const HermitianCoords q1 = f(t, x);
      const HermitianCoords q2 = f(t + 0.5 * h, x + 0.5 * h * q1);
      const HermitianCoords q3 = f(t + 0.5 * h, x + 0.5 * h * q2);
      const HermitianCoords q4 = f(t + h, x + h * q3);
      x += (h / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
      ++stats.accepted_steps;
      stats.rhs_evaluations += 4;
    }
    recorder.record(k, unpack_hermitian(x));
  }
  return recorder.finish(stats);
}

}  // namespace ddlambda
