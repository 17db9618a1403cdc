#pragma once

// Free-space dipole-dipole couplings between the two atoms.
//
// chi is stored rate-normalized: for unit dipole directions e_a, e_b the
// coupling between transitions with half-rates g_a, g_b is
//
//   Gamma = sqrt(g_a g_b) * Im(e_b . chi . e_a)
//   Omega = sqrt(g_a g_b) * Re(e_b . chi . e_a)
//
// with chi = 3/2 [ delta A(eta) - u u^T B(eta) ],  eta = k0 r12,
//   A = (1/eta + i/eta^2 - 1/eta^3) e^{i eta}
//   B = (1/eta + 3i/eta^2 - 3/eta^3) e^{i eta}.
// The d1 (1<->3) transition dipole points along x, d2 (2<->3) along y.

#include "ddlambda/model.hpp"

#include <cmath>
#include <complex>

namespace ddlambda {

template <typename Scalar>
using ChiTensorT = Eigen::Matrix<std::complex<Scalar>, 3, 3>;
using ChiTensor = ChiTensorT<double>;

// Below this eta the imaginary (radiative) parts of A and B are taken from
// their Taylor series; the direct form cancels catastrophically.
inline constexpr double kSeriesEta = 1e-3;

enum class Axis { x = 0, y = 1, z = 2 };

struct CouplingSet {
  double gamma1_dd = 0.0;
  double omega1_dd = 0.0;
  double gamma2_dd = 0.0;
  double omega2_dd = 0.0;
  double gamma_vc = 0.0;
  double omega_vc = 0.0;

  bool operator==(const CouplingSet&) const = default;
};

template <typename Scalar>
struct CrossCouplingsT {
  Scalar gamma_vc{};
  Scalar omega_vc{};
};
using CrossCouplings = CrossCouplingsT<double>;

struct RatePair {
  double gamma = 0.0;
  double omega = 0.0;
};

namespace detail {

template <typename Scalar>
std::complex<Scalar> chi_scalar_a(Scalar eta) {
  using std::cos;
  using std::sin;
  const Scalar e2 = eta * eta;
  const Scalar e3 = e2 * eta;
  const std::complex<Scalar> phase(cos(eta), sin(eta));
  std::complex<Scalar> a = std::complex<Scalar>(Scalar(1) / eta - Scalar(1) / e3, Scalar(1) / e2) * phase;
  if (eta < Scalar(kSeriesEta))
    a.imag(Scalar(2) / 3 - Scalar(2) * e2 / 15 + e2 * e2 / 140);
  return a;
}

template <typename Scalar>
std::complex<Scalar> chi_scalar_b(Scalar eta) {
  using std::cos;
  using std::sin;
  const Scalar e2 = eta * eta;
  const Scalar e3 = e2 * eta;
  const std::complex<Scalar> phase(cos(eta), sin(eta));
  std::complex<Scalar> b = std::complex<Scalar>(Scalar(1) / eta - Scalar(3) / e3, Scalar(3) / e2) * phase;
  if (eta < Scalar(kSeriesEta)) b.imag(-e2 / 15 + e2 * e2 / 210);
  return b;
}

}  // namespace detail

// chi for a dimensionless separation eta along the unit vector u. No floor
// check; eta must be positive.
template <typename Scalar>
ChiTensorT<Scalar> chi_from_eta(Scalar eta, const Eigen::Matrix<Scalar, 3, 1>& u) {
  const std::complex<Scalar> a = detail::chi_scalar_a(eta);
  const std::complex<Scalar> b = detail::chi_scalar_b(eta);
  ChiTensorT<Scalar> chi;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) {
      const std::complex<Scalar> diag = (m == n) ? a : std::complex<Scalar>(0);
      chi(m, n) = Scalar(1.5) * (diag - u(m) * u(n) * b);
    }
  return chi;
}

template <typename Scalar>
ChiTensorT<Scalar> chi_tensor(const GeometryT<Scalar>& g, Scalar k0 = Scalar(kTwoPi)) {
  if (!(g.r12 >= Scalar(kHardSeparationFloor)))
    throw std::invalid_argument("chi_tensor: r12 below hard separation floor");
  return chi_from_eta(k0 * g.r12, g.unit());
}

// Closed-form cross couplings between the x dipole of one atom and the y
// dipole of the other. Used in production; the contraction of chi is the
// cross-check.
template <typename Scalar>
CrossCouplingsT<Scalar> cross_couplings_closed(const GeometryT<Scalar>& g, Scalar k0 = Scalar(kTwoPi),
                                               Scalar gamma1 = Scalar(1), Scalar gamma2 = Scalar(1)) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  if (!(g.r12 >= Scalar(kHardSeparationFloor)))
    throw std::invalid_argument("cross_couplings_closed: r12 below hard separation floor");
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar sin_theta = sin_pi(g.theta / pi);
  const Scalar angular = sin_pi(Scalar(2) * g.phi / pi) * sin_theta * sin_theta;
  if (angular == Scalar(0)) return {Scalar(0), Scalar(0)};

  const Scalar eta = k0 * g.r12;
  const Scalar e2 = eta * eta;
  const Scalar e3 = e2 * eta;
  const Scalar s = sin(eta);
  const Scalar c = cos(eta);
  const Scalar gamma_bracket = eta < Scalar(kSeriesEta) ? -e2 / 15 + e2 * e2 / 210
                                                        : s / eta + 3 * (c / e2 - s / e3);
  const Scalar omega_bracket = c / eta - 3 * (s / e2 + c / e3);
  const Scalar prefactor = -Scalar(0.75) * sqrt(gamma1 * gamma2) * angular;
  return {prefactor * gamma_bracket, prefactor * omega_bracket};
}

// (Gamma, Omega) for the contraction second . chi . first, scaled by
// sqrt(g_first g_second) passed as rate_scale.
RatePair coupling_pair(Axis first, Axis second, const ChiTensor& chi, double rate_scale = 1.0);

// Parallel constants by contraction, cross constants by the closed form.
// With verify set, the cross constants are also contracted and a relative
// mismatch above kVerifyTolerance throws SimulationError.
CouplingSet all_couplings(const Geometry& g, const PhysParams& p, bool verify = false);

inline constexpr double kVerifyTolerance = 1e-9;

// Relative mismatch between closed-form and contracted cross couplings,
// measured against the modulus of the complex coupling Omega + i Gamma.
double cross_coupling_mismatch(const Geometry& g, const PhysParams& p);

}  // namespace ddlambda
