#pragma once

// Units: rates and frequencies in gamma, lengths in lambda, time in 1/gamma.
// The decay constants gamma1/gamma2 are inputs; the full spontaneous rate on
// transition 3 <-> j is 2*gamma_j.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddlambda {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Below this separation chi_tensor refuses to evaluate.
inline constexpr double kHardSeparationFloor = 1e-3;
// Below this separation the near-field terms exceed ~1e5 gamma; runs are
// allowed but flagged.
inline constexpr double kDefaultSeparationFloor = 1e-2;

// Two-atom Hilbert space: |a, b> with a, b in {1, 2, 3}.
inline constexpr int kLevels = 3;
inline constexpr int kDim = kLevels * kLevels;

using Op9 = Eigen::Matrix<cplx, kDim, kDim>;

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PhysParams {
  double rabi1 = 3.0;
  double rabi2 = 5.0;
  double det1 = 0.0;
  double det2 = 2.0;
  double delta_lower = 0.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double k0 = kTwoPi;

  // Residual drive frequency delta + det2 - det1.
  double big_delta() const { return delta_lower + det2 - det1; }

  bool operator==(const PhysParams&) const = default;
};

inline double big_delta(const PhysParams& p) { return p.big_delta(); }

// sin(pi x) and cos(pi x) with exact zeros when x is (to a few ulps) an
// integer or half-integer, so angles like pi/2 give exactly vanishing factors.
template <typename Scalar>
Scalar sin_pi(Scalar x) {
  using std::abs;
  using std::round;
  using std::sin;
  const Scalar n = round(x);
  const Scalar tol = 4 * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), abs(x));
  if (abs(x - n) <= tol) return Scalar(0);
  return sin(std::numbers::pi_v<Scalar> * x);
}

template <typename Scalar>
Scalar cos_pi(Scalar x) {
  using std::abs;
  using std::cos;
  using std::floor;
  const Scalar half = floor(x) + Scalar(0.5);
  const Scalar tol = 4 * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), abs(x));
  if (abs(x - half) <= tol) return Scalar(0);
  return cos(std::numbers::pi_v<Scalar> * x);
}

// Separation vector of atom B relative to atom A (at the origin).
template <typename Scalar>
struct GeometryT {
  Scalar r12{};
  Scalar theta{};
  Scalar phi{};

  Eigen::Matrix<Scalar, 3, 1> unit() const {
    constexpr Scalar pi = std::numbers::pi_v<Scalar>;
    const Scalar st = sin_pi(theta / pi);
    return {st * cos_pi(phi / pi), st * sin_pi(phi / pi), cos_pi(theta / pi)};
  }
  Eigen::Matrix<Scalar, 3, 1> position() const { return r12 * unit(); }

  bool operator==(const GeometryT&) const = default;
};

using Geometry = GeometryT<double>;

// Wraps phi into [0, 2pi) and checks r12 > 0, theta in [0, pi].
Geometry make_geometry(double r12, double theta, double phi);

// A-major flat index into the 9-dimensional product basis.
struct BasisIndex {
  int atom_a = 1;
  int atom_b = 1;

  constexpr int flat() const { return kLevels * (atom_a - 1) + (atom_b - 1); }
  static BasisIndex from_flat(int index);

  bool operator==(const BasisIndex&) const = default;
};

inline constexpr int flat_index(int atom_a_state, int atom_b_state) {
  return BasisIndex{atom_a_state, atom_b_state}.flat();
}

// S_ij^(k) = |i><j| acting on atom k (1 = A, 2 = B), embedded in the
// two-atom space. Throws std::out_of_range on bad indices.
Op9 atomic_operator(int which_atom, int i, int j);

// Returns warnings; throws std::invalid_argument for non-finite values or
// non-positive rates. min_r12, when given, is the smallest separation the
// run will visit.
std::vector<std::string> validate_params(const PhysParams& p,
                                         std::optional<double> min_r12 = std::nullopt,
                                         double separation_floor = kDefaultSeparationFloor);

}  // namespace ddlambda
