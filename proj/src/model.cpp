#include "ddlambda/model.hpp"

#include <cmath>
#include <sstream>

namespace ddlambda {

Geometry make_geometry(double r12, double theta, double phi) {
  if (!std::isfinite(r12) || !std::isfinite(theta) || !std::isfinite(phi))
    throw std::invalid_argument("geometry: non-finite component");
  if (r12 <= 0.0) throw std::invalid_argument("geometry: r12 must be positive");
  if (theta < 0.0 || theta > kPi) throw std::invalid_argument("geometry: theta outside [0, pi]");
  double wrapped = std::fmod(phi, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return {r12, theta, wrapped};
}

BasisIndex BasisIndex::from_flat(int index) {
  if (index < 0 || index >= kDim) throw std::out_of_range("basis index outside [0, 8]");
  return {index / kLevels + 1, index % kLevels + 1};
}

Op9 atomic_operator(int which_atom, int i, int j) {
  if (which_atom != 1 && which_atom != 2) throw std::out_of_range("atom must be 1 or 2");
  if (i < 1 || i > kLevels || j < 1 || j > kLevels)
    throw std::out_of_range("level index must be in {1, 2, 3}");
  Op9 op = Op9::Zero();
  for (int spectator = 1; spectator <= kLevels; ++spectator) {
    if (which_atom == 1)
      op(flat_index(i, spectator), flat_index(j, spectator)) = 1.0;
    else
      op(flat_index(spectator, i), flat_index(spectator, j)) = 1.0;
  }
  return op;
}

std::vector<std::string> validate_params(const PhysParams& p, std::optional<double> min_r12,
                                         double separation_floor) {
  const double values[] = {p.rabi1, p.rabi2, p.det1, p.det2, p.delta_lower, p.gamma1, p.gamma2, p.k0};
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("parameters: non-finite value");
  if (p.gamma1 <= 0.0) throw std::invalid_argument("parameters: gamma1 must be positive");
  if (p.gamma2 <= 0.0) throw std::invalid_argument("parameters: gamma2 must be positive");
  if (p.k0 <= 0.0) throw std::invalid_argument("parameters: k0 must be positive");

  std::vector<std::string> warnings;
  if (min_r12) {
    if (!std::isfinite(*min_r12)) throw std::invalid_argument("parameters: non-finite separation");
    if (*min_r12 < separation_floor) {
      std::ostringstream os;
      os << "near-field singular regime: min r12 = " << *min_r12 << " lambda below floor "
         << separation_floor << " lambda";
      warnings.push_back(os.str());
    }
  }
  if (p.rabi1 < 0.0 || p.rabi2 < 0.0)
    warnings.emplace_back("negative Rabi frequency (equivalent to a pi phase shift of the drive)");
  return warnings;
}

}  // namespace ddlambda
