#include "ddlambda/couplings.hpp"

#include <cmath>
#include <sstream>

namespace ddlambda {

RatePair coupling_pair(Axis first, Axis second, const ChiTensor& chi, double rate_scale) {
  const cplx value = chi(static_cast<int>(second), static_cast<int>(first));
  return {rate_scale * value.imag(), rate_scale * value.real()};
}

double cross_coupling_mismatch(const Geometry& g, const PhysParams& p) {
  const ChiTensor chi = chi_tensor(g, p.k0);
  const RatePair contracted = coupling_pair(Axis::x, Axis::y, chi, std::sqrt(p.gamma1 * p.gamma2));
  const CrossCouplings closed = cross_couplings_closed(g, p.k0, p.gamma1, p.gamma2);
  const cplx a(contracted.omega, contracted.gamma);
  const cplx b(closed.omega_vc, closed.gamma_vc);
  const double scale = std::abs(a);
  if (scale == 0.0) return std::abs(b);
  return std::abs(a - b) / scale;
}

CouplingSet all_couplings(const Geometry& g, const PhysParams& p, bool verify) {
  const ChiTensor chi = chi_tensor(g, p.k0);
  const RatePair first = coupling_pair(Axis::x, Axis::x, chi, p.gamma1);
  const RatePair second = coupling_pair(Axis::y, Axis::y, chi, p.gamma2);
  const CrossCouplings cross = cross_couplings_closed(g, p.k0, p.gamma1, p.gamma2);

  if (verify) {
    const double mismatch = cross_coupling_mismatch(g, p);
    if (!(mismatch <= kVerifyTolerance)) {
      std::ostringstream os;
      os << "cross-coupling consistency check failed at (r12=" << g.r12 << ", theta=" << g.theta
         << ", phi=" << g.phi << "): relative mismatch " << mismatch;
      throw SimulationError(os.str());
    }
  }
  return {first.gamma, first.omega, second.gamma, second.omega, cross.gamma_vc, cross.omega_vc};
}

}  // namespace ddlambda
