#include "ddlambda/couplings.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>

using namespace ddlambda;

namespace {

// Reference values from tests/oracles/couplings_oracle.py (mpmath, 50 digits).
struct Reference {
  double r12, theta, phi;
  CouplingSet c;
};

const Reference kReferences[] = {
    {0.05, kPi / 2, kPi / 4,
     {0.98526501257442723419, 27.623501746005937042, 0.98526501257442723419, 27.623501746005937042,
      0.0049001084728838059475, 73.78858449432992793}},
    {0.1, kPi / 2, kPi / 4,
     {0.9418855014918206204, 4.528479679227520004, 0.9418855014918206204, 4.528479679227520004,
      0.019188653109544782616, 9.7226674266789313368}},
    {0.1, kPi / 2, 0.0,
     {0.96107415460136540301, 14.251147105906451341, 0.92269684838227583778, -5.1941877474514113328, 0.0, 0.0}},
    {0.25, kPi / 3, 0.3 * kPi,
     {0.62132222292517636829, -0.13535139380900094207, 0.66909445356363711753, 0.28733316927250759924,
      0.073513903885064963909, 0.65044466060703702168}},
    {1.7, 2.0, 4.0,
     {-0.086204245956396804662, -0.028835827606279409763, -0.069093129074668879571, -0.028265205000105560809,
      0.058175328736150089066, 0.0019400345359040137606}},
};

void check_close(double actual, double expected, double rel) {
  if (expected == 0.0)
    CHECK(actual == 0.0);
  else
    CHECK(actual == doctest::Approx(expected).epsilon(rel));
}

}  // namespace

TEST_CASE("couplings match the high-precision oracle") {
  for (const auto& ref : kReferences) {
    CAPTURE(ref.r12);
    CAPTURE(ref.phi);
    const CouplingSet c = all_couplings(make_geometry(ref.r12, ref.theta, ref.phi), PhysParams{}, true);
    check_close(c.gamma1_dd, ref.c.gamma1_dd, 1e-12);
    check_close(c.omega1_dd, ref.c.omega1_dd, 1e-12);
    check_close(c.gamma2_dd, ref.c.gamma2_dd, 1e-12);
    check_close(c.omega2_dd, ref.c.omega2_dd, 1e-12);
    check_close(c.gamma_vc, ref.c.gamma_vc, 1e-10);
    check_close(c.omega_vc, ref.c.omega_vc, 1e-12);
  }
}

TEST_CASE("closest-approach cross couplings") {
  const CrossCouplings c = cross_couplings_closed(make_geometry(0.05, kPi / 2, kPi / 4));
  CHECK(c.omega_vc == doctest::Approx(73.8).epsilon(1e-3));
  CHECK(c.gamma_vc == doctest::Approx(0.0049).epsilon(1e-2));
}

TEST_CASE("parallel decay tends to gamma1 at small separation") {
  // r along z, so the x dipole is perpendicular to the separation.
  const double etas[] = {1e-2, 1e-3, 1e-4};
  const double expected[] = {0.99998000010714259259, 0.99999980000001071429, 0.99999999800000000107};
  for (int i = 0; i < 3; ++i) {
    const ChiTensor chi = chi_from_eta(etas[i], Eigen::Vector3d(0, 0, 1));
    // The closed form cancels like 1/eta^2 down to the series switch.
    const double tol = std::max(1e-14, 10 * std::numeric_limits<double>::epsilon() / (etas[i] * etas[i]));
    CHECK(std::abs(coupling_pair(Axis::x, Axis::x, chi).gamma - expected[i]) <= tol);
  }
}

TEST_CASE("chi is symmetric and decays in the far field") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> r(0.02, 3.0), u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const ChiTensor chi = chi_tensor(make_geometry(r(rng), u(rng) * kPi, u(rng) * kTwoPi));
    CHECK((chi - chi.transpose()).norm() <= 1e-15 * chi.norm());
  }
  const ChiTensor near = chi_tensor(make_geometry(0.25, 0.4, 0.9));
  const ChiTensor far = chi_tensor(make_geometry(1e3, 0.4, 0.9));
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n)
      if (std::abs(near(m, n)) > 0.0) CHECK(std::abs(far(m, n)) < 1e-2 * std::abs(near(m, n)));
  CHECK_THROWS_AS(chi_tensor(make_geometry(5e-4, 0.4, 0.9)), std::invalid_argument);
}

TEST_CASE("cross couplings vanish on symmetry planes and the z axis") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> r(0.02, 3.0), u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double rr = r(rng);
    const CrossCouplings a = cross_couplings_closed(make_geometry(rr, u(rng) * kPi, (i % 4) * kPi / 2));
    CHECK(a.gamma_vc == 0.0);
    CHECK(a.omega_vc == 0.0);
    const CrossCouplings b = cross_couplings_closed(make_geometry(rr, (i % 2) * kPi, u(rng) * kTwoPi));
    CHECK(b.gamma_vc == 0.0);
    CHECK(b.omega_vc == 0.0);
  }
  const ChiTensor chi = chi_tensor(make_geometry(0.3, 0.0, 1.0));
  const RatePair p = coupling_pair(Axis::x, Axis::y, chi);
  CHECK(p.gamma == 0.0);
  CHECK(p.omega == 0.0);
}

TEST_CASE("closed form agrees with contraction") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> r(0.02, 3.0), u(0.0, 1.0), rate(0.3, 3.0);
  for (int i = 0; i < 1000; ++i) {
    PhysParams p;
    p.gamma1 = rate(rng);
    p.gamma2 = rate(rng);
    const Geometry g = make_geometry(r(rng), u(rng) * kPi, u(rng) * kTwoPi);
    CHECK(cross_coupling_mismatch(g, p) <= 1e-10);
    const ChiTensor chi = chi_tensor(g);
    const RatePair xy = coupling_pair(Axis::x, Axis::y, chi);
    const RatePair yx = coupling_pair(Axis::y, Axis::x, chi);
    CHECK(xy.gamma == yx.gamma);
    CHECK(xy.omega == yx.omega);
  }
}

TEST_CASE("cross couplings: sign flip under phi -> pi - phi, invariance under phi -> phi + pi") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> r(0.02, 3.0), u(0.05, 0.95);
  for (int i = 0; i < 200; ++i) {
    const double rr = r(rng), th = u(rng) * kPi, ph = u(rng) * kPi;
    const CrossCouplings a = cross_couplings_closed(make_geometry(rr, th, ph));
    const CrossCouplings b = cross_couplings_closed(make_geometry(rr, th, kPi - ph));
    const CrossCouplings c = cross_couplings_closed(make_geometry(rr, th, ph + kPi));
    CHECK(b.gamma_vc == doctest::Approx(-a.gamma_vc).epsilon(1e-12));
    CHECK(b.omega_vc == doctest::Approx(-a.omega_vc).epsilon(1e-12));
    CHECK(c.gamma_vc == doctest::Approx(a.gamma_vc).epsilon(1e-12));
    CHECK(c.omega_vc == doctest::Approx(a.omega_vc).epsilon(1e-12));
  }
}

TEST_CASE("cross-coupling ratio depends only on eta") {
  const CrossCouplings a = cross_couplings_closed(make_geometry(0.37, 0.4, 0.3));
  const CrossCouplings b = cross_couplings_closed(make_geometry(0.37, 2.1, 2.0));
  CHECK(a.gamma_vc / a.omega_vc == doctest::Approx(b.gamma_vc / b.omega_vc).epsilon(1e-12));
}

TEST_CASE("cross couplings scale with sqrt(gamma1 gamma2)") {
  const Geometry g = make_geometry(0.1, kPi / 2, kPi / 4);
  PhysParams p4;
  p4.gamma1 = p4.gamma2 = 4.0;
  const CouplingSet one = all_couplings(g, PhysParams{});
  const CouplingSet four = all_couplings(g, p4);
  CHECK(four.gamma_vc == doctest::Approx(4 * one.gamma_vc).epsilon(1e-14));
  CHECK(four.omega_vc == doctest::Approx(4 * one.omega_vc).epsilon(1e-14));
}

TEST_CASE("couplings are finite and smooth in r12") {
  const double h = 1e-6;
  for (double r = 0.01; r < 3.0; r *= 1.1) {
    const CouplingSet a = all_couplings(make_geometry(r, 1.0, 0.6), PhysParams{});
    const CouplingSet b = all_couplings(make_geometry(r + h, 1.0, 0.6), PhysParams{});
    for (auto [x, y] : {std::pair{a.gamma1_dd, b.gamma1_dd}, {a.omega1_dd, b.omega1_dd}, {a.gamma_vc, b.gamma_vc},
                        {a.omega_vc, b.omega_vc}}) {
      REQUIRE(std::isfinite(x));
      // |dC/dr| <= 3|C|/r + a radiative bound, with slack.
      CHECK(std::abs(y - x) / h <= 10.0 * (std::abs(x) / r + 10.0));
    }
  }
}

TEST_CASE("templated couplings evaluate in long double") {
  const GeometryT<long double> g{0.25L, std::numbers::pi_v<long double> / 3, 0.3L * std::numbers::pi_v<long double>};
  const auto c = cross_couplings_closed(g, 2 * std::numbers::pi_v<long double>);
  CHECK(static_cast<double>(c.omega_vc) == doctest::Approx(0.65044466060703702168).epsilon(1e-14));
}

TEST_CASE("verify mode throws on mismatch only") {
  CHECK_NOTHROW(all_couplings(make_geometry(0.3, 1.0, 0.5), PhysParams{}, true));
}
