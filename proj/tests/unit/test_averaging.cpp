#include "ddlambda/averaging.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ddlambda;

namespace {

const PhysParams kBase;
const DensityMatrix kExcited = DensityMatrix::product_state(3, 3);
const TimeGrid kShort{10.0, 0.01};

WeightedEnsemble custom(std::vector<EnsembleMember> members) {
  WeightedEnsemble e;
  e.members = std::move(members);
  for (const auto& m : e.members) e.q += m.weight;
  return e;
}

MetricsOptions base_metrics() {
  MetricsOptions m;
  m.big_delta = kBase.big_delta();
  return m;
}

}  // namespace

TEST_CASE("singleton ensembles reproduce the single-geometry pipeline") {
  const Geometry g = make_geometry(0.2, 1.0, 0.7);
  const Trajectory single = run_single(g, kBase, kExcited, kShort);
  const WeightedEnsemble e = single_geometry(0.2, 1.0, 0.7);
  const Trajectory ac = ac_average(e, kBase, kExcited, kShort).trajectory;
  const Trajectory ap = ap_run(e, kBase, kExcited, kShort).trajectory;
  CHECK(ac.intensity == single.intensity);
  CHECK(ap.intensity == single.intensity);
  const AveragedCouplingSet avg = ap_average_couplings(e, kBase);
  CHECK(avg.mean == all_couplings(g, kBase));
}

TEST_CASE("AC is the weighted mean of member trajectories") {
  const Geometry a = make_geometry(0.15, 1.0, 0.7), b = make_geometry(0.3, 2.0, 0.2);
  const Trajectory ta = run_single(a, kBase, kExcited, kShort);
  const Trajectory tb = run_single(b, kBase, kExcited, kShort);
  const Trajectory two = ac_average(custom({{a, 1.0}, {b, 1.0}}), kBase, kExcited, kShort).trajectory;
  for (std::size_t i = 0; i < two.t.size(); ++i) {
    CHECK(two.intensity[i] == doctest::Approx(0.5 * (ta.intensity[i] + tb.intensity[i])).epsilon(1e-14));
    CHECK(two.intensity[i] >= std::min(ta.intensity[i], tb.intensity[i]) - 1e-15);
    CHECK(two.intensity[i] <= std::max(ta.intensity[i], tb.intensity[i]) + 1e-15);
  }
  const Trajectory same = ac_average(custom({{a, 0.2}, {a, 3.0}, {a, 1.1}}), kBase, kExcited, kShort).trajectory;
  const Trajectory same_ap = ap_run(custom({{a, 0.2}, {a, 3.0}}), kBase, kExcited, kShort).trajectory;
  for (std::size_t i = 0; i < same.t.size(); ++i) {
    CHECK(same.intensity[i] == doctest::Approx(ta.intensity[i]).epsilon(1e-13));
    CHECK(same_ap.intensity[i] == doctest::Approx(ta.intensity[i]).epsilon(1e-9));
  }
}

TEST_CASE("AC result does not depend on thread count or block size") {
  const WeightedEnsemble e = make_ensemble(PhiCircle{0.3 * kPi, 0.1, 6});
  AverageOptions one;
  one.threads = 1;
  AverageOptions many;
  many.threads = 3;
  many.block_size = 4;
  const EnsembleRun a = ac_average(e, kBase, kExcited, kShort, one);
  const EnsembleRun b = ac_average(e, kBase, kExcited, kShort, many);
  CHECK(a.trajectory.intensity == b.trajectory.intensity);
  CHECK(a.members.size() == 6);
  for (std::size_t i = 0; i < a.members.size(); ++i) {
    CHECK(a.members[i].index == i);
    CHECK(a.members[i].stats.accepted_steps > 0);
  }
}

TEST_CASE("AC member failure names the member") {
  AverageOptions o;
  o.integrator.max_steps = 3;
  try {
    ac_average(make_ensemble(PhiCircle{0.3 * kPi, 0.1, 4}), kBase, kExcited, kShort, o);
    FAIL("expected a failure");
  } catch (const SimulationError& e) {
    CHECK(std::string(e.what()).find("ensemble member 0") != std::string::npos);
  }
}

TEST_CASE("AP averages match the quadrature oracle") {
  // Reference: tests/oracles/couplings_oracle.py, adaptive mpmath quadrature.
  const WeightedEnsemble e = distance_oscillation(0.25, 0.2, kPi / 2, kPi / 4, 512);
  const AveragedCouplingSet a = ap_average_couplings(e, kBase);
  CHECK(a.mean.gamma1_dd == doctest::Approx(0.62659007753925108389).epsilon(1e-6));
  CHECK(a.mean.omega1_dd == doctest::Approx(3.9696273840123150301).epsilon(1e-6));
  CHECK(a.mean.gamma2_dd == doctest::Approx(0.62659007753925108389).epsilon(1e-6));
  CHECK(a.mean.omega2_dd == doctest::Approx(3.9696273840123150301).epsilon(1e-6));
  CHECK(a.mean.gamma_vc == doctest::Approx(0.10701799856543035243).epsilon(1e-6));
  CHECK(a.mean.omega_vc == doctest::Approx(10.308154014626034299).epsilon(1e-6));
  CHECK(a.detector_phase.real() == doctest::Approx(0.36060204508340267857).epsilon(1e-6));
  CHECK(a.detector_phase.imag() == doctest::Approx(-0.72769084204581174365).epsilon(1e-6));
}

TEST_CASE("AP averages are bounded and permutation invariant") {
  const WeightedEnsemble e = make_ensemble(Sphere{0.15, 6, 7});
  const AveragedCouplingSet a = ap_average_couplings(e, kBase);
  CHECK(std::abs(a.detector_phase) <= 1.0);
  CHECK(std::abs(a.laser_phase) <= 1.0);
  double lo = 1e300, hi = -1e300;
  for (const auto& m : e.members) {
    const CouplingSet c = all_couplings(m.geometry, kBase);
    lo = std::min(lo, c.omega1_dd);
    hi = std::max(hi, c.omega1_dd);
  }
  CHECK(a.mean.omega1_dd >= lo);
  CHECK(a.mean.omega1_dd <= hi);

  WeightedEnsemble r = e;
  std::reverse(r.members.begin(), r.members.end());
  const AveragedCouplingSet b = ap_average_couplings(r, kBase);
  CHECK(b.mean.gamma1_dd == doctest::Approx(a.mean.gamma1_dd).epsilon(1e-13));
  CHECK(b.mean.omega_vc == doctest::Approx(a.mean.omega_vc).epsilon(1e-12));
}

TEST_CASE("AP phi-circle average is stationary with vanishing cross couplings") {
  const WeightedEnsemble e = make_ensemble(PhiCircle{});
  const AveragedCouplingSet a = ap_average_couplings(e, kBase);
  CHECK(std::abs(a.mean.gamma_vc) < 1e-15);
  CHECK(std::abs(a.mean.omega_vc) < 1e-14);
  const Trajectory t = ap_run(e, kBase, kExcited, TimeGrid{}).trajectory;
  CHECK(long_time_metrics(t, base_metrics()).stationary);
}

TEST_CASE("AP sphere-with-breathing average is stationary") {
  const WeightedEnsemble e = make_ensemble(SphereWithBreathing{});
  const Trajectory t = ap_run(e, kBase, kExcited, TimeGrid{}).trajectory;
  CHECK(long_time_metrics(t, base_metrics()).stationary);
}

TEST_CASE("AC distance oscillation stays oscillatory") {
  for (double r_a : {0.02, 0.14, 0.2}) {
    CAPTURE(r_a);
    const Trajectory t =
        ac_average(make_ensemble(DistanceOscillation{0.25, r_a, kPi / 2, kPi / 4, 64}), kBase, kExcited, TimeGrid{})
            .trajectory;
    CHECK_FALSE(long_time_metrics(t, base_metrics()).stationary);
  }
}

TEST_CASE("sweep") {
  const DistanceOscillation d{0.25, 0.1, kPi / 2, kPi / 4, 8};
  const SweepResult one = sweep(Method::ap, d, kBase, "r_a", {0.05}, SweepMetric::delta_i, kExcited, TimeGrid{},
                                {}, base_metrics());
  REQUIRE(one.rows.size() == 1);
  CHECK(one.rows[0].ok());
  const Trajectory direct = ap_run(distance_oscillation(0.25, 0.05, kPi / 2, kPi / 4, 8), kBase, kExcited, TimeGrid{})
                                .trajectory;
  CHECK(one.rows[0].metrics.delta_i == long_time_metrics(direct, base_metrics()).delta_i);
  CHECK(one.metric_value(one.rows[0]) == one.rows[0].metrics.delta_i);

  const SweepResult mixed = sweep(Method::ap, d, kBase, "r_a", {0.05, 0.3, 0.1}, SweepMetric::i_mean, kExcited,
                                  TimeGrid{}, {}, base_metrics());
  CHECK(mixed.rows[0].ok());
  CHECK_FALSE(mixed.rows[1].ok());
  CHECK(mixed.rows[2].ok());

  const SweepResult rabi = sweep(Method::ap, d, kBase, "rabi1", {0.0}, SweepMetric::stationary, kExcited,
                                 TimeGrid{}, {}, base_metrics());
  CHECK(rabi.rows[0].ok());

  CHECK_THROWS_AS(sweep(Method::ap, d, kBase, "n_phi", {1.0}, SweepMetric::delta_i, kExcited, TimeGrid{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(sweep(Method::single, d, kBase, "r_a", {1.0}, SweepMetric::delta_i, kExcited, TimeGrid{}),
                  std::invalid_argument);
  CHECK(is_valid_axis(Flyby{}, "z_max"));
  CHECK_FALSE(is_valid_axis(Sphere{}, "phi"));
}
