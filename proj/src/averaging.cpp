#include "ddlambda/averaging.hpp"

#include "ddlambda/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ddlambda {

namespace {

void merge(IntegratorStats& into, const IntegratorStats& s) {
  into.accepted_steps += s.accepted_steps;
  into.rejected_steps += s.rejected_steps;
  into.rhs_evaluations += s.rhs_evaluations;
}

void merge(ValidityReport& into, const ValidityReport& v) {
  into.max_trace_drift = std::max(into.max_trace_drift, v.max_trace_drift);
  into.max_hermiticity_defect = std::max(into.max_hermiticity_defect, v.max_hermiticity_defect);
  into.min_eigenvalue = std::min(into.min_eigenvalue, v.min_eigenvalue);
  into.positivity_violations += v.positivity_violations;
}

}  // namespace

Trajectory run_single(const Geometry& g, const PhysParams& p, const DensityMatrix& rho0, const TimeGrid& grid,
                      const AverageOptions& options) {
  const CouplingSet c = all_couplings(g, p, options.verify);
  const SuperoperatorTriple s = build_superoperators(p, c, g);
  return integrate(rho0, s, p.big_delta(), grid, detector_phase(g, p.k0), options.integrator);
}

EnsembleRun ac_average(const WeightedEnsemble& e, const PhysParams& p, const DensityMatrix& rho0,
                       const TimeGrid& grid, const AverageOptions& options) {
  const std::size_t n_members = e.size();
  const std::size_t n_out = grid.size();
  EnsembleRun run;
  run.trajectory.t = grid.times();
  run.members.resize(n_members);
  std::vector<double> sum(n_out, 0.0);

  const std::size_t block = std::max<std::size_t>(options.block_size, 1);
  std::vector<std::vector<double>> series(std::min(block, n_members));
  Op9 final_sum = Op9::Zero();
  for (std::size_t start = 0; start < n_members; start += block) {
    const std::size_t count = std::min(block, n_members - start);
    std::vector<Op9> finals(count);
    parallel_for(count, options.threads, [&](std::size_t k) {
      const std::size_t index = start + k;
      try {
        Trajectory t = run_single(e.members[index].geometry, p, rho0, grid, options);
        series[k] = std::move(t.intensity);
        finals[k] = t.final_state;
        run.members[index] = {index, t.stats, t.validity};
      } catch (const std::exception& ex) {
        std::ostringstream os;
        os << "ensemble member " << index << ": " << ex.what();
        throw SimulationError(os.str());
      }
    });
    // Reduction in member order.
    for (std::size_t k = 0; k < count; ++k) {
      const double w = e.members[start + k].weight;
      for (std::size_t i = 0; i < n_out; ++i) sum[i] += w * series[k][i];
      final_sum += w * finals[k];
    }
  }

  run.trajectory.intensity.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) run.trajectory.intensity[i] = sum[i] / e.q;
  run.trajectory.final_state = final_sum / e.q;
  for (const auto& m : run.members) {
    merge(run.trajectory.stats, m.stats);
    merge(run.trajectory.validity, m.validity);
  }
  return run;
}

AveragedCouplingSet ap_average_couplings(const WeightedEnsemble& e, const PhysParams& p, bool verify) {
  CouplingSet sum;
  cplx detector = 0.0;
  cplx laser = 0.0;
  for (const auto& m : e.members) {
    const CouplingSet c = all_couplings(m.geometry, p, verify);
    sum.gamma1_dd += m.weight * c.gamma1_dd;
    sum.omega1_dd += m.weight * c.omega1_dd;
    sum.gamma2_dd += m.weight * c.gamma2_dd;
    sum.omega2_dd += m.weight * c.omega2_dd;
    sum.gamma_vc += m.weight * c.gamma_vc;
    sum.omega_vc += m.weight * c.omega_vc;
    detector += m.weight * detector_phase(m.geometry, p.k0);
    laser += m.weight * laser_phase(m.geometry, p.k0);
  }
  AveragedCouplingSet out;
  out.mean = {sum.gamma1_dd / e.q, sum.omega1_dd / e.q, sum.gamma2_dd / e.q,
              sum.omega2_dd / e.q, sum.gamma_vc / e.q, sum.omega_vc / e.q};
  out.detector_phase = detector / e.q;
  out.laser_phase = laser / e.q;
  return out;
}

EnsembleRun ap_run(const WeightedEnsemble& e, const PhysParams& p, const DensityMatrix& rho0, const TimeGrid& grid,
                   const AverageOptions& options) {
  const AveragedCouplingSet avg = ap_average_couplings(e, p, options.verify);
  const cplx drive = options.ap_laser_phase == ApLaserPhase::averaged ? avg.laser_phase : cplx(1.0);
  const SuperoperatorTriple s = build_superoperators(p, avg.mean, drive);
  EnsembleRun run;
  run.trajectory = integrate(rho0, s, p.big_delta(), grid, avg.detector_phase, options.integrator);
  run.members.push_back({0, run.trajectory.stats, run.trajectory.validity});
  return run;
}

EnsembleRun run_method(Method method, const WeightedEnsemble& e, const PhysParams& p, const DensityMatrix& rho0,
                       const TimeGrid& grid, const AverageOptions& options) {
  switch (method) {
    case Method::single: {
      if (e.size() != 1) throw std::invalid_argument("method single requires a single geometry");
      EnsembleRun run;
      run.trajectory = run_single(e.members.front().geometry, p, rho0, grid, options);
      run.members.push_back({0, run.trajectory.stats, run.trajectory.validity});
      return run;
    }
    case Method::ac:
      return ac_average(e, p, rho0, grid, options);
    case Method::ap:
      return ap_run(e, p, rho0, grid, options);
  }
  throw std::invalid_argument("unknown method");
}

double SweepResult::metric_value(const SweepRow& row) const {
  switch (metric) {
    case SweepMetric::delta_i:
      return row.metrics.delta_i;
    case SweepMetric::i_mean:
      return row.metrics.i_mean;
    case SweepMetric::stationary:
      return row.metrics.stationary ? 1.0 : 0.0;
  }
  return 0.0;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double* descriptor_field(EnsembleDescriptor& d, const std::string& axis) {
  return std::visit(
      overloaded{
          [&](SingleGeometry& s) -> double* {
            if (axis == "r12") return &s.r12;
            if (axis == "theta") return &s.theta;
            if (axis == "phi") return &s.phi;
            return nullptr;
          },
          [&](DistanceOscillation& s) -> double* {
            if (axis == "r_m") return &s.r_m;
            if (axis == "r_a") return &s.r_a;
            if (axis == "theta") return &s.theta;
            if (axis == "phi") return &s.phi;
            return nullptr;
          },
          [&](ThetaCircle& s) -> double* {
            if (axis == "phi") return &s.phi;
            if (axis == "r12") return &s.r12;
            return nullptr;
          },
          [&](PhiCircle& s) -> double* {
            if (axis == "theta") return &s.theta;
            if (axis == "r12") return &s.r12;
            return nullptr;
          },
          [&](Sphere& s) -> double* { return axis == "r12" ? &s.r12 : nullptr; },
          [&](SphereWithBreathing& s) -> double* {
            if (axis == "r_m") return &s.r_m;
            if (axis == "r_a") return &s.r_a;
            return nullptr;
          },
          [&](Flyby& s) -> double* {
            if (axis == "r_min") return &s.r_min;
            if (axis == "phi") return &s.phi;
            if (axis == "z_max") return &s.z_max;
            return nullptr;
          },
      },
      d);
}

double* param_field(PhysParams& p, const std::string& axis) {
  if (axis == "rabi1") return &p.rabi1;
  if (axis == "rabi2") return &p.rabi2;
  if (axis == "det1") return &p.det1;
  if (axis == "det2") return &p.det2;
  if (axis == "delta_lower") return &p.delta_lower;
  if (axis == "gamma1") return &p.gamma1;
  if (axis == "gamma2") return &p.gamma2;
  return nullptr;
}

}  // namespace

bool is_valid_axis(const EnsembleDescriptor& d, const std::string& axis) {
  EnsembleDescriptor copy = d;
  PhysParams p;
  return descriptor_field(copy, axis) != nullptr || param_field(p, axis) != nullptr;
}

void apply_axis(EnsembleDescriptor& d, PhysParams& p, const std::string& axis, double value) {
  if (double* f = descriptor_field(d, axis)) {
    *f = value;
    return;
  }
  if (double* f = param_field(p, axis)) {
    *f = value;
    return;
  }
  throw std::invalid_argument("sweep: axis '" + axis + "' is not a parameter of scenario " + kind_name(d));
}

SweepResult sweep(Method method, const EnsembleDescriptor& scenario, const PhysParams& p, const std::string& axis,
                  const std::vector<double>& values, SweepMetric metric, const DensityMatrix& rho0,
                  const TimeGrid& grid, const AverageOptions& options, const MetricsOptions& metrics) {
  if (method == Method::single) throw std::invalid_argument("sweep: method must be ac or ap");
  if (!is_valid_axis(scenario, axis))
    throw std::invalid_argument("sweep: axis '" + axis + "' is not a parameter of scenario " + kind_name(scenario));

  SweepResult result;
  result.axis = axis;
  result.metric = metric;
  result.rows.resize(values.size());

  auto run_row = [&](std::size_t i, const AverageOptions& row_options) {
    SweepRow& row = result.rows[i];
    row.value = values[i];
    try {
      EnsembleDescriptor d = scenario;
      PhysParams params = p;
      apply_axis(d, params, axis, values[i]);
      validate_params(params);
      const WeightedEnsemble e = make_ensemble(d);
      row.members = e.size();
      const EnsembleRun run = run_method(method, e, params, rho0, grid, row_options);
      MetricsOptions m = metrics;
      m.big_delta = params.big_delta();
      row.metrics = long_time_metrics(run.trajectory, m);
      row.stats = run.trajectory.stats;
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
  };

  if (method == Method::ap) {
    // One integration per row: parallelize across rows.
    parallel_for(values.size(), options.threads, [&](std::size_t i) { run_row(i, options); });
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) run_row(i, options);
  }
  return result;
}

}  // namespace ddlambda
