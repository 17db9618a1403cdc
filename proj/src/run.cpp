#include "ddlambda/run.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace ddlambda {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr double kVerifyStep = 1e-4;
constexpr double kFixedStepTolerance = 1e-6;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string hex(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

json stats_json(const IntegratorStats& s) {
  return {{"accepted_steps", s.accepted_steps}, {"rejected_steps", s.rejected_steps},
          {"rhs_evaluations", s.rhs_evaluations}};
}

json validity_json(const ValidityReport& v) {
  json j = {{"max_trace_drift", v.max_trace_drift},
            {"max_hermiticity_defect", v.max_hermiticity_defect},
            {"positivity_violations", v.positivity_violations},
            {"positive", v.positive()}};
  j["min_eigenvalue"] = std::isfinite(v.min_eigenvalue) ? json(v.min_eigenvalue) : json(nullptr);
  return j;
}

json metrics_json(const LongTimeMetrics& m) {
  return {{"i_max", m.i_max},   {"i_min", m.i_min},         {"delta_i", m.delta_i},
          {"i_mean", m.i_mean}, {"stationary", m.stationary}, {"settled", m.settled},
          {"t_lo", m.t_lo},     {"t_hi", m.t_hi},
          {"threshold", stationarity_threshold(m.i_mean)}};
}

json ensemble_json(const WeightedEnsemble& e) {
  return {{"kind", kind_name(e.descriptor)}, {"members", e.size()}, {"q", e.q},
          {"min_r12", e.min_r12()}, {"hash", hex(e.hash())}};
}

json base_manifest(const RunConfig& c, const std::string& kind) {
  json m;
  m["tool"] = "ddlambda";
  m["version"] = kToolVersion;
  m["artifact"] = kind;
  m["config"] = json::parse(serialize_config(c));
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void collect_warnings(const std::vector<std::string>& in, RunResult& r, std::ostream& log) {
  for (const auto& w : in) {
    r.warnings.push_back(w);
    log << "warning: " << w << '\n';
  }
}

std::string trajectory_csv(const Trajectory& t, bool dump_states) {
  std::string out = "t,I_y";
  if (dump_states)
    for (int k = 0; k < kSuperDim; ++k) out += ",x" + std::to_string(k);
  out += '\n';
  for (std::size_t i = 0; i < t.t.size(); ++i) {
    out += format_double(t.t[i]);
    out += ',';
    out += format_double(t.intensity[i]);
    if (dump_states) {
      const HermitianCoords x = pack_hermitian(t.snapshots[i]);
      for (int k = 0; k < kSuperDim; ++k) {
        out += ',';
        out += format_double(x(k));
      }
    }
    out += '\n';
  }
  return out;
}

// Fixed-step RK4 rerun of one geometry (or the AP average); returns the
// largest pointwise deviation in I_y.
double fixed_step_deviation(const RunConfig& c, const WeightedEnsemble& e, const Trajectory& reference,
                            std::size_t member) {
  const DensityMatrix rho0 = c.initial_state();
  Trajectory check;
  if (c.method == Method::ap) {
    const AveragedCouplingSet avg = ap_average_couplings(e, c.params, true);
    const cplx drive = c.ap_laser_phase == ApLaserPhase::averaged ? avg.laser_phase : cplx(1.0);
    const SuperoperatorTriple s = build_superoperators(c.params, avg.mean, drive);
    check = integrate_fixed_step(rho0, s, c.params.big_delta(), c.grid, avg.detector_phase, kVerifyStep);
  } else {
    const Geometry& g = e.members[member].geometry;
    const SuperoperatorTriple s = build_superoperators(c.params, all_couplings(g, c.params, true), g);
    check = integrate_fixed_step(rho0, s, c.params.big_delta(), c.grid, detector_phase(g, c.params.k0), kVerifyStep);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < check.intensity.size(); ++i)
    worst = std::max(worst, std::abs(check.intensity[i] - reference.intensity[i]));
  return worst;
}

RunResult run_trajectory(const RunConfig& c, std::ostream& log) {
  RunResult r;
  const auto t0 = std::chrono::steady_clock::now();
  const WeightedEnsemble e = make_ensemble(c.scenario);
  if (c.method == Method::single && e.size() != 1)
    throw std::invalid_argument("method single requires scenario kind single");
  collect_warnings(validate_params(c.params, e.min_r12(), c.separation_floor), r, log);

  AverageOptions options = c.average_options();
  if (c.output.dump_states) {
    if (c.method == Method::ac)
      collect_warnings({"dump_states is ignored for AC runs (no single state represents the ensemble)"}, r, log);
    else
      options.integrator.store_snapshots = true;
  }
  const fs::path dir = prepare_dir(c.output.dir);
  log << method_name(c.method) << ": " << e.size() << " member(s), " << c.grid.size() << " output points\n";

  const EnsembleRun result = run_method(c.method, e, c.params, c.initial_state(), c.grid, options);
  const Trajectory& traj = result.trajectory;

  json manifest = base_manifest(c, "trajectory");
  manifest["files"] = {"trajectory.csv"};
  manifest["ensemble"] = ensemble_json(e);
  manifest["integrator_stats"] = stats_json(traj.stats);
  json members = json::array();
  for (const auto& m : result.members)
    members.push_back({{"index", m.index}, {"stats", stats_json(m.stats)}, {"validity", validity_json(m.validity)}});
  manifest["members"] = members;
  manifest["validity"] = validity_json(traj.validity);
  if (!traj.validity.positive()) {
    r.code = ExitCode::validity;
    collect_warnings({"positivity monitor: " + std::to_string(traj.validity.positivity_violations) +
                      " output point(s) with eigenvalues below tolerance"},
                     r, log);
  }

  MetricsOptions mo = c.analysis;
  mo.big_delta = c.params.big_delta();
  try {
    const LongTimeMetrics m = long_time_metrics(traj, mo);
    manifest["metrics"] = metrics_json(m);
    if (!m.settled) collect_warnings({"transient not settled"}, r, log);
  } catch (const std::invalid_argument& ex) {
    manifest["metrics"] = nullptr;
    collect_warnings({std::string("metrics unavailable: ") + ex.what()}, r, log);
  }

  if (c.verify) {
    // For AC the reference is member 0's own adaptive trajectory.
    const double dev = c.method == Method::ac
                           ? fixed_step_deviation(c, e, run_single(e.members[0].geometry, c.params, c.initial_state(),
                                                                   c.grid, options),
                                                  0)
                           : fixed_step_deviation(c, e, traj, 0);
    manifest["verify"] = {{"couplings", "closed form matches contraction"},
                          {"fixed_step", kVerifyStep},
                          {"max_abs_deviation", dev},
                          {"tolerance", kFixedStepTolerance},
                          {"member", c.method == Method::ap ? json(nullptr) : json(0)}};
    log << "verify: fixed-step RK4 max |dI_y| = " << format_double(dev) << '\n';
    if (!(dev <= kFixedStepTolerance)) {
      r.code = ExitCode::verify_mismatch;
      collect_warnings({"verify: fixed-step deviation " + format_double(dev) + " exceeds tolerance"}, r, log);
    }
  }

  write_file(dir / "trajectory.csv", trajectory_csv(traj, c.output.dump_states && c.method != Method::ac));
  r.files.push_back((dir / "trajectory.csv").string());
  manifest["warnings"] = r.warnings;
  manifest["exit_code"] = static_cast<int>(r.code);
  manifest["wall_time_s"] = seconds_since(t0);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  r.files.push_back((dir / "manifest.json").string());
  return r;
}

RunResult run_sweep(const RunConfig& c, std::ostream& log) {
  RunResult r;
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = prepare_dir(c.output.dir);
  const SweepConfig& s = *c.sweep;
  log << "sweep over " << s.axis << ": " << s.values.size() << " value(s), method " << method_name(c.method) << '\n';

  for (double v : s.values) {
    EnsembleDescriptor d = c.scenario;
    PhysParams p = c.params;
    apply_axis(d, p, s.axis, v);
    try {
      collect_warnings(validate_params(p, make_ensemble(d).min_r12(), c.separation_floor), r, log);
    } catch (const std::exception&) {
      // Reported per row by the sweep itself.
    }
  }

  const SweepResult result =
      sweep(c.method, c.scenario, c.params, s.axis, s.values, s.metric, c.initial_state(), c.grid,
            c.average_options(), c.analysis);

  std::string csv = "value,delta_i,i_mean,stationary\n";
  json rows = json::array();
  for (const auto& row : result.rows) {
    csv += format_double(row.value);
    if (row.ok()) {
      csv += ',' + format_double(row.metrics.delta_i) + ',' + format_double(row.metrics.i_mean) + ',' +
             (row.metrics.stationary ? "1" : "0") + '\n';
    } else {
      csv += ",nan,nan,nan\n";
      r.code = ExitCode::integration_failure;
      collect_warnings({"sweep row " + format_double(row.value) + " failed: " + row.error}, r, log);
    }
    json j = {{"value", row.value}, {"members", row.members}, {"stats", stats_json(row.stats)}};
    j["metrics"] = row.ok() ? metrics_json(row.metrics) : json(nullptr);
    j["metric_value"] = row.ok() ? json(result.metric_value(row)) : json(nullptr);
    j["error"] = row.ok() ? json(nullptr) : json(row.error);
    if (row.ok() && !row.metrics.settled)
      collect_warnings({"sweep row " + format_double(row.value) + ": transient not settled"}, r, log);
    rows.push_back(j);
  }
  write_file(dir / "sweep.csv", csv);
  r.files.push_back((dir / "sweep.csv").string());

  json manifest = base_manifest(c, "sweep");
  manifest["files"] = {"sweep.csv"};
  manifest["axis"] = s.axis;
  manifest["metric"] = metric_name(s.metric);
  manifest["rows"] = rows;
  manifest["warnings"] = r.warnings;
  manifest["exit_code"] = static_cast<int>(r.code);
  manifest["wall_time_s"] = seconds_since(t0);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  r.files.push_back((dir / "manifest.json").string());
  return r;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunResult run(const RunConfig& config, std::ostream& log) {
  try {
    return config.sweep ? run_sweep(config, log) : run_trajectory(config, log);
  } catch (const IoError& e) {
    return {ExitCode::io_failure, {}, {}, e.what()};
  } catch (const SimulationError& e) {
    return {ExitCode::integration_failure, {}, {}, e.what()};
  } catch (const std::invalid_argument& e) {
    return {ExitCode::usage, {}, {}, e.what()};
  } catch (const std::out_of_range& e) {
    return {ExitCode::usage, {}, {}, e.what()};
  } catch (const std::exception& e) {
    return {ExitCode::integration_failure, {}, {}, e.what()};
  }
}

RunResult dump_ensemble(const RunConfig& config, std::ostream& log) {
  RunResult r;
  try {
    const WeightedEnsemble e = make_ensemble(config.scenario);
    collect_warnings(validate_params(config.params, e.min_r12(), config.separation_floor), r, log);
    const fs::path dir = prepare_dir(config.output.dir);
    std::string csv = "r,theta,phi,weight\n";
    for (const auto& m : e.members)
      csv += format_double(m.geometry.r12) + ',' + format_double(m.geometry.theta) + ',' +
             format_double(m.geometry.phi) + ',' + format_double(m.weight / e.q) + '\n';
    write_file(dir / "ensemble.csv", csv);
    r.files.push_back((dir / "ensemble.csv").string());
    json manifest = base_manifest(config, "ensemble");
    manifest["files"] = {"ensemble.csv"};
    manifest["ensemble"] = ensemble_json(e);
    manifest["warnings"] = r.warnings;
    write_file(dir / "ensemble_manifest.json", manifest.dump(2) + "\n");
    r.files.push_back((dir / "ensemble_manifest.json").string());
    log << "ensemble " << kind_name(e.descriptor) << ": " << e.size() << " member(s)\n";
  } catch (const IoError& e) {
    return {ExitCode::io_failure, {}, {}, e.what()};
  } catch (const std::exception& e) {
    return {ExitCode::usage, {}, {}, e.what()};
  }
  return r;
}

}  // namespace ddlambda
