#pragma once

// Geometry averaging.
//
// AC (adiabatic case): integrate every member with its own couplings and
// detector phase, then take the weight-normalized sum of the intensity
// series. AP (averaged potential): average the coupling constants and the
// geometric phase factors over the ensemble, then integrate once.

#include "ddlambda/couplings.hpp"
#include "ddlambda/dynamics.hpp"
#include "ddlambda/ensembles.hpp"
#include "ddlambda/observables.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ddlambda {

enum class Method { single, ac, ap };

// How AP treats the drive phase e^{i k0 r12 cos(theta)} on atom B.
enum class ApLaserPhase { averaged, unit };

struct AverageOptions {
  IntegratorOptions integrator;
  int threads = 0;  // 0: hardware concurrency
  bool verify = false;
  // Members integrated per block before the in-order reduction; bounds memory.
  std::size_t block_size = 256;
  ApLaserPhase ap_laser_phase = ApLaserPhase::averaged;
};

struct MemberReport {
  std::size_t index = 0;
  IntegratorStats stats;
  ValidityReport validity;
};

struct EnsembleRun {
  // For AC, stats are summed and validity is the worst case over members.
  Trajectory trajectory;
  std::vector<MemberReport> members;
};

// Single-geometry pipeline: couplings, superoperators, integration, I_y.
Trajectory run_single(const Geometry& g, const PhysParams& p, const DensityMatrix& rho0, const TimeGrid& grid,
                      const AverageOptions& options = {});

// Throws SimulationError naming the member index on any member failure.
EnsembleRun ac_average(const WeightedEnsemble& e, const PhysParams& p, const DensityMatrix& rho0,
                       const TimeGrid& grid, const AverageOptions& options = {});

struct AveragedCouplingSet {
  CouplingSet mean;
  cplx detector_phase = 1.0;  // <e^{-i k0 r12 sin(theta) sin(phi)}>
  cplx laser_phase = 1.0;     // <e^{i k0 r12 cos(theta)}>
  double upper_population_weight = 1.0;
};

AveragedCouplingSet ap_average_couplings(const WeightedEnsemble& e, const PhysParams& p, bool verify = false);

EnsembleRun ap_run(const WeightedEnsemble& e, const PhysParams& p, const DensityMatrix& rho0, const TimeGrid& grid,
                   const AverageOptions& options = {});

EnsembleRun run_method(Method method, const WeightedEnsemble& e, const PhysParams& p, const DensityMatrix& rho0,
                       const TimeGrid& grid, const AverageOptions& options = {});

enum class SweepMetric { delta_i, i_mean, stationary };

struct SweepRow {
  double value = 0.0;
  LongTimeMetrics metrics;
  std::size_t members = 0;
  IntegratorStats stats;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct SweepResult {
  std::string axis;
  SweepMetric metric = SweepMetric::delta_i;
  std::vector<SweepRow> rows;

  double metric_value(const SweepRow& row) const;
};

// Axis names: any numeric field of the descriptor (r12, theta, phi, r_m,
// r_a, r_min, z_max) or of PhysParams (rabi1, rabi2, det1, det2,
// delta_lower, gamma1, gamma2). Throws std::invalid_argument otherwise.
void apply_axis(EnsembleDescriptor& d, PhysParams& p, const std::string& axis, double value);
bool is_valid_axis(const EnsembleDescriptor& d, const std::string& axis);

// Rows are independent; a failing row records its error and the sweep
// continues.
SweepResult sweep(Method method, const EnsembleDescriptor& scenario, const PhysParams& p, const std::string& axis,
                  const std::vector<double>& values, SweepMetric metric, const DensityMatrix& rho0,
                  const TimeGrid& grid, const AverageOptions& options = {}, const MetricsOptions& metrics = {});

}  // namespace ddlambda
