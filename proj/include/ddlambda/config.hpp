#pragma once

// Run configuration. The on-disk format is JSON; see README.md for the
// schema. Angles accept numbers (radians) or strings such as "pi/2",
// "0.2pi" and "3pi/2".

#include "ddlambda/averaging.hpp"
#include "ddlambda/dynamics.hpp"
#include "ddlambda/ensembles.hpp"
#include "ddlambda/model.hpp"
#include "ddlambda/observables.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddlambda {

// Raised for schema violations; the message starts with the JSON path of the
// offending value, e.g. "$.scenario.r12: expected a number".
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SweepConfig {
  std::string axis;
  std::vector<double> values;
  SweepMetric metric = SweepMetric::delta_i;
  bool operator==(const SweepConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  // Adds the 81 real Hermitian coordinates of rho to every trajectory row.
  bool dump_states = false;
  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  PhysParams params;
  int initial_a = 3;
  int initial_b = 3;
  EnsembleDescriptor scenario;
  Method method = Method::single;
  TimeGrid grid;
  IntegratorOptions integrator;
  MetricsOptions analysis;
  ApLaserPhase ap_laser_phase = ApLaserPhase::averaged;
  std::optional<SweepConfig> sweep;
  OutputConfig output;
  int threads = 0;
  double separation_floor = kDefaultSeparationFloor;
  bool verify = false;

  bool operator==(const RunConfig&) const = default;

  DensityMatrix initial_state() const { return DensityMatrix::product_state(initial_a, initial_b); }
  AverageOptions average_options() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Canonical JSON form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

// "pi", "pi/2", "0.2pi", "3pi/4", "-pi/3" or a plain decimal.
double parse_angle(const std::string& text);

std::string method_name(Method m);
std::string metric_name(SweepMetric m);

}  // namespace ddlambda
