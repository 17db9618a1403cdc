#pragma once

// Run orchestration and persistence. Every artifact is written next to a
// JSON manifest that names it and records everything needed to rerun it.

#include "ddlambda/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ddlambda {

inline constexpr const char* kToolVersion = "0.1.0";

// Process exit status.
enum class ExitCode : int {
  ok = 0,
  usage = 1,               // bad arguments or config
  integration_failure = 2, // integrator error or failed sweep row
  validity = 3,            // positivity monitor flagged the state
  io_failure = 4,
  verify_mismatch = 5,     // --verify oracle disagreement
};

struct RunResult {
  ExitCode code = ExitCode::ok;
  std::vector<std::string> files;  // written artifacts, manifest last
  std::vector<std::string> warnings;
  std::string error;
};

// Fixed 17-significant-digit formatting used in every CSV.
std::string format_double(double v);

// single / ac / ap: trajectory.csv + manifest.json; with a sweep block:
// sweep.csv + manifest.json. Never throws for run-time failures; they are
// reported through RunResult.
RunResult run(const RunConfig& config, std::ostream& log);

// ensemble.csv (r,theta,phi,weight with weights normalized to sum 1) +
// ensemble_manifest.json.
RunResult dump_ensemble(const RunConfig& config, std::ostream& log);

}  // namespace ddlambda
