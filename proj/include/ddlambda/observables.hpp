#pragma once

#include "ddlambda/dynamics.hpp"
#include "ddlambda/model.hpp"

#include <vector>

namespace ddlambda {

// Far-field factor e^{i k0 Rhat.(r1 - r2)} for a detector on the y axis:
// e^{-i k0 r12 sin(theta) sin(phi)}.
cplx detector_phase(const Geometry& g, double k0);

// <S33^(1)> + <S33^(2)> + 2 Re[<S31^(1) S13^(2)> * phase]. The w1^2 prefactor
// is dropped.
double intensity_with_phase(const Op9& rho, cplx phase);

double intensity_y(const DensityMatrix& rho, const Geometry& g, double k0);

inline constexpr double kStationarityRelative = 1e-3;
inline constexpr double kStationarityFloor = 1e-6;

// delta_i below this counts as a stationary long-time limit.
inline double stationarity_threshold(double mean_intensity) {
  return kStationarityRelative * std::max(mean_intensity, kStationarityFloor);
}

struct LongTimeMetrics {
  double i_max = 0.0;
  double i_min = 0.0;
  double delta_i = 0.0;
  double i_mean = 0.0;
  bool stationary = true;
  // False when the two halves of the window disagree in delta_i by more than
  // the settle tolerance ("transient not settled").
  bool settled = true;
  double t_lo = 0.0;
  double t_hi = 0.0;
};

struct MetricsOptions {
  double window_fraction = 0.2;
  // When nonzero, the window must cover at least min_periods of 2pi/|Delta|.
  double big_delta = 0.0;
  double min_periods = 2.0;
  double settle_tolerance = 0.05;
  bool operator==(const MetricsOptions&) const = default;
};

// Extrema over the trailing window with local quadratic refinement.
// Throws std::invalid_argument when the window is too short.
LongTimeMetrics long_time_metrics(const std::vector<double>& t, const std::vector<double>& series,
                                  const MetricsOptions& options = {});
inline LongTimeMetrics long_time_metrics(const Trajectory& traj, const MetricsOptions& options = {}) {
  return long_time_metrics(traj.t, traj.intensity, options);
}

// Phase of the cross spectrum of a and b at their dominant common frequency,
// in (-pi, pi]. If b(t) = a(t - tau) the result is omega * tau (mod 2pi).
// Throws std::invalid_argument for mismatched grids or non-oscillatory input.
double relative_phase(const std::vector<double>& t, const std::vector<double>& a,
                      const std::vector<double>& b, double window_fraction = 0.2);
inline double relative_phase(const Trajectory& a, const Trajectory& b, double window_fraction = 0.2) {
  if (a.t != b.t) throw std::invalid_argument("relative_phase: trajectories do not share a grid");
  return relative_phase(a.t, a.intensity, b.intensity, window_fraction);
}

}  // namespace ddlambda
