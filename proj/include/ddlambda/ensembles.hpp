#pragma once

// Weighted geometry sets. Every angular or phase interval is sampled at
// midpoints; weights are the discretized spherical volume elements
//   dV_r = d(alpha) (distance oscillation), dV_theta = r d(theta),
//   dV_phi = r sin(theta) d(phi).

#include "ddlambda/model.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace ddlambda {

struct SingleGeometry {
  double r12 = 0.25;
  double theta = kPi / 2;
  double phi = kPi / 4;
  bool operator==(const SingleGeometry&) const = default;
};

// r12 = r_m + r_a sin(alpha), fixed orientation.
struct DistanceOscillation {
  double r_m = 0.25;
  double r_a = 0.14;
  double theta = kPi / 2;
  double phi = kPi / 4;
  int n = 64;
  bool operator==(const DistanceOscillation&) const = default;
};

// Full circle through the z axis: theta over [0, pi] on the branches phi and
// phi + pi.
struct ThetaCircle {
  double phi = 0.2 * kPi;
  double r12 = 0.1;
  int n = 128;
  bool operator==(const ThetaCircle&) const = default;
};

// Circle at fixed theta, phi over [0, 2pi).
struct PhiCircle {
  double theta = 0.3 * kPi;
  double r12 = 0.1;
  int n = 64;
  bool operator==(const PhiCircle&) const = default;
};

struct Sphere {
  double r12 = 0.1;
  int n_theta = 32;
  int n_phi = 32;
  bool operator==(const Sphere&) const = default;
};

struct SphereWithBreathing {
  double r_m = 0.2;
  double r_a = 0.12;
  int n_r = 16;
  int n_theta = 16;
  int n_phi = 16;
  bool operator==(const SphereWithBreathing&) const = default;
};

enum class FlybyMeasure { uniform_z, spherical_volume };

// Straight line at impact parameter r_min, z in [-z_max, z_max], fixed phi.
struct Flyby {
  double r_min = 0.05;
  double phi = kPi / 4;
  double z_max = 1.0;
  int n = 64;
  FlybyMeasure measure = FlybyMeasure::uniform_z;
  bool operator==(const Flyby&) const = default;
};

using EnsembleDescriptor =
    std::variant<SingleGeometry, DistanceOscillation, ThetaCircle, PhiCircle, Sphere, SphereWithBreathing, Flyby>;

std::string kind_name(const EnsembleDescriptor& d);

struct EnsembleMember {
  Geometry geometry;
  double weight = 0.0;
};

struct WeightedEnsemble {
  std::vector<EnsembleMember> members;
  double q = 0.0;  // sum of weights, accumulated in member order
  EnsembleDescriptor descriptor;

  std::size_t size() const { return members.size(); }
  double min_r12() const;
  // FNV-1a over the bytes of (r12, theta, phi, weight) in member order.
  std::uint64_t hash() const;
};

// Generators. The separation floor is a hard lower bound on every member's
// r12 (std::invalid_argument otherwise).
WeightedEnsemble single_geometry(double r12, double theta, double phi);
WeightedEnsemble distance_oscillation(double r_m, double r_a, double theta, double phi, int n,
                                      double floor = kHardSeparationFloor);
WeightedEnsemble theta_circle(double phi, double r12, int n);
WeightedEnsemble phi_circle(double theta, double r12, int n);
WeightedEnsemble sphere(double r12, int n_theta, int n_phi);
WeightedEnsemble sphere_with_breathing(double r_m, double r_a, int n_r, int n_theta, int n_phi,
                                       double floor = kHardSeparationFloor);
WeightedEnsemble flyby(double r_min, double phi, double z_max, int n,
                       FlybyMeasure measure = FlybyMeasure::uniform_z, double floor = kHardSeparationFloor);

WeightedEnsemble make_ensemble(const EnsembleDescriptor& d);

// Same descriptor with every sample count multiplied by factor.
EnsembleDescriptor refined(const EnsembleDescriptor& d, int factor);

}  // namespace ddlambda
