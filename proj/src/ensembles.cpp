#include "ddlambda/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace ddlambda {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double midpoint(double lo, double width, int k) { return lo + (static_cast<double>(k) + 0.5) * width; }

void require_count(int n, int minimum, const char* what) {
  if (n < minimum) throw std::invalid_argument(std::string(what) + ": too few samples");
}

WeightedEnsemble finish(std::vector<EnsembleMember> members, EnsembleDescriptor descriptor) {
  WeightedEnsemble e;
  e.members = std::move(members);
  e.descriptor = std::move(descriptor);
  for (const auto& m : e.members) {
    if (!(m.weight > 0.0) || !std::isfinite(m.weight))
      throw std::invalid_argument("ensemble: weights must be positive and finite");
    e.q += m.weight;
  }
  if (!(e.q > 0.0)) throw std::invalid_argument("ensemble: empty");
  return e;
}

}  // namespace

std::string kind_name(const EnsembleDescriptor& d) {
  return std::visit(overloaded{
                        [](const SingleGeometry&) { return std::string("single"); },
                        [](const DistanceOscillation&) { return std::string("distance_oscillation"); },
                        [](const ThetaCircle&) { return std::string("theta_circle"); },
                        [](const PhiCircle&) { return std::string("phi_circle"); },
                        [](const Sphere&) { return std::string("sphere"); },
                        [](const SphereWithBreathing&) { return std::string("sphere_with_breathing"); },
                        [](const Flyby&) { return std::string("flyby"); },
                    },
                    d);
}

double WeightedEnsemble::min_r12() const {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& m : members) r = std::min(r, m.geometry.r12);
  return r;
}

std::uint64_t WeightedEnsemble::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  };
  for (const auto& m : members) {
    mix(m.geometry.r12);
    mix(m.geometry.theta);
    mix(m.geometry.phi);
    mix(m.weight);
  }
  return h;
}

WeightedEnsemble single_geometry(double r12, double theta, double phi) {
  return finish({{make_geometry(r12, theta, phi), 1.0}}, SingleGeometry{r12, theta, phi});
}

WeightedEnsemble distance_oscillation(double r_m, double r_a, double theta, double phi, int n, double floor) {
  require_count(n, 1, "distance_oscillation");
  if (r_a < 0.0) throw std::invalid_argument("distance_oscillation: r_a must be non-negative");
  if (r_m - r_a < floor) throw std::invalid_argument("distance_oscillation: r_m - r_a below the separation floor");
  const double d_alpha = kTwoPi / n;
  std::vector<EnsembleMember> members;
  members.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double alpha = midpoint(0.0, d_alpha, k);
    members.push_back({make_geometry(r_m + r_a * std::sin(alpha), theta, phi), d_alpha});
  }
  return finish(std::move(members), DistanceOscillation{r_m, r_a, theta, phi, n});
}

WeightedEnsemble theta_circle(double phi, double r12, int n) {
  require_count(n, 2, "theta_circle");
  if (n % 2 != 0) throw std::invalid_argument("theta_circle: sample count must be even");
  const int half = n / 2;
  const double d_theta = kPi / half;
  std::vector<EnsembleMember> members;
  members.reserve(static_cast<std::size_t>(n));
  for (double branch : {phi, phi + kPi})
    for (int k = 0; k < half; ++k)
      members.push_back({make_geometry(r12, midpoint(0.0, d_theta, k), branch), r12 * d_theta});
  return finish(std::move(members), ThetaCircle{phi, r12, n});
}

WeightedEnsemble phi_circle(double theta, double r12, int n) {
  require_count(n, 1, "phi_circle");
  const double s = sin_pi(theta / kPi);
  if (std::abs(s) < 1e-12) throw std::invalid_argument("phi_circle: degenerate circle (theta = 0 or pi)");
  const double d_phi = kTwoPi / n;
  std::vector<EnsembleMember> members;
  members.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    members.push_back({make_geometry(r12, theta, midpoint(0.0, d_phi, k)), r12 * s * d_phi});
  return finish(std::move(members), PhiCircle{theta, r12, n});
}

namespace {

void append_sphere(std::vector<EnsembleMember>& members, double r12, int n_theta, int n_phi, double extra_weight) {
  const double d_theta = kPi / n_theta;
  const double d_phi = kTwoPi / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    const double theta = midpoint(0.0, d_theta, i);
    const double w = extra_weight * (r12 * d_theta) * (r12 * std::sin(theta) * d_phi);
    for (int j = 0; j < n_phi; ++j) members.push_back({make_geometry(r12, theta, midpoint(0.0, d_phi, j)), w});
  }
}

}  // namespace

WeightedEnsemble sphere(double r12, int n_theta, int n_phi) {
  require_count(n_theta, 2, "sphere");
  require_count(n_phi, 2, "sphere");
  std::vector<EnsembleMember> members;
  members.reserve(static_cast<std::size_t>(n_theta) * static_cast<std::size_t>(n_phi));
  append_sphere(members, r12, n_theta, n_phi, 1.0);
  return finish(std::move(members), Sphere{r12, n_theta, n_phi});
}

WeightedEnsemble sphere_with_breathing(double r_m, double r_a, int n_r, int n_theta, int n_phi, double floor) {
  require_count(n_r, 1, "sphere_with_breathing");
  require_count(n_theta, 2, "sphere_with_breathing");
  require_count(n_phi, 2, "sphere_with_breathing");
  if (r_a < 0.0) throw std::invalid_argument("sphere_with_breathing: r_a must be non-negative");
  if (r_m - r_a < floor) throw std::invalid_argument("sphere_with_breathing: r_m - r_a below the separation floor");
  const double d_alpha = kTwoPi / n_r;
  std::vector<EnsembleMember> members;
  members.reserve(static_cast<std::size_t>(n_r) * n_theta * n_phi);
  for (int k = 0; k < n_r; ++k) {
    const double r = r_m + r_a * std::sin(midpoint(0.0, d_alpha, k));
    append_sphere(members, r, n_theta, n_phi, d_alpha);
  }
  return finish(std::move(members), SphereWithBreathing{r_m, r_a, n_r, n_theta, n_phi});
}

WeightedEnsemble flyby(double r_min, double phi, double z_max, int n, FlybyMeasure measure, double floor) {
  require_count(n, 1, "flyby");
  if (r_min < floor) throw std::invalid_argument("flyby: r_min below the separation floor");
  if (z_max < 0.0) throw std::invalid_argument("flyby: z_max must be non-negative");
  const Flyby descriptor{r_min, phi, z_max, n, measure};
  if (z_max == 0.0) return finish({{make_geometry(r_min, kPi / 2, phi), 1.0}}, descriptor);

  const double dz = 2.0 * z_max / n;
  auto theta_at = [r_min](double z) { return std::acos(z / std::hypot(r_min, z)); };
  std::vector<EnsembleMember> members;
  members.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    // Symmetric midpoints; the centre sample of an odd count is exactly z = 0.
    const double z = (static_cast<double>(2 * k - (n - 1)) / 2.0) * dz;
    const double r = std::hypot(r_min, z);
    double w = dz;
    if (measure == FlybyMeasure::spherical_volume) {
      // r d(theta) over the z-cell.
      w = r * std::abs(theta_at(z - 0.5 * dz) - theta_at(z + 0.5 * dz));
    }
    members.push_back({make_geometry(r, theta_at(z), phi), w});
  }
  return finish(std::move(members), descriptor);
}

WeightedEnsemble make_ensemble(const EnsembleDescriptor& d) {
  return std::visit(
      overloaded{
          [](const SingleGeometry& s) { return single_geometry(s.r12, s.theta, s.phi); },
          [](const DistanceOscillation& s) { return distance_oscillation(s.r_m, s.r_a, s.theta, s.phi, s.n); },
          [](const ThetaCircle& s) { return theta_circle(s.phi, s.r12, s.n); },
          [](const PhiCircle& s) { return phi_circle(s.theta, s.r12, s.n); },
          [](const Sphere& s) { return sphere(s.r12, s.n_theta, s.n_phi); },
          [](const SphereWithBreathing& s) { return sphere_with_breathing(s.r_m, s.r_a, s.n_r, s.n_theta, s.n_phi); },
          [](const Flyby& s) { return flyby(s.r_min, s.phi, s.z_max, s.n, s.measure); },
      },
      d);
}

EnsembleDescriptor refined(const EnsembleDescriptor& d, int factor) {
  return std::visit(overloaded{
                        [](SingleGeometry s) -> EnsembleDescriptor { return s; },
                        [factor](DistanceOscillation s) -> EnsembleDescriptor {
                          s.n *= factor;
                          return s;
                        },
                        [factor](ThetaCircle s) -> EnsembleDescriptor {
                          s.n *= factor;
                          return s;
                        },
                        [factor](PhiCircle s) -> EnsembleDescriptor {
                          s.n *= factor;
                          return s;
                        },
                        [factor](Sphere s) -> EnsembleDescriptor {
                          s.n_theta *= factor;
                          s.n_phi *= factor;
                          return s;
                        },
                        [factor](SphereWithBreathing s) -> EnsembleDescriptor {
                          s.n_r *= factor;
                          s.n_theta *= factor;
                          s.n_phi *= factor;
                          return s;
                        },
                        [factor](Flyby s) -> EnsembleDescriptor {
                          s.n *= factor;
                          return s;
                        },
                    },
                    d);
}

}  // namespace ddlambda
