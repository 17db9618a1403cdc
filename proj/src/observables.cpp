#include "ddlambda/observables.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ddlambda {

cplx detector_phase(const Geometry& g, double k0) {
  const Eigen::Vector3d u = g.unit();
  return std::polar(1.0, -k0 * g.r12 * u.y());
}

double intensity_with_phase(const Op9& rho, cplx phase) {
  double populations = 0.0;
  for (int spectator = 1; spectator <= kLevels; ++spectator) {
    populations += rho(flat_index(3, spectator), flat_index(3, spectator)).real();
    populations += rho(flat_index(spectator, 3), flat_index(spectator, 3)).real();
  }
  const cplx coherence = rho(flat_index(1, 3), flat_index(3, 1));
  return populations + 2.0 * (coherence * phase).real();
}

double intensity_y(const DensityMatrix& rho, const Geometry& g, double k0) {
  return intensity_with_phase(rho.matrix(), detector_phase(g, k0));
}

namespace {

struct Window {
  std::size_t lo = 0;
  std::size_t hi = 0;  // inclusive
};

Window trailing_window(const std::vector<double>& t, double fraction) {
  if (t.size() < 3) throw std::invalid_argument("long_time_metrics: series too short");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("long_time_metrics: window fraction must be in (0, 1]");
  const double t_lo = t.back() - fraction * (t.back() - t.front());
  const auto it = std::lower_bound(t.begin(), t.end(), t_lo - 1e-9 * std::max(1.0, std::abs(t_lo)));
  Window w{static_cast<std::size_t>(it - t.begin()), t.size() - 1};
  if (w.hi - w.lo + 1 < 3) throw std::invalid_argument("long_time_metrics: window too short");
  return w;
}

// Vertex value of the parabola through three equally spaced samples.
double refine(double left, double centre, double right) {
  const double curvature = left - 2.0 * centre + right;
  if (curvature == 0.0) return centre;
  const double offset = 0.5 * (left - right) / curvature;
  if (std::abs(offset) > 1.0) return centre;
  return centre - 0.25 * (left - right) * offset;
}

std::pair<double, double> extrema(const std::vector<double>& s, std::size_t lo, std::size_t hi) {
  std::size_t imax = lo, imin = lo;
  for (std::size_t i = lo; i <= hi; ++i) {
    if (s[i] > s[imax]) imax = i;
    if (s[i] < s[imin]) imin = i;
  }
  double vmax = s[imax], vmin = s[imin];
  if (imax > lo && imax < hi) vmax = std::max(vmax, refine(s[imax - 1], s[imax], s[imax + 1]));
  if (imin > lo && imin < hi) vmin = std::min(vmin, refine(s[imin - 1], s[imin], s[imin + 1]));
  return {vmax, vmin};
}

double trapezoid_mean(const std::vector<double>& t, const std::vector<double>& s, std::size_t lo, std::size_t hi) {
  double area = 0.0;
  for (std::size_t i = lo; i < hi; ++i) area += 0.5 * (s[i] + s[i + 1]) * (t[i + 1] - t[i]);
  return area / (t[hi] - t[lo]);
}

}  // namespace

LongTimeMetrics long_time_metrics(const std::vector<double>& t, const std::vector<double>& series,
                                  const MetricsOptions& options) {
  if (t.size() != series.size()) throw std::invalid_argument("long_time_metrics: grid and series lengths differ");
  const Window w = trailing_window(t, options.window_fraction);
  const double span = t[w.hi] - t[w.lo];
  if (options.big_delta != 0.0) {
    const double period = kTwoPi / std::abs(options.big_delta);
    if (span + 1e-9 < options.min_periods * period) {
      std::ostringstream os;
      os << "long_time_metrics: window of " << span << " covers fewer than " << options.min_periods
         << " periods of 2pi/Delta = " << period;
      throw std::invalid_argument(os.str());
    }
  }

  LongTimeMetrics m;
  m.t_lo = t[w.lo];
  m.t_hi = t[w.hi];
  std::tie(m.i_max, m.i_min) = extrema(series, w.lo, w.hi);
  m.delta_i = std::max(0.0, m.i_max - m.i_min);
  m.i_mean = trapezoid_mean(t, series, w.lo, w.hi);
  m.stationary = m.delta_i < stationarity_threshold(m.i_mean);

  if (!m.stationary) {
    const std::size_t mid = w.lo + (w.hi - w.lo) / 2;
    const auto [max1, min1] = extrema(series, w.lo, mid);
    const auto [max2, min2] = extrema(series, mid, w.hi);
    const double d1 = max1 - min1;
    const double d2 = max2 - min2;
    m.settled = std::abs(d1 - d2) <= options.settle_tolerance * std::max(d1, d2);
  }
  return m;
}

namespace {

cplx windowed_spectrum(const std::vector<double>& t, const std::vector<double>& x, const std::vector<double>& taper,
                       std::size_t lo, double omega) {
  cplx sum = 0.0;
  for (std::size_t k = 0; k < taper.size(); ++k) sum += taper[k] * x[lo + k] * std::polar(1.0, -omega * t[lo + k]);
  return sum;
}

}  // namespace

double relative_phase(const std::vector<double>& t, const std::vector<double>& a, const std::vector<double>& b,
                      double window_fraction) {
  if (a.size() != t.size() || b.size() != t.size())
    throw std::invalid_argument("relative_phase: series lengths differ from the grid");
  const MetricsOptions mopt{window_fraction};
  if (long_time_metrics(t, a, mopt).stationary || long_time_metrics(t, b, mopt).stationary)
    throw std::invalid_argument("relative_phase: non-oscillatory input");

  const Window w = trailing_window(t, window_fraction);
  const std::size_t n = w.hi - w.lo + 1;
  const double span = t[w.hi] - t[w.lo];
  const double dt = span / static_cast<double>(n - 1);

  // Detrended, Hann-tapered copies.
  const double mean_a = trapezoid_mean(t, a, w.lo, w.hi);
  const double mean_b = trapezoid_mean(t, b, w.lo, w.hi);
  std::vector<double> taper(n), da(t.size(), 0.0), db(t.size(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    taper[k] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(n - 1));
    da[w.lo + k] = a[w.lo + k] - mean_a;
    db[w.lo + k] = b[w.lo + k] - mean_b;
  }

  auto cross = [&](double omega) {
    return windowed_spectrum(t, da, taper, w.lo, omega) * std::conj(windowed_spectrum(t, db, taper, w.lo, omega));
  };

  // Coarse scan above the lowest resolvable frequency, then golden-section
  // refinement of |cross|.
  const double resolution = kTwoPi / span;
  const double omega_max = kPi / dt;
  const double step = resolution / 8.0;
  double best_omega = resolution;
  double best = -1.0;
  for (double omega = resolution; omega <= omega_max; omega += step) {
    const double value = std::abs(cross(omega));
    if (value > best) {
      best = value;
      best_omega = omega;
    }
  }
  double lo = std::max(0.5 * resolution, best_omega - step);
  double hi = best_omega + step;
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
  double f1 = std::abs(cross(x1)), f2 = std::abs(cross(x2));
  for (int iter = 0; iter < 60; ++iter) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + golden * (hi - lo);
      f2 = std::abs(cross(x2));
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - golden * (hi - lo);
      f1 = std::abs(cross(x1));
    }
  }
  const double phase = std::arg(cross(0.5 * (lo + hi)));
  return phase <= -kPi ? kPi : phase;
}

}  // namespace ddlambda
