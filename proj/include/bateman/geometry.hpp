#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bateman/classical.hpp"
#include "bateman/error.hpp"
#include "bateman/model.hpp"
#include "bateman/timeseries.hpp"

namespace bateman::geometry {

using Point = std::array<double, 2>;

struct Spiral {
  double r0 = 1.0;
  double d = 0.0;
  int chirality = 1;  // +1 direct (expanding), -1 indirect (contracting)

  Spiral() = default;
  Spiral(double r0_, double d_, int chirality_) : r0(r0_), d(d_), chirality(chirality_) {
    if (!(r0 > 0.0) || !std::isfinite(r0)) throw Error(ErrorKind::kInvalidParams, "spiral needs r0 > 0");
    if (!std::isfinite(d)) throw Error(ErrorKind::kInvalidParams, "spiral exponent must be finite");
    if (chirality != 1 && chirality != -1) throw Error(ErrorKind::kInvalidParams, "chirality must be +1 or -1");
  }

  double radius(double phi) const { return r0 * std::exp(chirality * d * phi); }
};

inline Point spiral_point(const Spiral& sp, double phi) {
  const double r = sp.radius(phi);
  return {r * std::cos(phi), r * std::sin(phi)};
}

/// z1 = r0 e^{-Gamma t} e^{-i Omega t} and z2 = r0 e^{Gamma t} e^{i Omega t},
/// evaluated through the classical analytic modes.
/// Channels: complex z1, z2 and real r1, r2.
inline TimeSeries spiral_from_dynamics(const ModelParams& p, double r0, double t0, double dt,
                                       std::size_t n) {
  if (!(r0 > 0.0)) throw Error(ErrorKind::kInvalidParams, "spiral needs r0 > 0");
  if (!(dt > 0.0) || n < 1) throw Error(ErrorKind::kInvalidParams, "time grid needs dt > 0 and n >= 1");
  const DerivedParams dp = derive_params(p);
  const classical::ComplexMode damped{Complex(r0, 0.0), -1};
  const classical::ComplexMode amplified{Complex(r0, 0.0), +1};
  std::vector<Complex> z1(n), z2(n);
  std::vector<double> r1(n), r2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + dt * static_cast<double>(i);
    z1[i] = classical::analytic_mode(dp, damped, t);
    z2[i] = classical::analytic_mode(dp, amplified, t);
    r1[i] = std::abs(z1[i]);
    r2[i] = std::abs(z2[i]);
  }
  TimeSeries out(t0, dt, n);
  out.add_complex("z1", std::move(z1));
  out.add_complex("z2", std::move(z2));
  out.add_real("r1", std::move(r1));
  out.add_real("r2", std::move(r2));
  return out;
}

/// r(nT) = r0 e^{-Gamma n T} for n = 0..n_max, given the product Gamma T.
inline std::vector<double> lattice_samples_gamma_t(double gamma_t, double r0, int n_max) {
  if (!(r0 > 0.0) || n_max < 0 || !std::isfinite(gamma_t)) {
    throw Error(ErrorKind::kInvalidParams, "lattice needs r0 > 0, n_max >= 0, finite Gamma T");
  }
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) out[static_cast<std::size_t>(n)] = r0 * std::exp(-gamma_t * n);
  return out;
}

inline std::vector<double> lattice_samples(const ModelParams& p, double r0, int n_max) {
  const DerivedParams dp = derive_params(p);
  return lattice_samples_gamma_t(dp.Gamma * dp.T, r0, n_max);
}

/// r(t + T)/r(t) = e^{-2 pi d} for the contracting branch, e^{+2 pi d} for the expanding one.
inline double scaling_ratio(double d, int chirality = -1) {
  const double c = chirality >= 0 ? 1.0 : -1.0;
  return std::exp(c * 2.0 * std::numbers::pi * d);
}

// Koch curve

struct KochCurve {
  int level = 0;
  std::vector<Point> points;

  std::size_t segments() const { return points.empty() ? 0 : points.size() - 1; }

  double length() const {
    double total = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
      total += std::hypot(points[i][0] - points[i - 1][0], points[i][1] - points[i - 1][1]);
    }
    return total;
  }
};

inline constexpr double kMaxKochPoints = 1e7;

/// Middle-third replacement on the unit base [0,1] x {0}, bumps on the +y side.
inline KochCurve koch_generate(int level) {
  if (level < 0) throw Error(ErrorKind::kInvalidParams, "Koch level must be >= 0");
  if (std::pow(4.0, level) > kMaxKochPoints) {
    throw Error(ErrorKind::kLevelTooLarge, "Koch level " + std::to_string(level) + " exceeds 1e7 points");
  }
  std::vector<Point> pts{{0.0, 0.0}, {1.0, 0.0}};
  const double c = 0.5, s = std::sqrt(3.0) / 2.0;
  for (int l = 0; l < level; ++l) {
    std::vector<Point> next;
    next.reserve(4 * (pts.size() - 1) + 1);
    next.push_back(pts.front());
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const Point& a = pts[i - 1];
      const Point& b = pts[i];
      const double dx = (b[0] - a[0]) / 3.0, dy = (b[1] - a[1]) / 3.0;
      const Point p1{a[0] + dx, a[1] + dy};
      const Point p3{a[0] + 2.0 * dx, a[1] + 2.0 * dy};
      const Point peak{p1[0] + c * dx - s * dy, p1[1] + s * dx + c * dy};
      next.push_back(p1);
      next.push_back(peak);
      next.push_back(p3);
      next.push_back(b);
    }
    pts = std::move(next);
  }
  return {level, std::move(pts)};
}

/// u_{n,q}(alpha) = (q alpha)^n
inline double koch_scaling(int n, double alpha, double q) { return std::pow(q * alpha, n); }

/// ln(alpha) / ln(scale_base)
inline double fractal_dimension(double alpha, double scale_base) {
  if (!(alpha > 0.0) || !(scale_base > 1.0)) {
    throw Error(ErrorKind::kInvalidParams, "fractal dimension needs alpha > 0 and scale_base > 1");
  }
  return std::log(alpha) / std::log(scale_base);
}

/// Least-squares slope of ln N(eps) against ln(1/eps) for eps = 3^-k,
/// k = k_min..k_max, counting occupied boxes of a grid shifted by `offset`.
/// The small default shift keeps vertices off grid lines.
inline double box_counting_dimension(const std::vector<Point>& pts, int k_min = 1, int k_max = 6,
                                     Point offset = {3.141592653589793e-4, 2.718281828459045e-4}) {
  if (k_min < 0 || k_max <= k_min) throw Error(ErrorKind::kTooFewPoints, "box counting needs two scales");
  if (pts.empty()) throw Error(ErrorKind::kTooFewPoints, "box counting needs points");
  std::vector<double> x, y;
  for (int k = k_min; k <= k_max; ++k) {
    const double inv = std::pow(3.0, k);
    std::set<std::pair<std::int64_t, std::int64_t>> boxes;
    for (const auto& p : pts) {
      boxes.emplace(static_cast<std::int64_t>(std::floor((p[0] + offset[0]) * inv)),
                    static_cast<std::int64_t>(std::floor((p[1] + offset[1]) * inv)));
    }
    x.push_back(std::log(inv));
    y.push_back(std::log(static_cast<double>(boxes.size())));
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Box-counting estimate for a Koch curve, using scales down to its segment length
/// (capped at 3^-6). NaN below level 2.
inline double koch_dimension_estimate(const KochCurve& curve) {
  const int k_max = std::min(curve.level, 6);
  if (k_max < 2) return std::nan("");
  return box_counting_dimension(curve.points, 1, k_max);
}

}  // namespace bateman::geometry
