#pragma once

// Classical equations of motion
//   Y1'' - gamma Y1' + omega0^2 Y1 = 0   (amplified)
//   Y2'' + gamma Y2' + omega0^2 Y2 = 0   (damped)
// integrated with fixed-step RK4, plus the exponential normal modes
// z = A exp(sign Gamma t) exp(sign i Omega t) as the analytic reference.

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "bateman/error.hpp"
#include "bateman/model.hpp"
#include "bateman/timeseries.hpp"

namespace bateman::classical {

class ClassicalState {
 public:
  ClassicalState() = default;
  ClassicalState(double y1, double y1dot, double y2, double y2dot)
      : y1_(y1), y1dot_(y1dot), y2_(y2), y2dot_(y2dot) {
    if (!std::isfinite(y1) || !std::isfinite(y1dot) || !std::isfinite(y2) ||
        !std::isfinite(y2dot)) {
      throw Error(ErrorKind::kInvalidParams, "classical state must be finite");
    }
  }

  double y1() const { return y1_; }
  double y1dot() const { return y1dot_; }
  double y2() const { return y2_; }
  double y2dot() const { return y2dot_; }

 private:
  double y1_ = 0.0, y1dot_ = 0.0, y2_ = 0.0, y2dot_ = 0.0;
};

struct ComplexMode {
  Complex amplitude{1.0, 0.0};
  int sign = -1;  // +1 amplified, -1 damped
};

inline Complex analytic_mode(const DerivedParams& dp, const ComplexMode& mode, double t) {
  const double s = mode.sign >= 0 ? 1.0 : -1.0;
  return mode.amplitude * std::exp(s * dp.Gamma * t) *
         std::exp(Complex(0.0, s * dp.Omega * t));
}

/// One classical Runge-Kutta step for y' = f(t, y).
template <class State, class Rhs>
State rk4_step(const State& y, double t, double h, Rhs&& f) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, State(y + 0.5 * h * k1));
  const State k3 = f(t + 0.5 * h, State(y + 0.5 * h * k2));
  const State k4 = f(t + h, State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline constexpr double kMaxStepTimesOmega0 = 0.5;

/// RK4 trajectory on the uniform grid 0 .. t_end (both endpoints included).
/// Uses ceil(t_end/dt) steps, so the effective step is t_end/n <= dt.
/// Channels: y1, y1dot, y2, y2dot.
inline TimeSeries integrate_bateman(const ModelParams& p, const ClassicalState& init,
                                    double t_end, double dt) {
  validate(p);
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorKind::kInvalidParams, "dt must be positive");
  }
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) {
    throw Error(ErrorKind::kInvalidParams, "t_end must be non-negative");
  }
  if (dt * p.omega0 > kMaxStepTimesOmega0) {
    throw Error(ErrorKind::kStepTooLarge,
                "dt * omega0 = " + std::to_string(dt * p.omega0) + " exceeds 0.5");
  }
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  const double h = steps == 0 ? dt : t_end / static_cast<double>(steps);
  const double gamma = p.omega0 * p.omega0 * p.s / p.m;
  const double w2 = p.omega0 * p.omega0;

  using State = Eigen::Vector4d;  // y1, y1dot, y2, y2dot
  auto rhs = [gamma, w2](double, const State& y) {
    return State(y[1], gamma * y[1] - w2 * y[0], y[3], -gamma * y[3] - w2 * y[2]);
  };

  std::vector<double> y1(steps + 1), v1(steps + 1), y2(steps + 1), v2(steps + 1);
  State y(init.y1(), init.y1dot(), init.y2(), init.y2dot());
  for (std::size_t i = 0;; ++i) {
    y1[i] = y[0];
    v1[i] = y[1];
    y2[i] = y[2];
    v2[i] = y[3];
    if (i == steps) break;
    y = rk4_step(y, static_cast<double>(i) * h, h, rhs);
  }

  TimeSeries out(0.0, h, steps + 1);
  out.add_real("y1", std::move(y1));
  out.add_real("y1dot", std::move(v1));
  out.add_real("y2", std::move(y2));
  out.add_real("y2dot", std::move(v2));
  return out;
}

/// Max over interior points of |y'' + friction y' + omega0^2 y| with
/// second-order central differences. Works for real or complex samples.
template <class T>
double linear_ode_residual(std::span<const T> y, double dt, double friction, double omega0) {
  if (y.size() < 5) {
    throw Error(ErrorKind::kTooFewPoints, "finite-difference residual needs at least 5 points");
  }
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < y.size(); ++k) {
    const T d1 = (y[k + 1] - y[k - 1]) / (2.0 * dt);
    const T d2 = (y[k + 1] - 2.0 * y[k] + y[k - 1]) / (dt * dt);
    worst = std::max(worst, static_cast<double>(std::abs(d2 + friction * d1 + omega0 * omega0 * y[k])));
  }
  return worst;
}

/// Self-check of a classical trajectory against both equations of motion,
/// independent of any analytic solution.
inline double ode_residual(const ModelParams& p, const TimeSeries& series) {
  validate(p);
  if (series.size() < 5) {
    throw Error(ErrorKind::kTooFewPoints, "finite-difference residual needs at least 5 points");
  }
  const double gamma = p.omega0 * p.omega0 * p.s / p.m;
  const auto& y1 = series.real("y1");
  const auto& y2 = series.real("y2");
  return std::max(linear_ode_residual<double>(y1, series.dt(), -gamma, p.omega0),
                  linear_ode_residual<double>(y2, series.dt(), gamma, p.omega0));
}

}  // namespace bateman::classical
