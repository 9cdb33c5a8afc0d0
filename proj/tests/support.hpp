#pragma once

#include <gtest/gtest.h>

#include <random>

#include "bateman/error.hpp"
#include "bateman/model.hpp"

namespace bateman::testing {

inline ModelParams unit_params(double s = 1.0) {
  ModelParams p;
  p.s = s;
  return p;
}

/// Random underdamped parameters with Gamma / omega0 <= max_ratio.
inline ModelParams random_params(std::mt19937_64& rng, double max_ratio = 0.9) {
  std::uniform_real_distribution<double> mass(0.3, 3.0), freq(0.3, 3.0), frac(-max_ratio, max_ratio),
      hb(0.5, 2.0);
  ModelParams p;
  p.m = mass(rng);
  p.omega0 = freq(rng);
  p.hbar = hb(rng);
  // Gamma = omega0^2 s / (2 m) = frac * omega0
  p.s = 2.0 * p.m * frac(rng) / p.omega0;
  return p;
}

template <class F>
ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::kInvalidParams;
}

}  // namespace bateman::testing
