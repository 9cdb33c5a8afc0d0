#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "bateman/error.hpp"

namespace bateman {

/// Physical inputs of the dual oscillator. Natural units by default (hbar = 1).
struct ModelParams {
  double m = 1.0;
  double omega0 = 1.0;
  double s = 0.0;  // spin/deformation parameter, any sign
  double hbar = 1.0;
};

/// Every constant the engines need, derived once from ModelParams.
struct DerivedParams {
  double theta = 0.0;   // noncommutativity, hbar s / m^2
  double gamma = 0.0;   // classical damping rate
  double Gamma = 0.0;   // amplitude rate, gamma / 2
  double A = 0.0;       // kinetic coefficient of the light-cone Hamiltonian
  double Omega = 0.0;   // sqrt(omega0^2 - Gamma^2)
  double d = 0.0;       // scaling exponent Gamma / Omega
  double T = 0.0;       // lattice period 2 pi / Omega
  double tau = 0.0;     // observable period pi / Omega
  double ell_d = 0.0;   // time-lattice scale, equal to T
};

/// Sign of the b-mode free term in the two-mode Hamiltonian.
///
/// kSum:        H0 = hbar Omega0 (a^dag a + b^dag b). Generates the oscillatory
///              Bogoliubov solution u = cos - i (Omega0/Omega) sin, v = (Gamma/Omega) sin.
/// kDifference: H0 = hbar Omega0 (a^dag a - b^dag b). H0 commutes with the pair
///              interaction, so the dynamics is pure two-mode squeezing at rate Gamma.
enum class FreeTerm { kSum, kDifference };

inline std::string to_string(FreeTerm term) {
  return term == FreeTerm::kSum ? "sum" : "difference";
}

inline void validate(const ModelParams& p) {
  if (!(p.m > 0.0) || !std::isfinite(p.m)) {
    throw Error(ErrorKind::kInvalidParams, "mass m must be positive and finite");
  }
  if (!(p.omega0 > 0.0) || !std::isfinite(p.omega0)) {
    throw Error(ErrorKind::kInvalidParams, "omega0 must be positive and finite");
  }
  if (!(p.hbar > 0.0) || !std::isfinite(p.hbar)) {
    throw Error(ErrorKind::kInvalidParams, "hbar must be positive and finite");
  }
  if (!std::isfinite(p.s)) {
    throw Error(ErrorKind::kInvalidParams, "s must be finite");
  }
}

/// Throws OverdampedRegime when |Gamma| >= omega0.
inline DerivedParams derive_params(const ModelParams& p) {
  validate(p);
  DerivedParams out;
  out.theta = p.hbar * p.s / (p.m * p.m);
  out.gamma = p.omega0 * p.omega0 * p.s / p.m;
  // Equal to m omega0^2 theta / (2 hbar); halving gamma keeps Gamma == gamma/2 bit-exact.
  out.Gamma = 0.5 * out.gamma;
  out.A = 1.0 / p.m - p.m * p.omega0 * p.omega0 * out.theta * out.theta /
                          (4.0 * p.hbar * p.hbar);
  if (std::abs(out.Gamma) >= p.omega0) {
    throw Error(ErrorKind::kOverdampedRegime,
                "Gamma = " + std::to_string(out.Gamma) +
                    " >= omega0; the oscillation frequency is not real");
  }
  // (omega0 - Gamma)(omega0 + Gamma) keeps Omega^2 + Gamma^2 == omega0^2 tight.
  out.Omega = std::sqrt((p.omega0 - out.Gamma) * (p.omega0 + out.Gamma));
  out.d = out.Gamma / out.Omega;
  out.T = 2.0 * std::numbers::pi / out.Omega;
  out.tau = std::numbers::pi / out.Omega;
  out.ell_d = out.T;
  return out;
}

}  // namespace bateman
