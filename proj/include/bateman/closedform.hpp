#pragma once

// Exact two-mode results: Bogoliubov coefficients of a(t) = u a + v b^dag,
// occupation numbers, sector energies and the observable period.

#include <cmath>
#include <complex>
#include <numbers>

#include "bateman/error.hpp"
#include "bateman/model.hpp"
#include "bateman/timeseries.hpp"

namespace bateman::closedform {

struct BogoliubovPair {
  Complex u;
  Complex v;

  /// |u|^2 - |v|^2, equal to 1 for a canonical transformation.
  double canonicality() const { return std::norm(u) - std::norm(v); }
};

/// Time-independent part and oscillation amplitude of <N_a(t)> = N0 - dN cos(2 Omega t).
struct OccupationSplit {
  double N0 = 0.0;
  double DeltaN = 0.0;
};

/// Sign convention for E_b. kLiteral: E_b = hbar omega0 <N_b>. kCasimir:
/// E_b = -hbar omega0 <N_b>, under which E_a + E_b is conserved.
enum class EnergySign { kLiteral, kCasimir };

inline BogoliubovPair bogoliubov(const ModelParams& p, double t,
                                 FreeTerm term = FreeTerm::kSum) {
  const DerivedParams dp = derive_params(p);
  if (term == FreeTerm::kDifference) {
    // H0 commutes with the pair term: a(t) = e^{-i omega0 t}(cosh a + sinh b^dag).
    const Complex phase = std::exp(Complex(0.0, -p.omega0 * t));
    return {phase * std::cosh(dp.Gamma * t), phase * std::sinh(dp.Gamma * t)};
  }
  const double c = std::cos(dp.Omega * t);
  const double s = std::sin(dp.Omega * t);
  return {Complex(c, -(p.omega0 / dp.Omega) * s), Complex((dp.Gamma / dp.Omega) * s, 0.0)};
}

namespace detail {
inline void check_occupations(double na0, double nb0) {
  if (!(na0 >= 0.0) || !(nb0 >= 0.0)) {
    throw Error(ErrorKind::kInvalidParams, "initial occupations must be non-negative");
  }
}
}  // namespace detail

/// <N_a(t)> = Na0 + |v(t)|^2 (Na0 + Nb0 + 1).
inline double occupation_a(const ModelParams& p, double na0, double nb0, double t,
                           FreeTerm term = FreeTerm::kSum) {
  detail::check_occupations(na0, nb0);
  return na0 + std::norm(bogoliubov(p, t, term).v) * (na0 + nb0 + 1.0);
}

/// Mirror image from b(t) = u b + v a^dag.
inline double occupation_b(const ModelParams& p, double na0, double nb0, double t,
                           FreeTerm term = FreeTerm::kSum) {
  detail::check_occupations(na0, nb0);
  return nb0 + std::norm(bogoliubov(p, t, term).v) * (na0 + nb0 + 1.0);
}

/// d<N_a>/dt from the closed form.
inline double occupation_rate(const ModelParams& p, double na0, double nb0, double t,
                              FreeTerm term = FreeTerm::kSum) {
  detail::check_occupations(na0, nb0);
  const DerivedParams dp = derive_params(p);
  const double pairs = na0 + nb0 + 1.0;
  if (term == FreeTerm::kDifference) {
    return dp.Gamma * std::sinh(2.0 * dp.Gamma * t) * pairs;
  }
  return dp.Gamma * dp.Gamma / dp.Omega * std::sin(2.0 * dp.Omega * t) * pairs;
}

inline OccupationSplit split(const ModelParams& p, double na0, double nb0) {
  detail::check_occupations(na0, nb0);
  const DerivedParams dp = derive_params(p);
  const double dn = dp.Gamma * dp.Gamma / (2.0 * dp.Omega * dp.Omega) * (na0 + nb0 + 1.0);
  return {na0 + dn, dn};
}

inline double energy_a(const ModelParams& p, double na0, double nb0, double t) {
  return p.hbar * p.omega0 * occupation_a(p, na0, nb0, t);
}

inline double energy_b(const ModelParams& p, double na0, double nb0, double t,
                       EnergySign sign = EnergySign::kLiteral) {
  const double e = p.hbar * p.omega0 * occupation_b(p, na0, nb0, t);
  return sign == EnergySign::kCasimir ? -e : e;
}

/// Vacuum baseline hbar omega0 Gamma^2 / (2 Omega^2).
inline double vacuum_energy(const ModelParams& p) {
  return p.hbar * p.omega0 * split(p, 0.0, 0.0).N0;
}

inline double period_tau(const ModelParams& p) { return std::numbers::pi / derive_params(p).Omega; }

}  // namespace bateman::closedform
