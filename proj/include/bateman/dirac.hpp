#pragma once

// Poisson and Dirac brackets on linear phase-space functions.
//
// Everything here is templated on the scalar so the same code runs in double
// precision and in exact rational arithmetic (boost::rational). Linear
// functions have constant brackets, so no symbolic algebra is needed.

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "bateman/error.hpp"
#include "bateman/model.hpp"

namespace bateman::dirac {

/// Canonical phase space: coordinate q_k pairs with momentum p_k, {q_k, p_k} = 1.
class PhaseSpace {
 public:
  /// `labels` lists every coordinate; `pairs` names (q, p) index pairs.
  PhaseSpace(std::vector<std::string> labels,
             std::vector<std::pair<std::size_t, std::size_t>> pairs)
      : labels_(std::move(labels)), J_(labels_.size() * labels_.size(), 0) {
    std::vector<bool> used(labels_.size(), false);
    for (auto [q, p] : pairs) {
      if (q >= labels_.size() || p >= labels_.size() || q == p || used[q] || used[p]) {
        throw Error(ErrorKind::kInvalidParams, "phase-space pairing is not a perfect matching");
      }
      used[q] = used[p] = true;
      J_[q * dim() + p] = 1;
      J_[p * dim() + q] = -1;
    }
    for (bool u : used) {
      if (!u) throw Error(ErrorKind::kInvalidParams, "unpaired phase-space coordinate");
    }
  }

  /// [Y1, Y2, P_Y1, P_Y2, pi1, pi2, P_pi1, P_pi2]; pi_i are independent
  /// coordinates of the first-order action with their own momenta P_pi_i.
  static PhaseSpace bateman() {
    return PhaseSpace({"Y1", "Y2", "P_Y1", "P_Y2", "pi1", "pi2", "P_pi1", "P_pi2"},
                      {{0, 2}, {1, 3}, {4, 6}, {5, 7}});
  }

  std::size_t dim() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  int symplectic(std::size_t i, std::size_t j) const { return J_[i * dim() + j]; }

  std::size_t index(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] == label) return i;
    }
    throw Error(ErrorKind::kInvalidParams, "unknown phase-space label '" + std::string(label) + "'");
  }

 private:
  std::vector<std::string> labels_;
  std::vector<int> J_;
};

/// f(x) = coeffs . x + constant.
template <class S>
struct LinearPhaseFunction {
  std::vector<S> coeffs;
  S constant{0};

  static LinearPhaseFunction coordinate(const PhaseSpace& ps, std::string_view label) {
    LinearPhaseFunction f;
    f.coeffs.assign(ps.dim(), S(0));
    f.coeffs[ps.index(label)] = S(1);
    return f;
  }

  friend LinearPhaseFunction operator+(LinearPhaseFunction a, const LinearPhaseFunction& b) {
    if (a.coeffs.size() != b.coeffs.size()) {
      throw Error(ErrorKind::kDimensionMismatch, "adding functions on different phase spaces");
    }
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) a.coeffs[i] += b.coeffs[i];
    a.constant += b.constant;
    return a;
  }

  friend LinearPhaseFunction operator*(const S& k, LinearPhaseFunction f) {
    for (auto& c : f.coeffs) c *= k;
    f.constant *= k;
    return f;
  }

  friend LinearPhaseFunction operator-(const LinearPhaseFunction& a, const LinearPhaseFunction& b) {
    return a + S(-1) * b;
  }
};

template <class S>
S poisson_bracket(const LinearPhaseFunction<S>& f, const LinearPhaseFunction<S>& g,
                  const PhaseSpace& ps) {
  if (f.coeffs.size() != ps.dim() || g.coeffs.size() != ps.dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "bracket operands have " + std::to_string(f.coeffs.size()) + " and " +
                    std::to_string(g.coeffs.size()) + " coefficients, phase space has " +
                    std::to_string(ps.dim()));
  }
  S out(0);
  for (std::size_t i = 0; i < ps.dim(); ++i) {
    if (f.coeffs[i] == S(0)) continue;
    for (std::size_t j = 0; j < ps.dim(); ++j) {
      const int J = ps.symplectic(i, j);
      if (J != 0) out += f.coeffs[i] * S(J) * g.coeffs[j];
    }
  }
  return out;
}

/// Row-major square matrix over S; just enough for the constraint algebra.
template <class S>
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<S> data;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size) : n(size), data(size * size, S(0)) {}

  S& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
  const S& operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
};

namespace detail {

template <class S>
double magnitude(const S& x) {
  if constexpr (std::is_floating_point_v<S>) {
    return std::abs(x);
  } else {
    // Exact scalars only need a zero test; any nonzero pivot is usable.
    return x == S(0) ? 0.0 : 1.0;
  }
}

template <class S>
double norm1(const SquareMatrix<S>& M) {
  double best = 0.0;
  for (std::size_t j = 0; j < M.n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < M.n; ++i) col += std::abs(static_cast<double>(M(i, j)));
    best = std::max(best, col);
  }
  return best;
}

/// Gauss-Jordan elimination with partial pivoting (exact for rational S).
template <class S>
SquareMatrix<S> invert(const SquareMatrix<S>& M) {
  const std::size_t n = M.n;
  SquareMatrix<S> a = M;
  SquareMatrix<S> inv(n);
  for (std::size_t i = 0; i < n; ++i) inv(i, i) = S(1);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (magnitude(a(r, col)) > magnitude(a(pivot, col))) pivot = r;
    }
    if (magnitude(a(pivot, col)) == 0.0) {
      throw Error(ErrorKind::kSingularConstraintMatrix,
                  "constraint matrix is singular; constraints are not second class");
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a(pivot, j), a(col, j));
        std::swap(inv(pivot, j), inv(col, j));
      }
    }
    const S p = a(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      a(col, j) /= p;
      inv(col, j) /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a(r, col) == S(0)) continue;
      const S factor = a(r, col);
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= factor * a(col, j);
        inv(r, j) -= factor * inv(col, j);
      }
    }
  }
  return inv;
}

}  // namespace detail

/// Second-class constraint set with its bracket matrix C and C^{-1}.
template <class S>
struct ConstraintSet {
  std::vector<LinearPhaseFunction<S>> constraints;
  SquareMatrix<S> C;
  SquareMatrix<S> C_inv;
};

inline constexpr double kConditionLimit = 1e12;

/// Assembles C_ab = {phi_a, phi_b} and inverts it. Rejects sets whose C is
/// singular (or, in floating point, has condition number above 1e12).
template <class S>
ConstraintSet<S> make_constraint_set(std::vector<LinearPhaseFunction<S>> constraints,
                                     const PhaseSpace& ps) {
  ConstraintSet<S> cs;
  const std::size_t n = constraints.size();
  cs.C = SquareMatrix<S>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cs.C(i, j) = poisson_bracket(constraints[i], constraints[j], ps);
    }
  }
  if (n == 2) {
    // [[0, c], [-c, 0]]^{-1} = [[0, -1/c], [1/c, 0]]
    const S c = cs.C(0, 1);
    if (c == S(0)) {
      throw Error(ErrorKind::kSingularConstraintMatrix,
                  "constraint bracket vanishes; constraints are not second class");
    }
    cs.C_inv = SquareMatrix<S>(2);
    cs.C_inv(0, 1) = S(-1) / c;
    cs.C_inv(1, 0) = S(1) / c;
  } else {
    cs.C_inv = detail::invert(cs.C);
  }
  if constexpr (std::is_floating_point_v<S>) {
    const double cond = detail::norm1(cs.C) * detail::norm1(cs.C_inv);
    if (!(cond < kConditionLimit)) {
      throw Error(ErrorKind::kSingularConstraintMatrix,
                  "constraint matrix condition number " + std::to_string(cond) + " exceeds 1e12");
    }
  }
  cs.constraints = std::move(constraints);
  return cs;
}

/// {f,g}_DB = {f,g} - {f,phi_a} C^{-1}_ab {phi_b,g}
template <class S>
S dirac_bracket(const LinearPhaseFunction<S>& f, const LinearPhaseFunction<S>& g,
                const ConstraintSet<S>& cs, const PhaseSpace& ps) {
  const std::size_t n = cs.constraints.size();
  std::vector<S> f_phi(n), phi_g(n);
  for (std::size_t a = 0; a < n; ++a) {
    f_phi[a] = poisson_bracket(f, cs.constraints[a], ps);
    phi_g[a] = poisson_bracket(cs.constraints[a], g, ps);
  }
  S out = poisson_bracket(f, g, ps);
  for (std::size_t a = 0; a < n; ++a) {
    if (f_phi[a] == S(0)) continue;
    for (std::size_t b = 0; b < n; ++b) out -= f_phi[a] * cs.C_inv(a, b) * phi_g[b];
  }
  return out;
}

/// phi_1 = P_pi1 + (s/2m^2) pi2,  phi_2 = P_pi2 - (s/2m^2) pi1.
template <class S>
std::vector<LinearPhaseFunction<S>> momentum_constraints(const S& m, const S& s,
                                                         const PhaseSpace& ps) {
  using F = LinearPhaseFunction<S>;
  const S k = s / (S(2) * m * m);
  return {F::coordinate(ps, "P_pi1") + k * F::coordinate(ps, "pi2"),
          F::coordinate(ps, "P_pi2") - k * F::coordinate(ps, "pi1")};
}

/// The phi_1, phi_2 pair alone. Its 2x2 matrix is [[0, s/m^2], [-s/m^2, 0]];
/// singular at s = 0.
template <class S>
ConstraintSet<S> build_bateman_constraints(const S& m, const S& s,
                                           const PhaseSpace& ps = PhaseSpace::bateman()) {
  return make_constraint_set(momentum_constraints(m, s, ps), ps);
}

inline ConstraintSet<double> build_bateman_constraints(const ModelParams& p) {
  validate(p);
  return build_bateman_constraints<double>(p.m, p.s);
}

/// All four primary constraints: chi_i = P_Yi - pi_i together with phi_1, phi_2.
/// Second class for every s; this is the set that reproduces the
/// noncommutative bracket table on the 8-dimensional phase space.
template <class S>
ConstraintSet<S> build_full_constraints(const S& m, const S& s,
                                        const PhaseSpace& ps = PhaseSpace::bateman()) {
  using F = LinearPhaseFunction<S>;
  std::vector<F> all{F::coordinate(ps, "P_Y1") - F::coordinate(ps, "pi1"),
                     F::coordinate(ps, "P_Y2") - F::coordinate(ps, "pi2")};
  for (auto& phi : momentum_constraints(m, s, ps)) all.push_back(std::move(phi));
  return make_constraint_set(std::move(all), ps);
}

inline ConstraintSet<double> build_full_constraints(const ModelParams& p) {
  validate(p);
  return build_full_constraints<double>(p.m, p.s);
}

template <class S>
struct BracketEntry {
  std::string name;
  S expected;
  S computed;
  S residual;  // |computed - expected|
  bool pass;
};

inline constexpr double kBracketTolerance = 1e-14;

/// Dirac brackets among {Y1, Y2, pi1, pi2} (all 16 ordered pairs) against
///   {Y_i, Y_j} = (s/m^2) eps_ij,  {Y_i, pi_j} = delta_ij,  {pi_i, pi_j} = 0.
/// Exact scalars pass only on equality; doubles within 1e-14.
template <class S>
std::vector<BracketEntry<S>> verify_bracket_table(const S& m, const S& s) {
  const PhaseSpace ps = PhaseSpace::bateman();
  const auto cs = build_full_constraints(m, s, ps);
  const std::vector<std::string> vars{"Y1", "Y2", "pi1", "pi2"};
  const S nc = s / (m * m);

  auto expected_value = [&](std::size_t i, std::size_t j) -> S {
    const bool yi = i < 2, yj = j < 2;
    const std::size_t a = i % 2, b = j % 2;
    if (yi && yj) return a == b ? S(0) : (a == 0 ? nc : S(-1) * nc);
    if (yi && !yj) return a == b ? S(1) : S(0);
    if (!yi && yj) return a == b ? S(-1) : S(0);
    return S(0);
  };

  std::vector<BracketEntry<S>> out;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    for (std::size_t j = 0; j < vars.size(); ++j) {
      const auto f = LinearPhaseFunction<S>::coordinate(ps, vars[i]);
      const auto g = LinearPhaseFunction<S>::coordinate(ps, vars[j]);
      BracketEntry<S> e;
      e.name = "{" + vars[i] + "," + vars[j] + "}";
      e.expected = expected_value(i, j);
      e.computed = dirac_bracket(f, g, cs, ps);
      const S diff = e.computed - e.expected;
      e.residual = diff < S(0) ? S(-1) * diff : diff;
      if constexpr (std::is_floating_point_v<S>) {
        e.pass = e.residual <= kBracketTolerance;
      } else {
        e.pass = e.residual == S(0);
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

inline std::vector<BracketEntry<double>> verify_bracket_table(const ModelParams& p) {
  validate(p);
  return verify_bracket_table<double>(p.m, p.s);
}

}  // namespace bateman::dirac
