#pragma once

// Reduced dynamics of mode a with mode b traced out.
//
// In the interaction picture with respect to H0 the exact second-order form
//   d rho_a/dt = -(i/hbar) Tr_b[H^I(t), rho(0)]
//                -(1/hbar^2) int_0^t ds Tr_b[H^I(t), [H^I(s), rho^I(s)]]
// holds with no approximation. For b initially in vacuum the first term
// vanishes. In exact-closure mode rho^I(s) is supplied by the unitary engine,
// so the only errors are quadrature errors (trapezoid inside, Heun outside).
// Born mode replaces rho^I(s) by rho_a(s) (x) |0><0| and is approximate.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "bateman/closedform.hpp"
#include "bateman/error.hpp"
#include "bateman/fock.hpp"
#include "bateman/model.hpp"
#include "bateman/timeseries.hpp"

namespace bateman::reduced {

using fock::FockSpace;
using fock::Index;
using fock::Matrix;
using fock::Vector;
using SparseMatrix = Eigen::SparseMatrix<Complex>;

/// H^I(t) = -i hbar Gamma (a b e^{-i w t} - a^dag b^dag e^{i w t}),
/// w = 2 omega0 for FreeTerm::kSum and w = 0 for FreeTerm::kDifference
/// (the phases of a and b cancel there and H^I(t) = H_int).
class InteractionHamiltonian {
 public:
  InteractionHamiltonian(const FockSpace& sp, const ModelParams& p, FreeTerm term)
      : space_(sp), hbar_(p.hbar) {
    const DerivedParams dp = derive_params(p);
    coupling_ = p.hbar * dp.Gamma;
    phase_rate_ = term == FreeTerm::kSum ? 2.0 * p.omega0 : 0.0;
    pair_annihilation_ = fock::pair_annihilation(sp).matrix.sparseView();
    pair_creation_ = fock::pair_creation(sp).matrix.sparseView();
  }

  const FockSpace& space() const { return space_; }
  double phase_rate() const { return phase_rate_; }
  double hbar() const { return hbar_; }

  SparseMatrix at(double t) const {
    const Complex ph = std::exp(Complex(0.0, -phase_rate_ * t));
    return Complex(0.0, -coupling_) * ph * pair_annihilation_ +
           Complex(0.0, coupling_) * std::conj(ph) * pair_creation_;
  }

  /// [N_a, H^I(t)] = i hbar Gamma (a b e^{-i w t} + a^dag b^dag e^{i w t}).
  SparseMatrix number_commutator(double t) const {
    const Complex ph = std::exp(Complex(0.0, -phase_rate_ * t));
    return Complex(0.0, coupling_) * (ph * pair_annihilation_ + std::conj(ph) * pair_creation_);
  }

  fock::Operator dense_at(double t) const { return {space_, Matrix(at(t))}; }

  const SparseMatrix& pair_annihilation() const { return pair_annihilation_; }
  const SparseMatrix& pair_creation() const { return pair_creation_; }

 private:
  FockSpace space_;
  double hbar_;
  double coupling_ = 0.0;
  double phase_rate_ = 0.0;
  SparseMatrix pair_annihilation_;
  SparseMatrix pair_creation_;
};

/// Partial trace over b of an arbitrary (not necessarily Hermitian) matrix.
inline Matrix trace_out_b(const Matrix& M, Index dim_a, Index dim_b) {
  if (M.rows() != dim_a * dim_b || M.cols() != dim_a * dim_b) {
    throw Error(ErrorKind::kShapeMismatch, "matrix does not factor as a x b");
  }
  Matrix out = Matrix::Zero(dim_a, dim_a);
  for (Index n = 0; n < dim_a; ++n) {
    for (Index m = 0; m < dim_a; ++m) {
      Complex acc = 0.0;
      for (Index k = 0; k < dim_b; ++k) acc += M(m * dim_b + k, n * dim_b + k);
      out(m, n) = acc;
    }
  }
  return out;
}

/// e^{i H0 t/hbar} H_int e^{-i H0 t/hbar}, by direct conjugation with the
/// diagonal free Hamiltonian.
inline fock::Operator conjugate_free(const fock::Hamiltonian& ham, double t, double hbar) {
  const auto& sp = ham.H0.space;
  Matrix out = ham.HI.matrix;
  for (Index j = 0; j < sp.dim(); ++j) {
    for (Index i = 0; i < sp.dim(); ++i) {
      if (out(i, j) == Complex(0.0)) continue;
      const double de = (ham.H0.matrix(i, i).real() - ham.H0.matrix(j, j).real()) / hbar;
      out(i, j) *= std::exp(Complex(0.0, de * t));
    }
  }
  return {sp, out};
}

struct InteractionCheck {
  fock::Operator h_int;     // -i hbar Gamma (a b - a^dag b^dag)
  double residual = 0.0;    // conjugation vs InteractionHamiltonian::at, interior
  double static_deviation = 0.0;  // conjugation vs h_int itself, interior
};

/// Builds H_int and verifies the interaction-picture form at the given times.
inline InteractionCheck interaction_hamiltonian(const FockSpace& sp, const ModelParams& p,
                                                FreeTerm term, const std::vector<double>& times,
                                                int margin = 1) {
  const auto ham = fock::build_hamiltonian(sp, p, term);
  const InteractionHamiltonian hi(sp, p, term);
  InteractionCheck out{ham.HI, 0.0, 0.0};
  for (double t : times) {
    const auto conj = conjugate_free(ham, t, p.hbar);
    out.residual = std::max(out.residual, fock::interior_max_abs(conj - hi.dense_at(t), margin));
    out.static_deviation = std::max(out.static_deviation, fock::interior_max_abs(conj - ham.HI, margin));
  }
  return out;
}

/// Same check at five random times in [0, 2T] (fixed seed).
inline InteractionCheck interaction_hamiltonian(const FockSpace& sp, const ModelParams& p,
                                                FreeTerm term = FreeTerm::kSum) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> dist(0.0, 2.0 * derive_params(p).T);
  std::vector<double> times(5);
  for (auto& t : times) t = dist(rng);
  return interaction_hamiltonian(sp, p, term, times);
}

/// Max-entry norm of Tr_b[H^I(t), rho_a0 (x) rho_b]. Zero whenever
/// Tr(b rho_b) = Tr(b^dag rho_b) = 0, e.g. for the b vacuum.
inline double first_order_term(const FockSpace& sp, const ModelParams& p,
                               const fock::DensityMatrix& rho_a0, const fock::DensityMatrix& rho_b,
                               double t = 0.0, FreeTerm term = FreeTerm::kSum) {
  if (rho_a0.dim() != sp.dim_a() || rho_b.dim() != sp.dim_b()) {
    throw Error(ErrorKind::kShapeMismatch, "single-mode states do not match the Fock space");
  }
  const auto rho0 = fock::DensityMatrix::product(rho_a0, rho_b);
  const SparseMatrix H = InteractionHamiltonian(sp, p, term).at(t);
  const Matrix comm = H * rho0.matrix() - rho0.matrix() * H;
  return trace_out_b(comm, sp.dim_a(), sp.dim_b()).cwiseAbs().maxCoeff();
}

inline fock::DensityMatrix vacuum_b(const FockSpace& sp) {
  Matrix m = Matrix::Zero(sp.dim_b(), sp.dim_b());
  m(0, 0) = 1.0;
  return fock::DensityMatrix::single_mode(std::move(m));
}

inline double first_order_term(const FockSpace& sp, const ModelParams& p,
                               const fock::DensityMatrix& rho_a0, double t = 0.0,
                               FreeTerm term = FreeTerm::kSum) {
  return first_order_term(sp, p, rho_a0, vacuum_b(sp), t, term);
}

/// rho = F G^dag, with F and G of shape dim x rank.
struct Snapshot {
  Matrix F;
  Matrix G;

  Matrix dense() const { return F * G.adjoint(); }
};

/// Interaction-picture rho^tot(s) on the uniform grid s_k = k ds, append-only.
class HistoryBuffer {
 public:
  HistoryBuffer(FockSpace sp, double ds) : space_(sp), ds_(ds) {
    if (!(ds > 0.0)) throw Error(ErrorKind::kInvalidParams, "history spacing must be positive");
  }

  const FockSpace& space() const { return space_; }
  double ds() const { return ds_; }
  std::size_t size() const { return snapshots_.size(); }
  double covered_until() const { return snapshots_.empty() ? -ds_ : ds_ * static_cast<double>(size() - 1); }

  void push(Snapshot snap) {
    if (snap.F.rows() != space_.dim() || snap.G.rows() != space_.dim() ||
        snap.F.cols() != snap.G.cols()) {
      throw Error(ErrorKind::kShapeMismatch, "snapshot factors do not match the Fock space");
    }
    snapshots_.push_back(std::move(snap));
  }

  const Snapshot& operator[](std::size_t k) const { return snapshots_[k]; }

  /// Grid index of t; throws HistoryGap if t is off-grid or not yet covered.
  std::size_t index_of(double t) const {
    const double x = t / ds_;
    const double k = std::round(x);
    if (t < 0.0 || std::abs(x - k) > 1e-6 || k >= static_cast<double>(size())) {
      throw Error(ErrorKind::kHistoryGap, "history does not cover t = " + std::to_string(t) +
                                              " on its grid (covered until " +
                                              std::to_string(covered_until()) + ")");
    }
    return static_cast<std::size_t>(k);
  }

 private:
  FockSpace space_;
  double ds_;
  std::vector<Snapshot> snapshots_;
};

namespace detail {

/// Spectral ensemble of rho_a0 embedded as rho_a0 (x) |0_b><0_b|:
/// columns of F are lambda_k |phi_k, 0>, of G are |phi_k, 0>.
inline Snapshot embed_with_b_vacuum(const FockSpace& sp, const Matrix& rho_a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho_a);
  std::vector<Index> keep;
  for (Index k = 0; k < es.eigenvalues().size(); ++k) {
    if (std::abs(es.eigenvalues()(k)) > 1e-15) keep.push_back(k);
  }
  Snapshot out{Matrix::Zero(sp.dim(), static_cast<Index>(keep.size())),
               Matrix::Zero(sp.dim(), static_cast<Index>(keep.size()))};
  for (Index c = 0; c < static_cast<Index>(keep.size()); ++c) {
    for (Index m = 0; m < sp.dim_a(); ++m) {
      out.G(sp.index(static_cast<int>(m), 0), c) = es.eigenvectors()(m, keep[c]);
    }
    out.F.col(c) = es.eigenvalues()(keep[c]) * out.G.col(c);
  }
  return out;
}

/// rho_a (x) |0_b><0_b| for an arbitrary (e.g. predicted, slightly
/// non-positive) rho_a: F = rho_a columns placed on n_b = 0, G = identity there.
inline Snapshot embed_product(const FockSpace& sp, const Matrix& rho_a) {
  Snapshot out{Matrix::Zero(sp.dim(), sp.dim_a()), Matrix::Zero(sp.dim(), sp.dim_a())};
  for (Index c = 0; c < sp.dim_a(); ++c) {
    out.G(sp.index(static_cast<int>(c), 0), c) = 1.0;
    for (Index m = 0; m < sp.dim_a(); ++m) out.F(sp.index(static_cast<int>(m), 0), c) = rho_a(m, c);
  }
  return out;
}

/// Phase of e^{i H0 t/hbar} on each basis state.
inline Vector free_phases(const FockSpace& sp, const ModelParams& p, FreeTerm term, double t) {
  const double b_sign = term == FreeTerm::kSum ? 1.0 : -1.0;
  Vector out(sp.dim());
  for (Index i = 0; i < sp.dim(); ++i) {
    const double e = p.omega0 * (sp.na_of(i) + b_sign * sp.nb_of(i));
    out(i) = std::exp(Complex(0.0, e * t));
  }
  return out;
}

/// e^{-i H_a t/hbar} rho e^{+i H_a t/hbar} for a single-mode matrix.
inline Matrix rotate_a(const Matrix& rho, double omega0, double t) {
  Matrix out = rho;
  for (Index n = 0; n < rho.cols(); ++n) {
    for (Index m = 0; m < rho.rows(); ++m) {
      out(m, n) *= std::exp(Complex(0.0, -omega0 * static_cast<double>(m - n) * t));
    }
  }
  return out;
}

inline Matrix trace_out_b_lowrank(const Snapshot& s, const FockSpace& sp) {
  Matrix out = Matrix::Zero(sp.dim_a(), sp.dim_a());
  for (Index k = 0; k < sp.dim_b(); ++k) {
    Matrix Fk(sp.dim_a(), s.F.cols()), Gk(sp.dim_a(), s.G.cols());
    for (Index m = 0; m < sp.dim_a(); ++m) {
      Fk.row(m) = s.F.row(sp.index(static_cast<int>(m), static_cast<int>(k)));
      Gk.row(m) = s.G.row(sp.index(static_cast<int>(m), static_cast<int>(k)));
    }
    out += Fk * Gk.adjoint();
  }
  return out;
}

}  // namespace detail

/// Exact interaction-picture history of rho_a0 (x) |0_b><0_b| on s_k = k ds,
/// k = 0..steps, from the unitary engine.
inline HistoryBuffer exact_history(const FockSpace& sp, const ModelParams& p,
                                   const fock::DensityMatrix& rho_a0, double ds, std::size_t steps,
                                   FreeTerm term = FreeTerm::kSum,
                                   fock::CutoffPolicy policy = fock::CutoffPolicy::kChecked) {
  if (rho_a0.dim() != sp.dim_a() || rho_a0.dim_b() != 1) {
    throw Error(ErrorKind::kShapeMismatch, "rho_a0 does not match mode a of the Fock space");
  }
  const fock::Propagator prop(fock::build_hamiltonian(sp, p, term).H, p.hbar);
  const Snapshot initial = detail::embed_with_b_vacuum(sp, rho_a0.matrix());
  HistoryBuffer history(sp, ds);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double s = ds * static_cast<double>(k);
    const Vector phases = detail::free_phases(sp, p, term, s);
    Snapshot snap{Matrix(sp.dim(), initial.F.cols()), Matrix(sp.dim(), initial.G.cols())};
    for (Index c = 0; c < initial.G.cols(); ++c) {
      const Vector psi = prop.apply(Vector(initial.G.col(c)), s);
      fock::check_cutoff(fock::State{sp, psi}, policy);
      snap.G.col(c) = phases.cwiseProduct(psi);
      // F column is the same vector scaled by its ensemble weight.
      const Complex w = initial.F.col(c).dot(initial.G.col(c));
      snap.F.col(c) = w * snap.G.col(c);
    }
    history.push(std::move(snap));
  }
  return history;
}

/// Running trapezoid sum C(t) = int_0^t [H^I(s), rho^I(s)] ds on a uniform grid.
class KernelAccumulator {
 public:
  KernelAccumulator(const InteractionHamiltonian& hint, double ds)
      : hint_(hint), ds_(ds), n_(hint.space().dim()) {}

  void push(const Snapshot& snap, double s) {
    Matrix f = integrand(snap, s);
    if (count_ == 0) {
      sum_ = f;
      first_ = f;
    } else {
      sum_ += f;
    }
    last_ = std::move(f);
    ++count_;
  }

  /// Swaps the most recent sample for a new one at the same time.
  void replace_last(const Snapshot& snap, double s) {
    if (count_ == 0) throw Error(ErrorKind::kHistoryGap, "no sample to replace");
    Matrix f = integrand(snap, s);
    sum_ += f - last_;
    if (count_ == 1) first_ = f;
    last_ = std::move(f);
  }

  std::size_t count() const { return count_; }

  Matrix integral() const {
    if (count_ <= 1) return Matrix::Zero(n_, n_);
    return ds_ * (sum_ - 0.5 * first_ - 0.5 * last_);
  }

  /// -(1/hbar^2) Tr_b [H^I(t), C(t)]
  Matrix evaluate(double t) const {
    const auto& sp = hint_.space();
    if (count_ <= 1) return Matrix::Zero(sp.dim_a(), sp.dim_a());
    const SparseMatrix H = hint_.at(t);
    // Tr_b[H, .] is linear, so apply it to the three trapezoid pieces.
    const Matrix tr = traced_commutator(H, sum_) - 0.5 * traced_commutator(H, first_) -
                      0.5 * traced_commutator(H, last_);
    return -ds_ * tr / (hint_.hbar() * hint_.hbar());
  }

  /// Tr_b[H, C] touching only the entries that survive the trace.
  static Matrix traced_commutator(const SparseMatrix& H, const Matrix& C, const FockSpace& sp) {
    const Index da = sp.dim_a(), db = sp.dim_b();
    Matrix out = Matrix::Zero(da, da);
    // H is column-major: H(r, c) with r = (m, k).
    for (Index c = 0; c < H.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(H, c); it; ++it) {
        const Index r = it.row();
        const Complex h = it.value();
        // (H C)_{(m,k),(n,k)} gets H(r, c) C(c, (n,k)) with r = (m,k).
        {
          const Index m = r / db, k = r % db;
          for (Index n = 0; n < da; ++n) out(m, n) += h * C(c, n * db + k);
        }
        // (C H)_{(m,k),(n,k)} gets C((m,k), r) H(r, c) with c = (n,k).
        {
          const Index n = c / db, k = c % db;
          for (Index m = 0; m < da; ++m) out(m, n) -= C(m * db + k, r) * h;
        }
      }
    }
    return out;
  }

 private:
  Matrix traced_commutator(const SparseMatrix& H, const Matrix& C) const {
    return traced_commutator(H, C, hint_.space());
  }

  Matrix integrand(const Snapshot& snap, double s) const {
    const SparseMatrix H = hint_.at(s);
    const Matrix HF = H * snap.F;
    const Matrix HG = H * snap.G;
    return HF * snap.G.adjoint() - snap.F * HG.adjoint();
  }

  const InteractionHamiltonian& hint_;
  double ds_;
  Index n_;
  std::size_t count_ = 0;
  Matrix sum_, first_, last_;
};

struct KernelResult {
  Matrix drho_a;  // interaction-picture d rho_a/dt
  double quadrature_error_estimate = 0.0;
};

/// Kernel contribution at grid time t from the stored history.
/// The error estimate compares against the same rule at spacing 2 ds.
inline KernelResult kernel_rhs(const FockSpace& sp, const ModelParams& p, const HistoryBuffer& history,
                               double t, FreeTerm term = FreeTerm::kSum) {
  if (!(history.space() == sp)) throw Error(ErrorKind::kShapeMismatch, "history on a different space");
  const std::size_t k = history.index_of(t);
  const InteractionHamiltonian hint(sp, p, term);
  KernelAccumulator fine(hint, history.ds());
  KernelAccumulator coarse(hint, 2.0 * history.ds());
  for (std::size_t j = 0; j <= k; ++j) {
    const double s = history.ds() * static_cast<double>(j);
    fine.push(history[j], s);
    if (k % 2 == 0 && j % 2 == 0) coarse.push(history[j], s);
  }
  KernelResult out;
  out.drho_a = fine.evaluate(t);
  if (k >= 2 && k % 2 == 0) {
    out.quadrature_error_estimate = (out.drho_a - coarse.evaluate(t)).cwiseAbs().maxCoeff() / 3.0;
  }
  return out;
}

/// d<N_a>/dt = -(1/hbar^2) int ds Tr(rho^I(s) [[N_a, H^I(t)], H^I(s)]) over
/// the history window [t - window, t] (whole history when window < 0).
/// For FreeTerm::kDifference this is -Gamma^2 int Tr(rho [(ab + a^dag b^dag), (ab - a^dag b^dag)]).
inline double na_rate(const FockSpace& sp, const ModelParams& p, const HistoryBuffer& history, double t,
                      FreeTerm term = FreeTerm::kSum, double window = -1.0) {
  if (!(history.space() == sp)) throw Error(ErrorKind::kShapeMismatch, "history on a different space");
  const std::size_t k = history.index_of(t);
  std::size_t j0 = 0;
  if (window >= 0.0) {
    const auto w = static_cast<std::size_t>(std::llround(window / history.ds()));
    j0 = w >= k ? 0 : k - w;
  }
  if (j0 == k) return 0.0;
  const InteractionHamiltonian hint(sp, p, term);
  const SparseMatrix P = hint.number_commutator(t);
  double acc = 0.0;
  for (std::size_t j = j0; j <= k; ++j) {
    const double s = history.ds() * static_cast<double>(j);
    const SparseMatrix Hs = hint.at(s);
    const SparseMatrix M = SparseMatrix(P * Hs) - SparseMatrix(Hs * P);
    const Snapshot& snap = history[j];
    const Complex tr = (snap.G.adjoint() * (M * snap.F)).trace();  // Tr(F G^dag M)
    const double w = (j == j0 || j == k) ? 0.5 : 1.0;
    acc += w * tr.real();
  }
  return -acc * history.ds() / (p.hbar * p.hbar);
}

/// Tr(L_u(rho_a) N_a) with L_u rho = -(i/hbar)[H_a, rho]; vanishes identically.
inline double unitary_part_rate(const ModelParams& p, const Matrix& rho_a) {
  const Index n = rho_a.rows();
  Matrix Ha = Matrix::Zero(n, n);
  Matrix Na = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    Na(i, i) = static_cast<double>(i);
    Ha(i, i) = p.hbar * p.omega0 * static_cast<double>(i);
  }
  const Matrix L = Complex(0.0, -1.0 / p.hbar) * (Ha * rho_a - rho_a * Ha);
  return (L * Na).trace().real();
}

enum class ClosureMode { kExact, kBorn };

struct ReducedOptions {
  ClosureMode mode = ClosureMode::kExact;
  FreeTerm term = FreeTerm::kSum;
  fock::CutoffPolicy policy = fock::CutoffPolicy::kChecked;
};

struct ReducedTrajectory {
  std::vector<Matrix> rho_a;  // Schroedinger picture, one per grid point
  TimeSeries series;  // Na_kernel, Na_oracle, abs_err, purity, entropy,
                      // purity_oracle, entropy_oracle, rate_kernel, rate_analytic,
                      // trace_err, hermiticity_err
};

/// Integrates d rho_a^I/dt = K(t) with Heun steps of size t_end/ceil(t_end/ds)
/// and rotates back with e^{-i H_a t/hbar}. Oracle columns come from the
/// partial trace of the exact unitary evolution.
inline ReducedTrajectory evolve_reduced(const FockSpace& sp, const ModelParams& p,
                                        const fock::DensityMatrix& rho_a0, double t_end, double ds,
                                        const ReducedOptions& opt = {}) {
  if (rho_a0.dim() != sp.dim_a() || rho_a0.dim_b() != 1) {
    throw Error(ErrorKind::kShapeMismatch, "rho_a0 does not match mode a of the Fock space");
  }
  if (!(ds > 0.0) || !(t_end >= 0.0)) {
    throw Error(ErrorKind::kInvalidParams, "need ds > 0 and t_end >= 0");
  }
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / ds - 1e-9));
  const double h = steps == 0 ? ds : t_end / static_cast<double>(steps);

  const fock::Propagator prop(fock::build_hamiltonian(sp, p, opt.term).H, p.hbar);
  const InteractionHamiltonian hint(sp, p, opt.term);
  const Snapshot initial = detail::embed_with_b_vacuum(sp, rho_a0.matrix());
  std::vector<Complex> weights(static_cast<std::size_t>(initial.G.cols()));
  for (Index c = 0; c < initial.G.cols(); ++c) {
    weights[static_cast<std::size_t>(c)] = initial.F.col(c).dot(initial.G.col(c));
  }

  // Exact interaction-picture state at time s (also yields the oracle).
  auto exact_snapshot = [&](double s) {
    const Vector phases = detail::free_phases(sp, p, opt.term, s);
    Snapshot snap{Matrix(sp.dim(), initial.G.cols()), Matrix(sp.dim(), initial.G.cols())};
    for (Index c = 0; c < initial.G.cols(); ++c) {
      const Vector psi = prop.apply(Vector(initial.G.col(c)), s);
      fock::check_cutoff(fock::State{sp, psi}, opt.policy);
      snap.G.col(c) = phases.cwiseProduct(psi);
      snap.F.col(c) = weights[static_cast<std::size_t>(c)] * snap.G.col(c);
    }
    return snap;
  };

  double na0 = 0.0;
  for (Index n = 0; n < sp.dim_a(); ++n) na0 += static_cast<double>(n) * rho_a0.matrix()(n, n).real();

  const std::size_t npts = steps + 1;
  std::vector<double> na_k(npts), na_o(npts), err(npts), pur(npts), ent(npts), pur_o(npts),
      ent_o(npts), rate_k(npts), rate_a(npts), tr_err(npts), herm_err(npts);
  ReducedTrajectory out;
  out.rho_a.reserve(npts);

  KernelAccumulator acc(hint, h);
  Matrix rho_i = rho_a0.matrix();  // interaction picture
  Snapshot snap = exact_snapshot(0.0);
  acc.push(opt.mode == ClosureMode::kExact ? snap : detail::embed_product(sp, rho_i), 0.0);
  Matrix k_now = acc.evaluate(0.0);

  for (std::size_t i = 0;; ++i) {
    const double t = h * static_cast<double>(i);
    const Matrix rho_s = detail::rotate_a(rho_i, p.omega0, t);
    // The oracle: exact interaction-picture state traced over b, rotated out.
    const Matrix oracle = detail::rotate_a(detail::trace_out_b_lowrank(snap, sp), p.omega0, t);
    const auto obs = fock::observables(Matrix(0.5 * (rho_s + rho_s.adjoint())));
    const auto obs_o = fock::observables(Matrix(0.5 * (oracle + oracle.adjoint())));
    na_k[i] = obs.mean_n;
    na_o[i] = obs_o.mean_n;
    err[i] = std::abs(obs.mean_n - obs_o.mean_n);
    pur[i] = rho_s.cwiseAbs2().sum();
    ent[i] = obs.entropy;
    pur_o[i] = obs_o.purity;
    ent_o[i] = obs_o.entropy;
    Complex rk = 0.0;
    for (Index n = 0; n < sp.dim_a(); ++n) rk += static_cast<double>(n) * k_now(n, n);
    rate_k[i] = rk.real();
    rate_a[i] = closedform::occupation_rate(p, na0, 0.0, t, opt.term);
    tr_err[i] = std::abs(rho_s.trace() - Complex(1.0));
    herm_err[i] = (rho_s - rho_s.adjoint()).cwiseAbs().maxCoeff();
    out.rho_a.push_back(rho_s);
    if (i == steps) break;

    const double t_next = t + h;
    snap = exact_snapshot(t_next);
    Matrix k_next;
    if (opt.mode == ClosureMode::kExact) {
      acc.push(snap, t_next);
      k_next = acc.evaluate(t_next);
    } else {
      const Matrix predicted = rho_i + h * k_now;
      acc.push(detail::embed_product(sp, predicted), t_next);
      const Matrix k_pred = acc.evaluate(t_next);
      const Matrix corrected = rho_i + 0.5 * h * (k_now + k_pred);
      acc.replace_last(detail::embed_product(sp, corrected), t_next);
      k_next = acc.evaluate(t_next);
    }
    rho_i += 0.5 * h * (k_now + k_next);
    k_now = std::move(k_next);
  }

  out.series = TimeSeries(0.0, h, npts);
  out.series.add_real("Na_kernel", std::move(na_k));
  out.series.add_real("Na_oracle", std::move(na_o));
  out.series.add_real("abs_err", std::move(err));
  out.series.add_real("purity", std::move(pur));
  out.series.add_real("entropy", std::move(ent));
  out.series.add_real("purity_oracle", std::move(pur_o));
  out.series.add_real("entropy_oracle", std::move(ent_o));
  out.series.add_real("rate_kernel", std::move(rate_k));
  out.series.add_real("rate_analytic", std::move(rate_a));
  out.series.add_real("trace_err", std::move(tr_err));
  out.series.add_real("hermiticity_err", std::move(herm_err));
  return out;
}

}  // namespace bateman::reduced
