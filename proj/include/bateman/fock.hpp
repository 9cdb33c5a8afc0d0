#pragma once

// Exact quantum engine on a truncated two-mode Fock space.
//
// Basis |n_a, n_b>, flat index n_a * (nb_max + 1) + n_b. Operators are dense.
// Time evolution diagonalizes H once, block by block: H only couples states
// with equal n_a - n_b, so the connected components of its sparsity graph are
// small and each is diagonalized independently.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <tuple>
#include <vector>

#include "bateman/closedform.hpp"
#include "bateman/error.hpp"
#include "bateman/model.hpp"
#include "bateman/timeseries.hpp"

namespace bateman::fock {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

class FockSpace {
 public:
  FockSpace(int na_max, int nb_max) : na_max_(na_max), nb_max_(nb_max) {
    if (na_max < 0 || nb_max < 0 || (na_max + 1) * (nb_max + 1) < 4) {
      throw Error(ErrorKind::kInvalidParams, "Fock space needs dimension >= 4");
    }
  }

  static FockSpace symmetric(int cutoff) { return FockSpace(cutoff, cutoff); }

  int na_max() const { return na_max_; }
  int nb_max() const { return nb_max_; }
  Index dim_a() const { return na_max_ + 1; }
  Index dim_b() const { return nb_max_ + 1; }
  Index dim() const { return dim_a() * dim_b(); }

  Index index(int na, int nb) const { return static_cast<Index>(na) * dim_b() + nb; }
  int na_of(Index i) const { return static_cast<int>(i / dim_b()); }
  int nb_of(Index i) const { return static_cast<int>(i % dim_b()); }

  /// Both occupations at least `margin` below their cutoffs.
  bool interior(Index i, int margin) const {
    return na_of(i) <= na_max_ - margin && nb_of(i) <= nb_max_ - margin;
  }

  /// On the outermost shell (either occupation at its cutoff).
  bool on_cutoff_shell(Index i) const { return na_of(i) == na_max_ || nb_of(i) == nb_max_; }

  friend bool operator==(const FockSpace&, const FockSpace&) = default;

 private:
  int na_max_;
  int nb_max_;
};

struct Operator {
  FockSpace space;
  Matrix matrix;

  Operator(FockSpace sp, Matrix m) : space(sp), matrix(std::move(m)) {
    if (matrix.rows() != space.dim() || matrix.cols() != space.dim()) {
      throw Error(ErrorKind::kShapeMismatch, "operator shape does not match its Fock space");
    }
  }

  static Operator zero(const FockSpace& sp) { return {sp, Matrix::Zero(sp.dim(), sp.dim())}; }
  static Operator identity(const FockSpace& sp) {
    return {sp, Matrix::Identity(sp.dim(), sp.dim())};
  }

  Operator adjoint() const { return {space, matrix.adjoint()}; }

  double hermiticity_residual() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }
  bool is_hermitian(double tol = 1e-13) const { return hermiticity_residual() <= tol; }

  friend Operator operator+(const Operator& x, const Operator& y) {
    return {x.space, x.matrix + y.matrix};
  }
  friend Operator operator-(const Operator& x, const Operator& y) {
    return {x.space, x.matrix - y.matrix};
  }
  friend Operator operator*(const Operator& x, const Operator& y) {
    return {x.space, x.matrix * y.matrix};
  }
  friend Operator operator*(Complex k, const Operator& x) { return {x.space, k * x.matrix}; }
};

inline Operator commutator(const Operator& x, const Operator& y) {
  return {x.space, x.matrix * y.matrix - y.matrix * x.matrix};
}

/// Largest |M_ij| with both i and j at least `margin` below the cutoffs.
/// Truncation makes [a, a^dag] wrong on the last shell; identities that hold
/// in the infinite space are checked here.
inline double interior_max_abs(const Operator& M, int margin = 1) {
  double worst = 0.0;
  const auto& sp = M.space;
  for (Index j = 0; j < sp.dim(); ++j) {
    if (!sp.interior(j, margin)) continue;
    for (Index i = 0; i < sp.dim(); ++i) {
      if (sp.interior(i, margin)) worst = std::max(worst, std::abs(M.matrix(i, j)));
    }
  }
  return worst;
}

struct State {
  FockSpace space;
  Vector vector;

  State(FockSpace sp, Vector v) : space(sp), vector(std::move(v)) {
    if (vector.size() != space.dim()) {
      throw Error(ErrorKind::kShapeMismatch, "state length does not match its Fock space");
    }
  }

  static State number(const FockSpace& sp, int na, int nb) {
    if (na < 0 || nb < 0 || na > sp.na_max() || nb > sp.nb_max()) {
      throw Error(ErrorKind::kInvalidParams, "number state outside the truncated space");
    }
    Vector v = Vector::Zero(sp.dim());
    v(sp.index(na, nb)) = 1.0;
    return {sp, std::move(v)};
  }

  static State vacuum(const FockSpace& sp) { return number(sp, 0, 0); }

  double norm() const { return vector.norm(); }
};

inline Complex overlap(const State& bra, const State& ket) {
  if (!(bra.space == ket.space)) {
    throw Error(ErrorKind::kShapeMismatch, "overlap of states on different spaces");
  }
  return bra.vector.dot(ket.vector);  // conjugates the first argument
}

inline Complex expectation(const Operator& op, const State& psi) {
  return psi.vector.dot(op.matrix * psi.vector);
}

/// Density matrix on H_a (x) H_b; dim_b == 1 for a single-mode (reduced) state.
class DensityMatrix {
 public:
  static constexpr double kTraceTolerance = 1e-10;
  static constexpr double kHermitianTolerance = 1e-10;
  static constexpr double kEigenvalueFloor = -1e-8;

  DensityMatrix(Matrix m, Index dim_a, Index dim_b) : matrix_(std::move(m)), dim_a_(dim_a), dim_b_(dim_b) {
    check_shape_trace_hermitian();
    if (min_eigenvalue() < kEigenvalueFloor) {
      throw Error(ErrorKind::kInvalidParams, "density matrix is not positive semidefinite");
    }
  }

  static DensityMatrix single_mode(Matrix m) {
    const Index n = m.rows();
    return DensityMatrix(std::move(m), n, 1);
  }

  /// |psi><psi|, positive by construction.
  static DensityMatrix from_state(const State& psi) {
    DensityMatrix out;
    out.matrix_ = psi.vector * psi.vector.adjoint();
    out.dim_a_ = psi.space.dim_a();
    out.dim_b_ = psi.space.dim_b();
    out.check_shape_trace_hermitian();
    return out;
  }

  /// rho_a (x) rho_b in the |n_a, n_b> ordering.
  static DensityMatrix product(const DensityMatrix& rho_a, const DensityMatrix& rho_b) {
    if (rho_a.dim_b() != 1 || rho_b.dim_b() != 1) {
      throw Error(ErrorKind::kShapeMismatch, "product needs two single-mode density matrices");
    }
    const Index na = rho_a.dim(), nb = rho_b.dim();
    Matrix m(na * nb, na * nb);
    for (Index i = 0; i < na; ++i) {
      for (Index j = 0; j < na; ++j) {
        m.block(i * nb, j * nb, nb, nb) = rho_a.matrix()(i, j) * rho_b.matrix();
      }
    }
    return DensityMatrix(std::move(m), na, nb);
  }

  const Matrix& matrix() const { return matrix_; }
  Index dim() const { return matrix_.rows(); }
  Index dim_a() const { return dim_a_; }
  Index dim_b() const { return dim_b_; }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

 private:
  DensityMatrix() = default;

  void check_shape_trace_hermitian() const {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() != dim_a_ * dim_b_) {
      throw Error(ErrorKind::kShapeMismatch, "density matrix shape does not match its factors");
    }
    if (std::abs(matrix_.trace() - Complex(1.0, 0.0)) > kTraceTolerance) {
      throw Error(ErrorKind::kInvalidParams, "density matrix trace differs from 1");
    }
    if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTolerance) {
      throw Error(ErrorKind::kInvalidParams, "density matrix is not Hermitian");
    }
  }

  Matrix matrix_;
  Index dim_a_ = 0;
  Index dim_b_ = 0;
};

struct Ladder {
  Operator a, a_dag, b, b_dag;
};

inline Ladder ladder_ops(const FockSpace& sp) {
  Matrix a = Matrix::Zero(sp.dim(), sp.dim());
  Matrix b = Matrix::Zero(sp.dim(), sp.dim());
  for (int na = 0; na <= sp.na_max(); ++na) {
    for (int nb = 0; nb <= sp.nb_max(); ++nb) {
      const Index col = sp.index(na, nb);
      if (na > 0) a(sp.index(na - 1, nb), col) = std::sqrt(static_cast<double>(na));
      if (nb > 0) b(sp.index(na, nb - 1), col) = std::sqrt(static_cast<double>(nb));
    }
  }
  Operator A{sp, a}, B{sp, b};
  return {A, A.adjoint(), B, B.adjoint()};
}

/// a b with entries sqrt(n_a n_b), built directly rather than as a product.
inline Operator pair_annihilation(const FockSpace& sp) {
  Matrix m = Matrix::Zero(sp.dim(), sp.dim());
  for (int na = 1; na <= sp.na_max(); ++na) {
    for (int nb = 1; nb <= sp.nb_max(); ++nb) {
      m(sp.index(na - 1, nb - 1), sp.index(na, nb)) = std::sqrt(static_cast<double>(na) * nb);
    }
  }
  return {sp, m};
}

inline Operator pair_creation(const FockSpace& sp) { return pair_annihilation(sp).adjoint(); }

inline Operator number_a(const FockSpace& sp) {
  Matrix n = Matrix::Zero(sp.dim(), sp.dim());
  for (Index i = 0; i < sp.dim(); ++i) n(i, i) = sp.na_of(i);
  return {sp, n};
}

inline Operator number_b(const FockSpace& sp) {
  Matrix n = Matrix::Zero(sp.dim(), sp.dim());
  for (Index i = 0; i < sp.dim(); ++i) n(i, i) = sp.nb_of(i);
  return {sp, n};
}

struct Hamiltonian {
  Operator H;   // H0 + HI
  Operator H0;  // hbar omega0 (a^dag a +- b^dag b)
  Operator HI;  // i hbar Gamma (a^dag b^dag - a b)
};

inline Hamiltonian build_hamiltonian(const FockSpace& sp, const ModelParams& p,
                                     FreeTerm term = FreeTerm::kSum) {
  const DerivedParams dp = derive_params(p);
  const double b_sign = term == FreeTerm::kSum ? 1.0 : -1.0;
  Operator H0{sp, p.hbar * p.omega0 * (number_a(sp).matrix + b_sign * number_b(sp).matrix)};
  Operator HI{sp, Complex(0.0, p.hbar * dp.Gamma) *
                      (pair_creation(sp).matrix - pair_annihilation(sp).matrix)};
  return {H0 + HI, H0, HI};
}

struct Su11 {
  Operator k_plus;   // a^dag b^dag
  Operator k_minus;  // a b
  Operator k0;       // (a^dag a + b^dag b + 1) / 2
};

inline Su11 su11_generators(const FockSpace& sp) {
  Operator kp = pair_creation(sp);
  Operator km = pair_annihilation(sp);
  Operator k0{sp, 0.5 * (number_a(sp).matrix + number_b(sp).matrix +
                         Matrix::Identity(sp.dim(), sp.dim()))};
  return {kp, km, k0};
}

/// exp(-i H t / hbar) from a one-time Hermitian eigendecomposition of H.
class Propagator {
 public:
  explicit Propagator(const Operator& H, double hbar = 1.0) : space_(H.space), hbar_(hbar) {
    const double scale = std::max(1.0, H.matrix.cwiseAbs().maxCoeff());
    if (H.hermiticity_residual() > 1e-13 * scale) {
      throw Error(ErrorKind::kInvalidParams, "propagator needs a Hermitian Hamiltonian");
    }
    for (auto& idx : connected_components(H.matrix)) {
      const auto n = static_cast<Index>(idx.size());
      Matrix block(n, n);
      for (Index r = 0; r < n; ++r) {
        for (Index c = 0; c < n; ++c) block(r, c) = H.matrix(idx[r], idx[c]);
      }
      Eigen::SelfAdjointEigenSolver<Matrix> es(block);
      if (es.info() != Eigen::Success) {
        throw Error(ErrorKind::kEigDecompositionFailure, "Hermitian eigensolver did not converge");
      }
      blocks_.push_back({std::move(idx), es.eigenvalues(), es.eigenvectors()});
    }
  }

  const FockSpace& space() const { return space_; }
  std::size_t block_count() const { return blocks_.size(); }

  Vector apply(const Vector& psi0, double t) const {
    Vector out = Vector::Zero(psi0.size());
    for (const auto& blk : blocks_) {
      const auto n = static_cast<Index>(blk.idx.size());
      Vector local(n);
      for (Index r = 0; r < n; ++r) local(r) = psi0(blk.idx[r]);
      Vector c = blk.vectors.adjoint() * local;
      for (Index k = 0; k < n; ++k) c(k) *= std::exp(Complex(0.0, -blk.energies(k) * t / hbar_));
      local = blk.vectors * c;
      for (Index r = 0; r < n; ++r) out(blk.idx[r]) = local(r);
    }
    return out;
  }

  State apply(const State& psi0, double t) const {
    if (!(psi0.space == space_)) {
      throw Error(ErrorKind::kShapeMismatch, "state and propagator live on different spaces");
    }
    return {space_, apply(psi0.vector, t)};
  }

  /// Dense U(t).
  Matrix unitary(double t) const {
    Matrix U = Matrix::Zero(space_.dim(), space_.dim());
    for (const auto& blk : blocks_) U(blk.idx, blk.idx) = local_unitary(blk, t);
    return U;
  }

  /// U(t)^dag O U(t), one pair of invariant blocks at a time.
  Matrix conjugate(const Matrix& O, double t) const {
    std::vector<Matrix> local;
    local.reserve(blocks_.size());
    for (const auto& blk : blocks_) local.push_back(local_unitary(blk, t));
    Matrix out = Matrix::Zero(O.rows(), O.cols());
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      for (std::size_t j = 0; j < blocks_.size(); ++j) {
        const Matrix sub = O(blocks_[i].idx, blocks_[j].idx);
        if (sub.isZero(0.0)) continue;
        out(blocks_[i].idx, blocks_[j].idx) = local[i].adjoint() * sub * local[j];
      }
    }
    return out;
  }

 private:
  struct Block {
    std::vector<Index> idx;
    Eigen::VectorXd energies;
    Matrix vectors;
  };

  Matrix local_unitary(const Block& blk, double t) const {
    const auto n = static_cast<Index>(blk.idx.size());
    Vector phases(n);
    for (Index k = 0; k < n; ++k) phases(k) = std::exp(Complex(0.0, -blk.energies(k) * t / hbar_));
    return blk.vectors * phases.asDiagonal() * blk.vectors.adjoint();
  }

  static std::vector<std::vector<Index>> connected_components(const Matrix& H) {
    const Index n = H.rows();
    std::vector<Index> parent(n);
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < j; ++i) {
        if (H(i, j) != Complex(0.0, 0.0) || H(j, i) != Complex(0.0, 0.0)) parent[find(i)] = find(j);
      }
    }
    std::map<Index, std::vector<Index>> groups;
    for (Index i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<Index>> out;
    for (auto& [root, members] : groups) out.push_back(std::move(members));
    return out;
  }

  FockSpace space_;
  double hbar_;
  std::vector<Block> blocks_;
};

inline State propagate(const Propagator& prop, const State& psi0, double t) { return prop.apply(psi0, t); }

/// One-shot form; builds (and discards) the eigendecomposition.
inline State propagate(const FockSpace& sp, const Operator& H, const State& psi0, double t,
                       double hbar = 1.0) {
  if (!(H.space == sp)) throw Error(ErrorKind::kShapeMismatch, "Hamiltonian on a different space");
  return Propagator(H, hbar).apply(psi0, t);
}

/// U^dag O U with U = exp(-i H t / hbar).
inline Operator heisenberg_op(const Propagator& prop, const Operator& O, double t) {
  if (!(O.space == prop.space())) throw Error(ErrorKind::kShapeMismatch, "operator and propagator spaces differ");
  return {O.space, prop.conjugate(O.matrix, t)};
}

/// Shares eigendecompositions across callers keyed by (space, params, term).
/// Concurrent readers, exclusive writer.
class PropagatorCache {
 public:
  std::shared_ptr<const Propagator> get(const FockSpace& sp, const ModelParams& p, FreeTerm term) {
    const Key key{sp.na_max(), sp.nb_max(), p.m, p.omega0, p.s, p.hbar, static_cast<int>(term)};
    {
      std::shared_lock lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto prop = std::make_shared<const Propagator>(build_hamiltonian(sp, p, term).H, p.hbar);
    std::unique_lock lock(mutex_);
    return cache_.try_emplace(key, std::move(prop)).first->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
  }

 private:
  using Key = std::tuple<int, int, double, double, double, double, int>;
  mutable std::shared_mutex mutex_;
  std::map<Key, std::shared_ptr<const Propagator>> cache_;
};

enum class CutoffPolicy { kChecked, kUnchecked };

inline constexpr double kCutoffPopulationLimit = 1e-10;

/// Probability on the outermost shell.
inline double cutoff_population(const State& psi) {
  double p = 0.0;
  for (Index i = 0; i < psi.space.dim(); ++i) {
    if (psi.space.on_cutoff_shell(i)) p += std::norm(psi.vector(i));
  }
  return p;
}

inline void check_cutoff(const State& psi, CutoffPolicy policy = CutoffPolicy::kChecked) {
  if (policy == CutoffPolicy::kUnchecked) return;
  const double p = cutoff_population(psi);
  if (!(p < kCutoffPopulationLimit)) {
    throw Error(ErrorKind::kCutoffInsufficient,
                "population " + std::to_string(p) + " on the cutoff shell exceeds 1e-10");
  }
}

/// exp(zeta K+ - zeta* K-)|0,0> = sech r sum_n (e^{i phi} tanh r)^n |n,n>,
/// zeta = r e^{i phi}; renormalized after truncation.
inline State squeezed_vacuum(const FockSpace& sp, Complex zeta,
                             CutoffPolicy policy = CutoffPolicy::kChecked) {
  const double r = std::abs(zeta);
  const Complex ratio = r == 0.0 ? Complex(0.0) : std::polar(std::tanh(r), std::arg(zeta));
  const int n_max = std::min(sp.na_max(), sp.nb_max());
  Vector v = Vector::Zero(sp.dim());
  Complex c = 1.0 / std::cosh(r);
  for (int n = 0; n <= n_max; ++n) {
    v(sp.index(n, n)) = c;
    c *= ratio;
  }
  v.normalize();
  State out{sp, std::move(v)};
  check_cutoff(out, policy);
  return out;
}

/// ||(u* a - v b^dag) psi(t)|| for the vacuum evolved to time t. The operator
/// is U a U^dag, which annihilates U|0,0> exactly; deviations measure truncation.
inline double annihilator_check(const FockSpace& sp, const ModelParams& p, double t,
                                FreeTerm term = FreeTerm::kSum) {
  const auto ham = build_hamiltonian(sp, p, term);
  const State psi = Propagator(ham.H, p.hbar).apply(State::vacuum(sp), t);
  const auto bog = closedform::bogoliubov(p, t, term);
  const auto L = ladder_ops(sp);
  const Vector res = std::conj(bog.u) * (L.a.matrix * psi.vector) - bog.v * (L.b_dag.matrix * psi.vector);
  return res.norm();
}

/// Reduced state of mode a from a pure two-mode state: Psi Psi^dag with
/// Psi(n_a, n_b) = psi(index(n_a, n_b)).
inline Matrix reduce_pure(const State& psi) {
  const auto& sp = psi.space;
  Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Psi(
      psi.vector.data(), sp.dim_a(), sp.dim_b());
  return Psi * Psi.adjoint();
}

/// (rho_a)_{mn} = sum_k rho_{(m,k),(n,k)}
inline DensityMatrix partial_trace_b(const DensityMatrix& rho) {
  if (rho.dim_b() < 1 || rho.dim() != rho.dim_a() * rho.dim_b()) {
    throw Error(ErrorKind::kShapeMismatch, "density matrix does not factor as a x b");
  }
  const Index na = rho.dim_a(), nb = rho.dim_b();
  Matrix out = Matrix::Zero(na, na);
  for (Index m = 0; m < na; ++m) {
    for (Index n = 0; n < na; ++n) {
      Complex acc = 0.0;
      for (Index k = 0; k < nb; ++k) acc += rho.matrix()(m * nb + k, n * nb + k);
      out(m, n) = acc;
    }
  }
  return DensityMatrix::single_mode(std::move(out));
}

struct Observables {
  double mean_n = 0.0;
  double purity = 0.0;
  double entropy = 0.0;  // nats
};

inline constexpr double kEntropyEigenFloor = 1e-14;

inline Observables observables(const Matrix& rho_a) {
  Observables out;
  for (Index n = 0; n < rho_a.rows(); ++n) out.mean_n += static_cast<double>(n) * rho_a(n, n).real();
  out.purity = rho_a.cwiseAbs2().sum();  // Tr rho^2 for Hermitian rho
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho_a, Eigen::EigenvaluesOnly);
  for (Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double lam = es.eigenvalues()(k);
    if (lam >= kEntropyEigenFloor) out.entropy -= lam * std::log(lam);
  }
  return out;
}

inline Observables observables(const DensityMatrix& rho_a) {
  if (rho_a.dim_b() != 1) {
    throw Error(ErrorKind::kShapeMismatch, "observables expects a single-mode density matrix");
  }
  return observables(rho_a.matrix());
}

}  // namespace bateman::fock
