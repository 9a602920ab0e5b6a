#pragma once

// Dense complex linear algebra and tensor-product bookkeeping shared by all
// protocols. Basis convention: level 0 is the ground state of every qubit,
// Fock index equals phonon number, and composite spaces are ordered
// [SC, phonon, spin(s)].

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace phonobus {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-9;
inline constexpr double kPsdTol = 1e-9;

inline double hermiticity_error(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = kHermitianTol) {
  return hermiticity_error(m) <= tol;
}

inline bool all_finite(const ComplexMatrix& m) {
  return m.array().real().isFinite().all() && m.array().imag().isFinite().all();
}

/// Ordered list of subsystem dimensions defining a tensor-product space.
class CompositeSpace {
 public:
  CompositeSpace() = default;
  explicit CompositeSpace(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw std::invalid_argument("CompositeSpace: no subsystems");
    for (int d : dims_) {
      if (d < 2) throw std::invalid_argument("CompositeSpace: subsystem dimension must be >= 2");
    }
  }

  const std::vector<int>& dims() const { return dims_; }
  std::size_t size() const { return dims_.size(); }
  int dim(std::size_t site) const { return dims_.at(site); }
  int total_dim() const {
    return std::accumulate(dims_.begin(), dims_.end(), 1, std::multiplies<>());
  }

  bool operator==(const CompositeSpace&) const = default;

 private:
  std::vector<int> dims_;
};

struct Eigensystem {
  RealVector values;     // ascending
  ComplexMatrix vectors; // column i belongs to values[i]
};

/// Diagonalizes a Hermitian matrix. Throws on non-Hermitian input.
inline Eigensystem eigensystem_hermitian(const ComplexMatrix& m, double tol = kHermitianTol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigensystem_hermitian: matrix not square");
  if (!is_hermitian(m, tol)) throw std::invalid_argument("eigensystem_hermitian: matrix not Hermitian");
  const ComplexMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigensystem_hermitian: solver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Density matrix with the usual physical invariants. The checked constructor
/// enforces Hermiticity, unit trace and positivity within `tol`; integrator
/// outputs go through `unchecked` and are validated by the property tests.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  explicit DensityMatrix(ComplexMatrix m, double tol = kHermitianTol) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) throw std::invalid_argument("DensityMatrix: matrix not square");
    if (!all_finite(m_)) throw std::invalid_argument("DensityMatrix: non-finite entry");
    if (!is_hermitian(m_, tol)) throw std::invalid_argument("DensityMatrix: not Hermitian");
    if (std::abs(m_.trace() - Complex(1.0)) > tol) throw std::invalid_argument("DensityMatrix: trace != 1");
    if (min_eigenvalue() < -tol) throw std::invalid_argument("DensityMatrix: negative eigenvalue");
  }

  static DensityMatrix unchecked(ComplexMatrix m) {
    DensityMatrix r;
    r.m_ = std::move(m);
    return r;
  }

  static DensityMatrix pure(const Ket& psi) {
    const double n = psi.norm();
    if (n == 0.0) throw std::invalid_argument("DensityMatrix::pure: zero vector");
    const Ket u = psi / n;
    return unchecked(u * u.adjoint());
  }

  static DensityMatrix basis(int dim, int level) {
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    m(level, level) = 1.0;
    return unchecked(std::move(m));
  }

  static DensityMatrix maximally_mixed(int dim) {
    return unchecked(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }

  double trace() const { return m_.trace().real(); }
  double purity() const { return (m_ * m_).trace().real(); }
  double hermiticity_error() const { return phonobus::hermiticity_error(m_); }
  double min_eigenvalue() const {
    const ComplexMatrix sym = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
  }

 private:
  ComplexMatrix m_;
};

// ---- Standard operators -------------------------------------------------

inline ComplexMatrix identity(int n) { return ComplexMatrix::Identity(n, n); }

/// |0><1|: lowering operator of a two-level system (level 0 = ground).
inline ComplexMatrix sigma_minus() {
  ComplexMatrix s = ComplexMatrix::Zero(2, 2);
  s(0, 1) = 1.0;
  return s;
}

inline ComplexMatrix sigma_plus() { return sigma_minus().adjoint(); }

inline ComplexMatrix pauli_x() {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

inline ComplexMatrix pauli_y() {
  ComplexMatrix m(2, 2);
  m << 0.0, Complex(0, -1), Complex(0, 1), 0.0;
  return m;
}

/// diag(+1, -1): the ground state |0> has sigma_z = +1.
inline ComplexMatrix pauli_z() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

/// Truncated bosonic annihilation operator on Fock levels 0..n-1.
inline ComplexMatrix annihilation(int n) {
  ComplexMatrix b = ComplexMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) b(k - 1, k) = std::sqrt(static_cast<double>(k));
  return b;
}

inline ComplexMatrix projector(int n, int level) {
  ComplexMatrix p = ComplexMatrix::Zero(n, n);
  p(level, level) = 1.0;
  return p;
}

inline Ket basis_ket(int n, int level) {
  Ket k = Ket::Zero(n);
  k(level) = 1.0;
  return k;
}

// ---- Tensor products ----------------------------------------------------

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline ComplexMatrix kron(std::initializer_list<ComplexMatrix> factors) {
  if (factors.size() == 0) throw std::invalid_argument("kron: no factors");
  auto it = factors.begin();
  ComplexMatrix out = *it++;
  for (; it != factors.end(); ++it) out = kron(out, *it);
  return out;
}

inline Ket kron(const Ket& a, const Ket& b) {
  Ket out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// Places `op` on `site` with identities on every other factor.
inline ComplexMatrix embed(const ComplexMatrix& op, const CompositeSpace& space, std::size_t site) {
  if (site >= space.size()) throw std::invalid_argument("embed: site out of range");
  if (op.rows() != space.dim(site) || op.cols() != space.dim(site)) {
    throw std::invalid_argument("embed: operator dimension " + std::to_string(op.rows()) +
                                " does not match subsystem dimension " + std::to_string(space.dim(site)));
  }
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (std::size_t s = 0; s < space.size(); ++s) {
    out = kron(out, s == site ? op : identity(space.dim(s)));
  }
  return out;
}

/// Reduced density matrix over the subsystems in `keep`, in CompositeSpace order.
inline DensityMatrix partial_trace(const DensityMatrix& rho, const CompositeSpace& space,
                                   std::vector<std::size_t> keep) {
  if (rho.dim() != space.total_dim()) throw std::invalid_argument("partial_trace: state dimension mismatch");
  if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
    throw std::invalid_argument("partial_trace: duplicate site in keep set");
  }
  if (keep.back() >= space.size()) throw std::invalid_argument("partial_trace: site out of range");

  const auto& dims = space.dims();
  const std::size_t n = dims.size();
  std::vector<bool> kept(n, false);
  for (auto s : keep) kept[s] = true;

  // Strides of the full space and of the kept/traced sub-spaces.
  std::vector<int> stride(n);
  int kept_dim = 1;
  int traced_dim = 1;
  std::vector<int> kept_stride(n, 0), traced_stride(n, 0);
  {
    int st = 1;
    for (std::size_t s = n; s-- > 0;) {
      stride[s] = st;
      st *= dims[s];
    }
    for (std::size_t s = n; s-- > 0;) {
      if (kept[s]) {
        kept_stride[s] = kept_dim;
        kept_dim *= dims[s];
      } else {
        traced_stride[s] = traced_dim;
        traced_dim *= dims[s];
      }
    }
  }

  const int total = space.total_dim();
  std::vector<int> kept_index(total), traced_index(total);
  for (int idx = 0; idx < total; ++idx) {
    int k = 0, t = 0;
    for (std::size_t s = 0; s < n; ++s) {
      const int digit = (idx / stride[s]) % dims[s];
      if (kept[s]) k += digit * kept_stride[s];
      else t += digit * traced_stride[s];
    }
    kept_index[idx] = k;
    traced_index[idx] = t;
  }

  ComplexMatrix out = ComplexMatrix::Zero(kept_dim, kept_dim);
  const ComplexMatrix& m = rho.matrix();
  for (int j = 0; j < total; ++j) {
    for (int i = 0; i < total; ++i) {
      if (traced_index[i] == traced_index[j]) out(kept_index[i], kept_index[j]) += m(i, j);
    }
  }
  return DensityMatrix::unchecked(std::move(out));
}

/// Hermitian PSD square root via eigendecomposition. Eigenvalues in
/// [-tol, 0) are clamped to zero; anything more negative is an error.
inline ComplexMatrix hermitian_sqrt(const ComplexMatrix& m, double tol = kPsdTol) {
  const auto es = eigensystem_hermitian(m, std::max(tol, kHermitianTol));
  RealVector roots(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    const double v = es.values(i);
    if (v < -tol) throw std::domain_error("hermitian_sqrt: matrix not PSD (eigenvalue " + std::to_string(v) + ")");
    roots(i) = std::sqrt(std::max(v, 0.0));
  }
  return es.vectors * roots.asDiagonal() * es.vectors.adjoint();
}

/// Uhlmann root fidelity |Tr sqrt(sqrt(rho_i) rho_f sqrt(rho_i))|.
inline double fidelity(const DensityMatrix& rho_i, const DensityMatrix& rho_f) {
  if (rho_i.dim() != rho_f.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  const ComplexMatrix s = hermitian_sqrt(rho_i.matrix());
  ComplexMatrix inner = s * rho_f.matrix() * s;
  inner = 0.5 * (inner + inner.adjoint());
  const double f = std::abs(hermitian_sqrt(inner).trace());
  return std::clamp(f, 0.0, 1.0);
}

/// Tr(rho * op).
inline Complex expectation(const DensityMatrix& rho, const ComplexMatrix& op) {
  if (op.rows() != rho.dim() || op.cols() != rho.dim()) throw std::invalid_argument("expectation: dimension mismatch");
  return (rho.matrix() * op).trace();
}

/// Applies the qubit z-rotation that aligns the phase of rho_f's coherence
/// with rho_i's. For qubits this maximizes the fidelity over local z phases,
/// since Tr(rho_i rho_f) is the only term that depends on the relative phase.
inline DensityMatrix align_relative_phase(const DensityMatrix& rho_f, const DensityMatrix& rho_i,
                                          double min_coherence = 1e-14) {
  if (rho_f.dim() != 2 || rho_i.dim() != 2) throw std::invalid_argument("align_relative_phase: qubit states only");
  const Complex cf = rho_f.matrix()(0, 1);
  const Complex ci = rho_i.matrix()(0, 1);
  if (std::abs(cf) < min_coherence || std::abs(ci) < min_coherence) return rho_f;
  const double theta = std::arg(cf) - std::arg(ci);
  ComplexMatrix u = ComplexMatrix::Identity(2, 2);
  u(1, 1) = std::polar(1.0, theta);
  return DensityMatrix::unchecked(u * rho_f.matrix() * u.adjoint());
}

}  // namespace phonobus
