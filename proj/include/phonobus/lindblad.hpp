#pragma once

// Time-dependent Lindblad master equation with an optional cascaded
// (source -> sink) cross term.
//
//   drho/dt = -i[H(t), rho] + sum_j rate_j(t) D[c_j] rho
//             + sqrt(eta k_src(t) k_snk(t)) ( e^{i phi}[s rho, k^+] + e^{-i phi}[k, rho s^+] )
//
// with D[c] rho = c rho c^+ - {c^+ c, rho}/2. Off-diagonal coherences under a
// pure-dephasing dissipator c = n (a projector) decay at rate/2.

#include "phonobus/hilbert.hpp"
#include "phonobus/integrator.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace phonobus::lindblad {

using RateFn = std::function<double(double)>;
using SparseMatrix = Eigen::SparseMatrix<Complex>;

inline RateFn constant(double value) {
  return [value](double) { return value; };
}

struct Dissipator {
  ComplexMatrix op;
  RateFn rate;
};

struct DrivenTerm {
  RateFn envelope;
  ComplexMatrix op;  // Hermitian
};

struct TimeDependentHamiltonian {
  ComplexMatrix static_part;
  std::vector<DrivenTerm> driven;

  explicit TimeDependentHamiltonian(ComplexMatrix h0 = {}) : static_part(std::move(h0)) {}

  TimeDependentHamiltonian& add(RateFn envelope, ComplexMatrix op) {
    driven.push_back({std::move(envelope), std::move(op)});
    return *this;
  }

  int dim() const { return static_cast<int>(static_part.rows()); }

  ComplexMatrix at(double t) const {
    ComplexMatrix h = static_part;
    for (const auto& d : driven) h += d.envelope(t) * d.op;
    return h;
  }
};

struct CascadeCoupling {
  ComplexMatrix source_op;
  ComplexMatrix sink_op;
  RateFn kappa_source;
  RateFn kappa_sink;
  double phi = 0.0;
  double transmission = 1.0;  // scales the cross term by sqrt(eta)
};

struct Observable {
  std::string name;
  ComplexMatrix op;
};

struct TimeSpan {
  double t0 = 0.0;
  double t1 = 1.0;
  std::size_t samples = 201;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> series;  // series[k][i] for names[k] at times[i]
  std::vector<std::pair<double, DensityMatrix>> states;
  DensityMatrix final_state;

  const std::vector<double>& observable(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == name) return series[k];
    }
    throw std::out_of_range("Trajectory: no observable named " + name);
  }
};

namespace detail {

inline void check_square(const ComplexMatrix& m, int dim, const char* what) {
  if (m.rows() != dim || m.cols() != dim) {
    throw std::invalid_argument(std::string("lindblad: dimension mismatch in ") + what);
  }
}

inline void check_dims(const TimeDependentHamiltonian& h, const std::vector<Dissipator>& ds,
                       const std::optional<CascadeCoupling>& cc, int dim) {
  check_square(h.static_part, dim, "static Hamiltonian");
  for (const auto& d : h.driven) check_square(d.op, dim, "driven term");
  for (const auto& d : ds) check_square(d.op, dim, "dissipator");
  if (cc) {
    check_square(cc->source_op, dim, "cascade source");
    check_square(cc->sink_op, dim, "cascade sink");
    if (cc->transmission <= 0.0 || cc->transmission > 1.0) {
      throw std::invalid_argument("lindblad: transmission must lie in (0, 1]");
    }
  }
}

inline double checked_rate(const RateFn& f, double t) {
  const double r = f(t);
  if (!(r >= 0.0)) throw std::domain_error("lindblad: negative or NaN rate at t = " + std::to_string(t));
  return r;
}

}  // namespace detail

/// Dense right-hand side, written directly from the operator form.
inline ComplexMatrix rhs(const TimeDependentHamiltonian& h, const std::vector<Dissipator>& ds,
                         const std::optional<CascadeCoupling>& cc, const ComplexMatrix& rho, double t) {
  const int n = static_cast<int>(rho.rows());
  if (rho.cols() != n) throw std::invalid_argument("lindblad::rhs: state not square");
  detail::check_dims(h, ds, cc, n);
  const ComplexMatrix ht = h.at(t);
  const Complex mi(0.0, -1.0);
  ComplexMatrix out = mi * (ht * rho - rho * ht);
  for (const auto& d : ds) {
    const double g = detail::checked_rate(d.rate, t);
    if (g == 0.0) continue;
    const ComplexMatrix& c = d.op;
    const ComplexMatrix cdc = c.adjoint() * c;
    out += (g / 2.0) * (2.0 * c * rho * c.adjoint() - cdc * rho - rho * cdc);
  }
  if (cc) {
    const double k = std::sqrt(cc->transmission * detail::checked_rate(cc->kappa_source, t) *
                               detail::checked_rate(cc->kappa_sink, t));
    if (k != 0.0) {
      const ComplexMatrix& s = cc->source_op;
      const ComplexMatrix& b = cc->sink_op;
      const ComplexMatrix sr = s * rho;
      const ComplexMatrix rs = rho * s.adjoint();
      out += k * (std::polar(1.0, cc->phi) * (sr * b.adjoint() - b.adjoint() * sr) +
                  std::polar(1.0, -cc->phi) * (b * rs - rs * b));
    }
  }
  return out;
}

inline ComplexMatrix rhs(const TimeDependentHamiltonian& h, const std::vector<Dissipator>& ds,
                         const std::optional<CascadeCoupling>& cc, const DensityMatrix& rho, double t) {
  return rhs(h, ds, cc, rho.matrix(), t);
}

/// Column-major vectorized generator split into a static part and
/// time-weighted pieces. vec(A X B) = (B^T kron A) vec(X).
class Liouvillian {
 public:
  Liouvillian(const TimeDependentHamiltonian& h, const std::vector<Dissipator>& ds,
              const std::optional<CascadeCoupling>& cc) {
    dim_ = h.dim();
    detail::check_dims(h, ds, cc, dim_);
    const ComplexMatrix id = identity(dim_);
    const Complex mi(0.0, -1.0);
    l0_ = sparse(mi * commutator(h.static_part, id));
    for (const auto& d : h.driven) {
      pieces_.push_back({d.envelope, sparse(mi * commutator(d.op, id)), false});
    }
    for (const auto& d : ds) {
      const ComplexMatrix cdc = d.op.adjoint() * d.op;
      ComplexMatrix sup = kron(ComplexMatrix(d.op.conjugate()), d.op) -
                          0.5 * (kron(id, cdc) + kron(ComplexMatrix(cdc.transpose()), id));
      pieces_.push_back({d.rate, sparse(sup), true});
    }
    if (cc) {
      const ComplexMatrix& s = cc->source_op;
      const ComplexMatrix& b = cc->sink_op;
      const ComplexMatrix sup =
          std::polar(1.0, cc->phi) * (kron(ComplexMatrix(b.conjugate()), s) - kron(id, ComplexMatrix(b.adjoint() * s))) +
          std::polar(1.0, -cc->phi) *
              (kron(ComplexMatrix(s.conjugate()), b) - kron(ComplexMatrix((s.adjoint() * b).transpose()), id));
      cascade_ = sparse(sup);
      kappa_source_ = cc->kappa_source;
      kappa_sink_ = cc->kappa_sink;
      eta_ = cc->transmission;
      has_cascade_ = true;
    }
  }

  int dim() const { return dim_; }

  Ket apply(double t, const Ket& v) const {
    Ket out = l0_ * v;
    for (const auto& p : pieces_) {
      const double w = p.is_rate ? detail::checked_rate(p.weight, t) : p.weight(t);
      if (w != 0.0) out.noalias() += w * (p.op * v);
    }
    if (has_cascade_) {
      const double k = std::sqrt(eta_ * detail::checked_rate(kappa_source_, t) * detail::checked_rate(kappa_sink_, t));
      if (k != 0.0) out.noalias() += k * (cascade_ * v);
    }
    return out;
  }

 private:
  struct Piece {
    RateFn weight;
    SparseMatrix op;
    bool is_rate;
  };

  static ComplexMatrix commutator(const ComplexMatrix& h, const ComplexMatrix& id) {
    return kron(id, h) - kron(ComplexMatrix(h.transpose()), id);
  }

  static SparseMatrix sparse(const ComplexMatrix& m) {
    SparseMatrix s = m.sparseView(Complex(0.0), 1e-300);
    s.makeCompressed();
    return s;
  }

  int dim_ = 0;
  SparseMatrix l0_;
  std::vector<Piece> pieces_;
  SparseMatrix cascade_;
  RateFn kappa_source_, kappa_sink_;
  double eta_ = 1.0;
  bool has_cascade_ = false;
};

inline Ket vectorize(const ComplexMatrix& m) { return Eigen::Map<const Ket>(m.data(), m.size()); }

inline ComplexMatrix unvectorize(const Ket& v, int dim) {
  return Eigen::Map<const ComplexMatrix>(v.data(), dim, dim);
}

/// Integrates the master equation and samples observables on a uniform grid
/// of span.samples points (samples = 2 records only the endpoints).
inline Trajectory evolve(const TimeDependentHamiltonian& h, const std::vector<Dissipator>& ds,
                         const std::optional<CascadeCoupling>& cc, const DensityMatrix& rho0, const TimeSpan& span,
                         const IntegratorConfig& cfg, const std::vector<Observable>& observables) {
  const int n = rho0.dim();
  if (!std::isfinite(span.t0) || !std::isfinite(span.t1)) throw std::invalid_argument("evolve: non-finite time span");
  const Liouvillian liou(h, ds, cc);
  if (liou.dim() != n) throw std::invalid_argument("evolve: state dimension mismatch");
  for (const auto& o : observables) detail::check_square(o.op, n, "observable");

  // Tr(rho O) = sum_ij O_ji rho_ij = vec(O^T) . vec(rho)
  std::vector<Ket> obs_rows;
  obs_rows.reserve(observables.size());
  for (const auto& o : observables) obs_rows.push_back(vectorize(o.op.transpose()));

  Trajectory traj;
  traj.times = uniform_grid(span.t0, span.t1, span.samples);
  for (const auto& o : observables) traj.names.push_back(o.name);
  traj.series.assign(observables.size(), std::vector<double>(traj.times.size()));

  auto observe = [&](std::size_t i, double t, const Ket& v) {
    for (std::size_t k = 0; k < obs_rows.size(); ++k) {
      const double value = (obs_rows[k].transpose() * v)(0).real();
      if (!std::isfinite(value)) throw IntegrationError("non-finite observable " + observables[k].name, t);
      traj.series[k][i] = value;
    }
    if (cfg.save_stride > 0 && i % cfg.save_stride == 0) {
      traj.states.emplace_back(t, DensityMatrix::unchecked(unvectorize(v, n)));
    }
  };
  auto f = [&liou](double t, const Ket& v) { return liou.apply(t, v); };
  const Ket final = integrate(f, vectorize(rho0.matrix()), traj.times, cfg, observe);
  traj.final_state = DensityMatrix::unchecked(unvectorize(final, n));
  return traj;
}

}  // namespace phonobus::lindblad
