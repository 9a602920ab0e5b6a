#pragma once

// Electron -> nuclear spin SWAP built from dynamically decoupled conditional
// and unconditional nuclear rotations. Basis: electron (x) nuclear, level 0
// first. Channels are 16x16 superoperators acting on column-major vec(rho).

#include "phonobus/hilbert.hpp"
#include "phonobus/units.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace phonobus::nuclear {

struct HyperfineConfig {
  double A_parallel = units::khz(500.0);  // rad/us
  double Omega_mw = units::khz(3.9);      // nominal Rabi frequency
  double gamma_e = units::khz(10.0);
  double gamma_n = units::hz(1.0);
  double omega_L = 0.0;  // absorbed by the resonance condition
  // Segment time; default 2 pi / A_parallel so each 2 tau window is a whole
  // number of free-precession turns.
  double tau = 0.0;

  double segment_time() const { return tau > 0.0 ? tau : 2.0 * std::numbers::pi / A_parallel; }
  double drive_ratio() const { return Omega_mw / A_parallel; }
  bool weak_drive_warning() const { return drive_ratio() > 0.05; }

  void validate() const {
    if (!(A_parallel > 0.0) || !(Omega_mw > 0.0)) throw std::invalid_argument("HyperfineConfig: A_parallel and Omega_mw must be > 0");
    if (gamma_e < 0.0 || gamma_n < 0.0) throw std::invalid_argument("HyperfineConfig: rates must be >= 0");
    if (tau < 0.0) throw std::invalid_argument("HyperfineConfig: tau must be >= 0");
  }
};

/// -A n_n |0_e><0_e| + Omega (cos theta X_n + sin theta Y_n) |1_e><1_e|.
inline ComplexMatrix effective_hamiltonian(double A_parallel, double omega, double theta) {
  const ComplexMatrix nn = sigma_plus() * sigma_minus();
  const ComplexMatrix drive = std::cos(theta) * pauli_x() + std::sin(theta) * pauli_y();
  return ComplexMatrix(-A_parallel * kron(projector(2, 0), nn) + omega * kron(projector(2, 1), drive));
}

inline ComplexMatrix effective_hamiltonian(const HyperfineConfig& cfg, double theta) {
  return effective_hamiltonian(cfg.A_parallel, cfg.Omega_mw, theta);
}

/// theta_mw after pulse k: (k-1) phi_k + phi_c + phi_0 for odd k, without phi_c
/// for even k; phi_k = -(2 - delta_1k) tau A.
inline double phase_schedule(double A_parallel, double tau, int k, double phi_0, bool conditional) {
  if (k < 1) throw std::invalid_argument("phase_schedule: k must be >= 1");
  const double phi_k = -(k == 1 ? 1.0 : 2.0) * tau * A_parallel;
  const double phi_c = conditional && k % 2 == 1 ? std::numbers::pi : 0.0;
  return (k - 1) * phi_k + phi_c + phi_0;
}

struct DDSchedule {
  int N = 0;
  double tau = 0.0;
  double omega = 0.0;  // Rabi frequency giving angle = 2 omega tau N
  double phi_0 = 0.0;
  double angle = 0.0;
  bool conditional = false;

  double duration() const { return 2.0 * N * tau; }
};

/// N is the even pulse count closest to angle / (2 Omega_nom tau); the Rabi
/// frequency is then trimmed so the angle is hit exactly.
inline DDSchedule make_schedule(const HyperfineConfig& cfg, double phi_0, double angle, bool conditional,
                                int N = 0) {
  cfg.validate();
  const double tau = cfg.segment_time();
  if (N == 0) N = std::max(2, 2 * static_cast<int>(std::lround(std::abs(angle) / (4.0 * cfg.Omega_mw * tau))));
  if (N <= 0 || N % 2 != 0) throw std::invalid_argument("make_schedule: N must be even and positive");
  return {N, tau, angle / (2.0 * tau * N), phi_0, angle, conditional};
}

inline ComplexMatrix unitary_superop(const ComplexMatrix& u) { return kron(ComplexMatrix(u.conjugate()), u); }

/// Liouvillian of H with pure dephasing on both spins, column-major vec.
inline ComplexMatrix dephasing_liouvillian(const ComplexMatrix& h, double gamma_e, double gamma_n) {
  const int n = static_cast<int>(h.rows());
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const Complex i(0.0, 1.0);
  ComplexMatrix l = -i * (kron(id, h) - kron(ComplexMatrix(h.transpose()), id));
  const ComplexMatrix ce = kron(projector(2, 1), identity(2));
  const ComplexMatrix cn = kron(identity(2), projector(2, 1));
  for (const auto& [c, g] : {std::pair{ce, gamma_e}, std::pair{cn, gamma_n}}) {
    if (g == 0.0) continue;
    const ComplexMatrix cdc = c.adjoint() * c;
    l += g * (kron(ComplexMatrix(c.conjugate()), c) - 0.5 * kron(id, cdc) - 0.5 * kron(ComplexMatrix(cdc.transpose()), id));
  }
  return l;
}

inline ComplexMatrix electron_flip() { return kron(pauli_x(), identity(2)); }

/// Channel of one rotation: segments tau, 2tau, ..., 2tau, tau with an
/// instantaneous electron pi flip between consecutive segments. Segment j
/// (0-based) uses theta_mw(k = j + 1).
inline ComplexMatrix rotation_channel(const HyperfineConfig& cfg, const DDSchedule& s, double gamma_e,
                                      double gamma_n) {
  if (s.N <= 0 || s.N % 2 != 0) throw std::invalid_argument("rotation_channel: N must be even and positive");
  const ComplexMatrix flip = unitary_superop(electron_flip());
  ComplexMatrix total = ComplexMatrix::Identity(16, 16);
  for (int j = 0; j <= s.N; ++j) {
    const double dt = (j == 0 || j == s.N) ? s.tau : 2.0 * s.tau;
    const double theta = phase_schedule(cfg.A_parallel, s.tau, j + 1, s.phi_0, s.conditional);
    const ComplexMatrix h = effective_hamiltonian(cfg.A_parallel, s.omega, theta);
    ComplexMatrix seg;
    if (gamma_e == 0.0 && gamma_n == 0.0) {
      seg = unitary_superop(ComplexMatrix((Complex(0.0, -dt) * h).exp()));
    } else {
      seg = ComplexMatrix((dt * dephasing_liouvillian(h, gamma_e, gamma_n)).exp());
    }
    total = seg * total;
    if (j < s.N) total = flip * total;
  }
  return total;
}

/// Closed-system rotation as a 4x4 unitary.
inline ComplexMatrix rotation_gate(const HyperfineConfig& cfg, const DDSchedule& s) {
  if (s.N <= 0 || s.N % 2 != 0) throw std::invalid_argument("rotation_gate: N must be even and positive");
  ComplexMatrix u = ComplexMatrix::Identity(4, 4);
  const ComplexMatrix flip = electron_flip();
  for (int j = 0; j <= s.N; ++j) {
    const double dt = (j == 0 || j == s.N) ? s.tau : 2.0 * s.tau;
    const double theta = phase_schedule(cfg.A_parallel, s.tau, j + 1, s.phi_0, s.conditional);
    u = ComplexMatrix((Complex(0.0, -dt) * effective_hamiltonian(cfg.A_parallel, s.omega, theta)).exp()) * u;
    if (j < s.N) u = flip * u;
  }
  return u;
}

/// exp(-i angle/2 (cos phi_0 X + sin phi_0 Y)) on the nuclear spin.
inline ComplexMatrix ideal_rotation(double phi_0, double angle) {
  const ComplexMatrix axis = std::cos(phi_0) * pauli_x() + std::sin(phi_0) * pauli_y();
  return ComplexMatrix(std::cos(angle / 2.0) * identity(2) - Complex(0.0, std::sin(angle / 2.0)) * axis);
}

/// 1 - |Tr(R^+ U_b)|/2 for the nuclear block of electron branch b; a global
/// phase per branch is ignored.
inline double branch_error(const ComplexMatrix& u, int branch, const ComplexMatrix& ideal) {
  const ComplexMatrix block = u.block(2 * branch, 2 * branch, 2, 2);
  return 1.0 - std::abs((ideal.adjoint() * block).trace()) / 2.0;
}

/// Number of operator-Schmidt coefficients of a two-qubit operator above tol.
inline int operator_schmidt_rank(const ComplexMatrix& u, double tol = 1e-8) {
  ComplexMatrix r(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) r(2 * a + b, 2 * c + d) = u(2 * a + c, 2 * b + d);
  const Eigen::JacobiSVD<ComplexMatrix> svd(r);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) rank += sv(i) > tol * sv(0) ? 1 : 0;
  return rank;
}

inline ComplexMatrix electron_hadamard() {
  ComplexMatrix h(2, 2);
  h << 1.0, 1.0, 1.0, -1.0;
  return ComplexMatrix(kron(ComplexMatrix(h / std::sqrt(2.0)), identity(2)));
}

/// S = sigma sigma^+ + i sigma^+ sigma on the electron.
inline ComplexMatrix electron_phase() {
  ComplexMatrix s = ComplexMatrix::Zero(2, 2);
  s(0, 0) = 1.0;
  s(1, 1) = Complex(0.0, 1.0);
  return kron(s, identity(2));
}

struct SwapStep {
  std::string name;
  DDSchedule schedule;
  ComplexMatrix after;  // instantaneous electron gate applied after the rotation
};

/// CX H^e H^n CX H^e H^n CX, with CX = S R_{0,pi/2} C_{0,pi/2} and
/// H^n = R_{0,pi} R_{pi/2,pi/2}, as ten rotations in time order.
inline std::vector<SwapStep> swap_sequence(const HyperfineConfig& cfg, int N_half = 0) {
  const double pi = std::numbers::pi;
  const int n_half = N_half;
  const int n_full = N_half == 0 ? 0 : 2 * N_half;
  const ComplexMatrix id = ComplexMatrix::Identity(4, 4);
  std::vector<SwapStep> steps;
  auto cx = [&] {
    steps.push_back({"C_0,pi/2", make_schedule(cfg, 0.0, pi / 2.0, true, n_half), id});
    steps.push_back({"R_0,pi/2", make_schedule(cfg, 0.0, pi / 2.0, false, n_half), electron_phase()});
  };
  auto hn_he = [&] {
    steps.push_back({"R_pi/2,pi/2", make_schedule(cfg, pi / 2.0, pi / 2.0, false, n_half), id});
    steps.push_back({"R_0,pi", make_schedule(cfg, 0.0, pi, false, n_full), electron_hadamard()});
  };
  cx();
  hn_he();
  cx();
  hn_he();
  cx();
  return steps;
}

struct GateRecord {
  int index = 0;
  std::string name;
  double duration = 0.0;
  double fidelity_running = 0.0;  // vs the closed-system state after the same gate
};

struct SwapResult {
  DensityMatrix final_state;       // electron (x) nuclear
  DensityMatrix nuclear_state;     // phase-compensated if requested
  double fidelity = 0.0;
  double total_time = 0.0;
  std::vector<GateRecord> gates;
};

inline Ket vec(const ComplexMatrix& m) { return Eigen::Map<const Ket>(m.data(), m.size()); }
inline ComplexMatrix unvec(const Ket& v) { return Eigen::Map<const ComplexMatrix>(v.data(), 4, 4); }

/// Runs the SWAP on electron input (x) |0_n> with dephasing during the
/// rotations. F_en compares the input with the reduced nuclear state.
inline SwapResult swap_protocol(const HyperfineConfig& cfg, const DensityMatrix& electron_in,
                                bool phase_compensation = true, int N_half = 0) {
  cfg.validate();
  if (electron_in.dim() != 2) throw std::invalid_argument("swap_protocol: electron input must be a qubit");
  const auto steps = swap_sequence(cfg, N_half);
  Ket v = vec(kron(electron_in.matrix(), projector(2, 0)));
  Ket ideal = v;
  SwapResult r;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const ComplexMatrix after = unitary_superop(s.after);
    v = after * (rotation_channel(cfg, s.schedule, cfg.gamma_e, cfg.gamma_n) * v);
    ideal = after * (rotation_channel(cfg, s.schedule, 0.0, 0.0) * ideal);
    r.total_time += s.schedule.duration();
    r.gates.push_back({static_cast<int>(i + 1), s.name, s.schedule.duration(),
                       fidelity(DensityMatrix::unchecked(unvec(ideal)), DensityMatrix::unchecked(unvec(v)))});
  }
  r.final_state = DensityMatrix::unchecked(unvec(v));
  const CompositeSpace space({2, 2});
  DensityMatrix nuc = partial_trace(r.final_state, space, {1});
  if (phase_compensation) nuc = align_relative_phase(nuc, electron_in);
  r.nuclear_state = nuc;
  r.fidelity = fidelity(electron_in, nuc);
  return r;
}

/// Closed-system two-qubit gate of the whole sequence.
inline ComplexMatrix swap_unitary(const HyperfineConfig& cfg, int N_half = 0) {
  ComplexMatrix g = ComplexMatrix::Identity(4, 4);
  for (const auto& s : swap_sequence(cfg, N_half)) g = s.after * rotation_gate(cfg, s.schedule) * g;
  return g;
}

}  // namespace phonobus::nuclear
