#pragma once

// Direct SC qubit -> phonon -> electron spin transfer driven by two sech
// coupling pulses, simulated in the frame rotating at the SC frequency.

#include "phonobus/hilbert.hpp"
#include "phonobus/lindblad.hpp"
#include "phonobus/parallel.hpp"
#include "phonobus/units.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace phonobus::transduction {

using lindblad::Dissipator;
using lindblad::TimeDependentHamiltonian;
using lindblad::Trajectory;

enum class InputState { excited, superposition, custom };

inline constexpr std::size_t kSc = 0, kPhonon = 1, kSpin = 2;

struct DirectChainConfig {
  // Carrier frequencies (GHz). Only their differences enter the rotating frame.
  double f_sc = 2.0, f_p = 2.0, f_e = 2.0;
  bool require_resonance = true;

  double g_scp = units::mhz(50.0);  // pulse amplitudes, rad/us
  double g_pe = units::mhz(1.0);

  // Pulse centres (us). Unset values use the default placement: the first pulse
  // sits 8/(2g) after t = 0 and the second follows after dtau.
  std::optional<double> tau_scp, tau_pe;
  std::optional<double> dtau;

  double gamma_sc = units::khz(10.0);
  double gamma_p = units::khz(0.1);
  double gamma_e = units::khz(10.0);

  int n_max = 3;
  InputState input = InputState::excited;
  std::optional<DensityMatrix> custom_input;
  bool reverse = false;  // spin -> SC with the pulse order swapped
  bool phase_compensation = true;

  std::size_t samples = 401;
  IntegratorConfig integrator;

  void validate() const {
    if (n_max < 2) throw std::invalid_argument("DirectChainConfig: n_max must be >= 2");
    if (!(g_scp > 0.0) || !(g_pe > 0.0)) throw std::invalid_argument("DirectChainConfig: pulse amplitudes must be > 0");
    if (gamma_sc < 0.0 || gamma_p < 0.0 || gamma_e < 0.0) {
      throw std::invalid_argument("DirectChainConfig: rates must be >= 0");
    }
    if (require_resonance && (f_sc != f_p || f_p != f_e)) {
      throw std::invalid_argument("DirectChainConfig: f_sc, f_p and f_e must be equal when resonance is required");
    }
    if (input == InputState::custom) {
      if (!custom_input || custom_input->dim() != 2) {
        throw std::invalid_argument("DirectChainConfig: custom input needs a qubit density matrix");
      }
    }
  }

  DensityMatrix input_state() const {
    switch (input) {
      case InputState::excited:
        return DensityMatrix::basis(2, 1);
      case InputState::superposition: {
        Ket plus(2);
        plus << 1.0, 1.0;
        return DensityMatrix::pure(plus);
      }
      case InputState::custom:
        break;
    }
    return *custom_input;
  }
};

/// g sech(2g(t - tau)); its area over the real line is pi/2.
inline double sech_pulse(double t, double g, double tau) { return g / std::cosh(2.0 * g * (t - tau)); }

struct Chain {
  CompositeSpace space;
  TimeDependentHamiltonian hamiltonian;
  std::vector<Dissipator> dissipators;
  DensityMatrix rho0;
  ComplexMatrix sc_lower, phonon_lower, spin_lower;
};

struct Schedule {
  double tau_first, tau_second;  // centres in time order
  double g_first, g_second;
  double tau_scp, tau_pe;
  double t0 = 0.0, t_end;
};

inline double default_dtau(const DirectChainConfig& cfg) { return 4.0 / cfg.g_pe; }

/// Resolves pulse centres and the simulated interval, and checks the margins.
inline Schedule schedule(const DirectChainConfig& cfg) {
  Schedule s{};
  s.g_first = cfg.reverse ? cfg.g_pe : cfg.g_scp;
  s.g_second = cfg.reverse ? cfg.g_scp : cfg.g_pe;
  const std::optional<double>& first_opt = cfg.reverse ? cfg.tau_pe : cfg.tau_scp;
  const std::optional<double>& second_opt = cfg.reverse ? cfg.tau_scp : cfg.tau_pe;
  s.tau_first = first_opt.value_or(8.0 / (2.0 * s.g_first));
  s.tau_second = second_opt.value_or(s.tau_first + cfg.dtau.value_or(default_dtau(cfg)));
  s.tau_scp = cfg.reverse ? s.tau_second : s.tau_first;
  s.tau_pe = cfg.reverse ? s.tau_first : s.tau_second;
  s.t_end = std::max(s.tau_first + 8.0 / (2.0 * s.g_first), s.tau_second + 8.0 / (2.0 * s.g_second));

  // The second pulse may start before t0; it acts on an empty mode there.
  const double eps = 1e-12;
  if (s.tau_first - s.t0 < 6.0 / (2.0 * s.g_first) - eps) {
    throw std::invalid_argument("transduction: first pulse closer than 6/(2g) to the start of the simulation");
  }
  if (s.t_end - s.tau_first < 6.0 / (2.0 * s.g_first) - eps ||
      s.t_end - s.tau_second < 6.0 / (2.0 * s.g_second) - eps) {
    throw std::invalid_argument("transduction: pulse closer than 6/(2g) to the end of the simulation");
  }
  if (s.tau_second < s.tau_first) throw std::invalid_argument("transduction: pulse order inverted, use reverse");
  return s;
}

/// Hamiltonian, dissipators and initial state on [SC, phonon, spin].
inline Chain build_chain(const DirectChainConfig& cfg) {
  cfg.validate();
  const Schedule sch = schedule(cfg);
  Chain c{CompositeSpace({2, cfg.n_max, 2}), TimeDependentHamiltonian{}, {}, DensityMatrix{}, {}, {}, {}};
  c.sc_lower = embed(sigma_minus(), c.space, kSc);
  c.phonon_lower = embed(annihilation(cfg.n_max), c.space, kPhonon);
  c.spin_lower = embed(sigma_minus(), c.space, kSpin);
  const ComplexMatrix& s = c.sc_lower;
  const ComplexMatrix& b = c.phonon_lower;
  const ComplexMatrix& e = c.spin_lower;

  // Frame rotating at omega_sc on every excitation; detunings survive only
  // when resonance is not required.
  ComplexMatrix h0 = ComplexMatrix::Zero(c.space.total_dim(), c.space.total_dim());
  h0 += units::ghz(cfg.f_p - cfg.f_sc) * (b.adjoint() * b);
  h0 += units::ghz(cfg.f_e - cfg.f_sc) * (e.adjoint() * e);
  c.hamiltonian = TimeDependentHamiltonian(h0);
  const double g_scp = cfg.g_scp, g_pe = cfg.g_pe, tau_scp = sch.tau_scp, tau_pe = sch.tau_pe;
  c.hamiltonian.add([=](double t) { return sech_pulse(t, g_scp, tau_scp); },
                    ComplexMatrix(s * b.adjoint() + s.adjoint() * b));
  c.hamiltonian.add([=](double t) { return sech_pulse(t, g_pe, tau_pe); },
                    ComplexMatrix(e * b.adjoint() + e.adjoint() * b));

  c.dissipators.push_back({s, lindblad::constant(cfg.gamma_sc)});
  c.dissipators.push_back({b, lindblad::constant(cfg.gamma_p)});
  c.dissipators.push_back({ComplexMatrix(e.adjoint() * e), lindblad::constant(cfg.gamma_e)});

  const DensityMatrix in = cfg.input_state();
  const ComplexMatrix vac_q = projector(2, 0);
  const ComplexMatrix vac_p = projector(cfg.n_max, 0);
  c.rho0 = DensityMatrix::unchecked(cfg.reverse ? kron({vac_q, vac_p, in.matrix()}) : kron({in.matrix(), vac_p, vac_q}));
  return c;
}

/// Step bound that keeps the adaptive integrator inside each pulse window:
/// at most 0.5/g within |t - tau| < 8/(2g), and never past the next window.
inline std::function<double(double)> pulse_step_limit(std::vector<std::pair<double, double>> pulses) {
  return [pulses = std::move(pulses)](double t) {
    double limit = std::numeric_limits<double>::infinity();
    for (const auto& [g, tau] : pulses) {
      const double half = 8.0 / (2.0 * g);
      if (std::abs(t - tau) < half) limit = std::min(limit, 0.5 / g);
      else if (t < tau - half) limit = std::min(limit, std::max(tau - half - t, 0.5 / g));
    }
    return limit;
  };
}

struct TransferResult {
  Trajectory trajectory;
  double fidelity = 0.0;
  DensityMatrix target_state;  // reduced output qubit, phase-compensated if enabled
  double dtau = 0.0;
  double max_top_fock = 0.0;
};

inline TransferResult run_transfer(const DirectChainConfig& cfg) {
  const Chain chain = build_chain(cfg);
  const Schedule sch = schedule(cfg);
  IntegratorConfig icfg = cfg.integrator;
  if (!icfg.max_step) icfg.max_step = pulse_step_limit({{cfg.g_scp, sch.tau_scp}, {cfg.g_pe, sch.tau_pe}});

  const int top = cfg.n_max - 1;
  const std::vector<lindblad::Observable> obs{
      {"pop_sc", embed(projector(2, 1), chain.space, kSc)},
      {"pop_ph", ComplexMatrix(chain.phonon_lower.adjoint() * chain.phonon_lower)},
      {"pop_spin", embed(projector(2, 1), chain.space, kSpin)},
      {"pop_top", embed(projector(cfg.n_max, top), chain.space, kPhonon)},
  };
  TransferResult r;
  r.trajectory = lindblad::evolve(chain.hamiltonian, chain.dissipators, std::nullopt, chain.rho0,
                                  {sch.t0, sch.t_end, std::max<std::size_t>(cfg.samples, 2)}, icfg, obs);
  const auto& tops = r.trajectory.observable("pop_top");
  r.max_top_fock = *std::max_element(tops.begin(), tops.end());

  const DensityMatrix in = cfg.input_state();
  DensityMatrix out = partial_trace(r.trajectory.final_state, chain.space, {cfg.reverse ? kSc : kSpin});
  if (cfg.phase_compensation) out = align_relative_phase(out, in);
  r.fidelity = fidelity(in, out);
  r.target_state = out;
  r.dtau = sch.tau_second - sch.tau_first;
  return r;
}

/// Fidelity only: endpoints are integrated, no intermediate samples.
inline double transfer_fidelity(DirectChainConfig cfg, double dtau) {
  cfg.dtau = dtau;
  if (cfg.reverse) cfg.tau_scp.reset();
  else cfg.tau_pe.reset();
  cfg.samples = 2;
  return run_transfer(cfg).fidelity;
}

struct DelayOptimum {
  double dtau = 0.0;
  double fidelity = 0.0;
  std::size_t evaluations = 0;
};

/// Grid scan over [lo, hi] followed by golden-section refinement to `tol`
/// around the best grid point. Returns the smallest evaluated delay whose
/// fidelity lies within 1e-6 of the best one.
inline DelayOptimum optimize_delay(const DirectChainConfig& cfg, double lo, double hi, std::size_t grid_points = 41,
                                   double tol = 1e-4) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw std::invalid_argument("optimize_delay: empty range");
  grid_points = std::max<std::size_t>(grid_points, 41);
  std::vector<std::pair<double, double>> evals;
  auto f = [&](double x) {
    const double v = transfer_fidelity(cfg, x);
    evals.emplace_back(x, v);
    return v;
  };

  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  std::size_t best = 0;
  double best_f = -1.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double v = f(lo + step * static_cast<double>(i));
    if (v > best_f) {
      best_f = v;
      best = i;
    }
  }

  double a = lo + step * static_cast<double>(best == 0 ? 0 : best - 1);
  double b = lo + step * static_cast<double>(std::min(best + 1, grid_points - 1));
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }

  double fmax = -1.0;
  for (const auto& [x, v] : evals) fmax = std::max(fmax, v);
  DelayOptimum opt{std::numeric_limits<double>::infinity(), 0.0, evals.size()};
  for (const auto& [x, v] : evals) {
    if (v >= fmax - 1e-6 && x < opt.dtau) {
      opt.dtau = x;
      opt.fidelity = v;
    }
  }
  return opt;
}

/// Default search range [0, 4/g_pe].
inline DelayOptimum optimize_delay(const DirectChainConfig& cfg) {
  return optimize_delay(cfg, 0.0, default_dtau(cfg));
}

struct SweepCell {
  double g_pe_mhz = 0.0;
  double gamma_e_khz = 0.0;
  double fidelity = 0.0;
  double dtau = 0.0;
  double log10_infidelity() const { return std::log10(std::max(1.0 - fidelity, 1e-16)); }
};

struct SweepTable {
  std::vector<double> g_pe_mhz;
  std::vector<double> gamma_e_khz;
  std::vector<SweepCell> cells;  // row-major: g_pe outer, gamma_e inner

  const SweepCell& at(std::size_t i_g, std::size_t i_gamma) const { return cells.at(i_g * gamma_e_khz.size() + i_gamma); }
};

/// Logarithmically spaced values from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (n == 0 || !(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log_grid: invalid range");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = lo * std::pow(hi / lo, f);
  }
  v.back() = hi;
  return v;
}

/// Delay-optimized fidelity for every (g_pe, gamma_e) pair. Cells run on a
/// worker pool; the table order and contents do not depend on `workers`.
inline SweepTable sweep(const DirectChainConfig& tmpl, const std::vector<double>& g_pe_mhz,
                        const std::vector<double>& gamma_e_khz, std::size_t workers) {
  if (g_pe_mhz.empty() || gamma_e_khz.empty()) throw std::invalid_argument("sweep: empty grid");
  SweepTable table{g_pe_mhz, gamma_e_khz, {}};
  const std::size_t ng = gamma_e_khz.size();
  table.cells = parallel_map<SweepCell>(g_pe_mhz.size() * ng, workers, [&](std::size_t idx) {
    DirectChainConfig cfg = tmpl;
    cfg.g_pe = units::mhz(g_pe_mhz[idx / ng]);
    cfg.gamma_e = units::khz(gamma_e_khz[idx % ng]);
    cfg.tau_scp.reset();
    cfg.tau_pe.reset();
    const DelayOptimum opt = optimize_delay(cfg);
    return SweepCell{g_pe_mhz[idx / ng], gamma_e_khz[idx % ng], opt.fidelity, opt.dtau};
  });
  return table;
}

}  // namespace phonobus::transduction
