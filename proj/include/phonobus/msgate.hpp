#pragma once

// Bichromatic Molmer-Sorensen gate: two spins sharing one phonon mode,
// gg <-> ee flip-flop at g_MS = g0^2 / (8 delta). Space order [phonon, spin1, spin2].

#include "phonobus/hilbert.hpp"
#include "phonobus/lindblad.hpp"
#include "phonobus/units.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace phonobus::msgate {

inline constexpr std::size_t kPhonon = 0, kSpin1 = 1, kSpin2 = 2;

/// g0^2 / (8 delta).
inline double g_ms(double g_eff0, double delta_ms) {
  if (delta_ms == 0.0) throw std::invalid_argument("g_ms: zero detuning");
  return g_eff0 * g_eff0 / (8.0 * delta_ms);
}

struct MSConfig {
  double f_e = 2.0;  // GHz, both spins
  double f_p = 3.0;  // GHz, above f_e
  // Defaults give g_MS/2pi = 185.2 kHz at g0/delta = 0.1.
  double delta_ms = units::khz(800.0 * 185.2);
  double g_eff0 = 0.1 * units::khz(800.0 * 185.2);
  int n_max = 5;
  double gamma_e = units::khz(10.0);
  double gamma_p = units::khz(0.1);
  double t_end = 0.0;  // default pi / (2 g_MS)
  std::size_t samples = 401;
  bool pre_rwa = false;  // integrate the interaction picture before the RWA
  IntegratorConfig integrator;

  double omega_e() const { return units::ghz(f_e); }
  double omega_p() const { return units::ghz(f_p); }
  double omega_1() const { return omega_e() + omega_p() - delta_ms; }
  double omega_2() const { return omega_p() - omega_e() - delta_ms; }
  double rate() const { return g_ms(g_eff0, delta_ms); }
  double duration() const { return t_end > 0.0 ? t_end : std::numbers::pi / (2.0 * rate()); }
  double coupling_ratio() const { return std::abs(g_eff0 / delta_ms); }
  bool weak_coupling_warning() const { return coupling_ratio() > 0.3; }
  // The dropped sidebands sit at ~2(w_p - w_e) - delta; the RWA needs delta << w_p - w_e.
  bool rwa_warning() const { return std::abs(delta_ms) > 0.2 * (omega_p() - omega_e()); }

  void validate() const {
    if (!(f_p > f_e)) throw std::invalid_argument("MSConfig: f_p must exceed f_e");
    if (delta_ms == 0.0) throw std::invalid_argument("MSConfig: zero detuning");
    if (n_max < 2) throw std::invalid_argument("MSConfig: n_max must be >= 2");
    if (gamma_e < 0.0 || gamma_p < 0.0) throw std::invalid_argument("MSConfig: rates must be >= 0");
    if (samples < 2) throw std::invalid_argument("MSConfig: samples must be >= 2");
  }
};

/// 0.5 [cos(2 g_MS t) + 1], the |gg,0> population of the effective model.
inline double ideal_gg(double g, double t) { return 0.5 * (std::cos(2.0 * g * t) + 1.0); }

struct Model {
  CompositeSpace space{{2, 2, 2}};
  lindblad::TimeDependentHamiltonian hamiltonian;
  std::vector<lindblad::Dissipator> dissipators;
  ComplexMatrix b, s1, s2;
};

inline Model build_model(const MSConfig& cfg) {
  cfg.validate();
  Model m;
  m.space = CompositeSpace({cfg.n_max, 2, 2});
  m.b = embed(annihilation(cfg.n_max), m.space, kPhonon);
  m.s1 = embed(sigma_minus(), m.space, kSpin1);
  m.s2 = embed(sigma_minus(), m.space, kSpin2);
  const int d = m.space.total_dim();
  m.hamiltonian = lindblad::TimeDependentHamiltonian(ComplexMatrix::Zero(d, d));
  const Complex i(0.0, 1.0);
  const ComplexMatrix xb = m.b + m.b.adjoint();
  const ComplexMatrix pb = i * (m.b.adjoint() - m.b);

  if (!cfg.pre_rwa) {
    // (g0/4) (X1 + X2) (b^+ e^{i delta t} + b e^{-i delta t})
    const ComplexMatrix sx = m.s1 + m.s1.adjoint() + m.s2 + m.s2.adjoint();
    const double c = cfg.g_eff0 / 4.0, dl = cfg.delta_ms;
    m.hamiltonian.add([=](double t) { return c * std::cos(dl * t); }, ComplexMatrix(sx * xb));
    m.hamiltonian.add([=](double t) { return c * std::sin(dl * t); }, ComplexMatrix(sx * pb));
  } else {
    // g(t) sum_j (s_j e^{-i we t} + h.c.)(b e^{-i wp t} + h.c.), g(t) = (g0/2)(cos w1 t + cos w2 t)
    const double g0 = cfg.g_eff0, we = cfg.omega_e(), wp = cfg.omega_p(), w1 = cfg.omega_1(), w2 = cfg.omega_2();
    auto g = [=](double t) { return 0.5 * g0 * (std::cos(w1 * t) + std::cos(w2 * t)); };
    for (const ComplexMatrix* s : {&m.s1, &m.s2}) {
      const ComplexMatrix xs = *s + s->adjoint();
      const ComplexMatrix ys = i * (s->adjoint() - *s);
      m.hamiltonian.add([=](double t) { return g(t) * std::cos(we * t) * std::cos(wp * t); }, ComplexMatrix(xs * xb));
      m.hamiltonian.add([=](double t) { return g(t) * std::cos(we * t) * std::sin(wp * t); }, ComplexMatrix(xs * pb));
      m.hamiltonian.add([=](double t) { return g(t) * std::sin(we * t) * std::cos(wp * t); }, ComplexMatrix(ys * xb));
      m.hamiltonian.add([=](double t) { return g(t) * std::sin(we * t) * std::sin(wp * t); }, ComplexMatrix(ys * pb));
    }
  }
  m.dissipators.push_back({ComplexMatrix(m.s1.adjoint() * m.s1), lindblad::constant(cfg.gamma_e)});
  m.dissipators.push_back({ComplexMatrix(m.s2.adjoint() * m.s2), lindblad::constant(cfg.gamma_e)});
  m.dissipators.push_back({m.b, lindblad::constant(cfg.gamma_p)});
  return m;
}

struct MSRun {
  lindblad::Trajectory trajectory;  // n_gg, n_ee, odd, top_fock
  std::vector<double> ideal;        // 0.5 [cos(2 g_MS t) + 1]
  double max_top_fock = 0.0;
  bool cutoff_warning = false;      // top Fock population above 1e-3
};

/// Starts in |gg, 0>. n_gg and n_ee are the |gg,0> and |ee,0> populations.
inline MSRun simulate(const MSConfig& cfg, double t_stop = 0.0, std::size_t save_stride = 0) {
  const Model m = build_model(cfg);
  const double t1 = t_stop > 0.0 ? t_stop : cfg.duration();
  const ComplexMatrix vac = projector(cfg.n_max, 0);
  const ComplexMatrix g = projector(2, 0), e = projector(2, 1);
  const std::vector<lindblad::Observable> obs{
      {"n_gg", kron({vac, g, g})},
      {"n_ee", kron({vac, e, e})},
      {"odd", ComplexMatrix(kron({identity(cfg.n_max), g, e}) + kron({identity(cfg.n_max), e, g}))},
      {"top_fock", embed(projector(cfg.n_max, cfg.n_max - 1), m.space, kPhonon)},
  };
  IntegratorConfig icfg = cfg.integrator;
  icfg.save_stride = save_stride;
  if (!icfg.max_step) {
    // Resolve the fastest carrier in the Hamiltonian.
    const double fastest = cfg.pre_rwa ? cfg.omega_1() + cfg.omega_e() + cfg.omega_p() : std::abs(cfg.delta_ms);
    icfg.max_step = [h = 0.5 / fastest](double) { return h; };
  }
  const DensityMatrix rho0 = DensityMatrix::unchecked(kron({vac, g, g}));
  MSRun run;
  run.trajectory = lindblad::evolve(m.hamiltonian, m.dissipators, std::nullopt, rho0, {0.0, t1, cfg.samples}, icfg, obs);
  for (double t : run.trajectory.times) run.ideal.push_back(ideal_gg(cfg.rate(), t));
  const auto& top = run.trajectory.observable("top_fock");
  run.max_top_fock = *std::max_element(top.begin(), top.end());
  run.cutoff_warning = run.max_top_fock > 1e-3;
  return run;
}

/// Two-spin state after tracing out the phonon.
inline DensityMatrix spin_state(const DensityMatrix& rho, int n_max) {
  return partial_trace(rho, CompositeSpace({n_max, 2, 2}), {kSpin1, kSpin2});
}

/// max over chi of the root fidelity with (|gg> + e^{i chi}|ee>)/sqrt 2:
/// sqrt((rho_gg,gg + rho_ee,ee)/2 + |rho_gg,ee|).
inline double bell_fidelity(const DensityMatrix& spins) {
  if (spins.dim() != 4) throw std::invalid_argument("bell_fidelity: two-qubit state required");
  const ComplexMatrix& r = spins.matrix();
  return std::sqrt(std::max(0.0, 0.5 * (r(0, 0).real() + r(3, 3).real()) + std::abs(r(0, 3))));
}

struct BellResult {
  double fidelity = 0.0;
  double purity = 0.0;  // of the reduced two-spin state
  DensityMatrix spins;
};

inline BellResult bell_state_fidelity(const MSConfig& cfg, double t_stop) {
  BellResult out;
  if (t_stop <= 0.0) {
    out.spins = DensityMatrix::basis(4, 0);
  } else {
    MSConfig c = cfg;
    c.samples = 2;
    out.spins = spin_state(simulate(c, t_stop).trajectory.final_state, cfg.n_max);
  }
  out.fidelity = bell_fidelity(out.spins);
  out.purity = out.spins.purity();
  return out;
}

inline double bell_time(const MSConfig& cfg) { return std::numbers::pi / (4.0 * cfg.rate()); }

/// Angular frequency of the n_ee oscillation from its largest sample, refined
/// by a parabola; 0.5(1 - cos(w t)) peaks at pi / w. The series should cover
/// the first peak but not the second.
inline double fitted_frequency(const std::vector<double>& t, const std::vector<double>& n_ee) {
  if (t.size() != n_ee.size() || t.size() < 3) throw std::invalid_argument("fitted_frequency: bad series");
  const auto k = static_cast<std::size_t>(std::max_element(n_ee.begin(), n_ee.end()) - n_ee.begin());
  if (k == 0 || k + 1 >= n_ee.size()) throw std::runtime_error("fitted_frequency: maximum at the series edge");
  const double y0 = n_ee[k - 1], y1 = n_ee[k], y2 = n_ee[k + 1], h = t[k] - t[k - 1];
  const double denom = y0 - 2.0 * y1 + y2;
  const double t_max = t[k] + (denom != 0.0 ? 0.5 * h * (y0 - y2) / denom : 0.0);
  return std::numbers::pi / t_max;
}

}  // namespace phonobus::msgate
