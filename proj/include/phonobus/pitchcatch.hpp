#pragma once

// Waveguide pitch-and-catch between an SC qubit at x = 0 and a phonon mode at
// x = L. Two descriptions: the single-excitation Schrodinger model with M
// explicit standing-wave modes, and the cascaded master equation in which the
// waveguide is traced out.

#include "phonobus/hilbert.hpp"
#include "phonobus/integrator.hpp"
#include "phonobus/lindblad.hpp"
#include "phonobus/units.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace phonobus::pitchcatch {

using lindblad::Trajectory;

/// kappa = 2 pi g^2 / delta, the decay rate into a mode comb of spacing delta.
inline double kappa_from_g(double g, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("kappa_from_g: delta must be > 0");
  return 2.0 * std::numbers::pi * g * g / delta;
}

struct WaveguideConfig {
  double L = 1e-3;     // m
  double c = 2000.0;   // m/s
  int N0 = 2000;       // mode number of j = 0; k_j = (N0 + j) pi / L
  int M = 201;         // retained modes, odd
  double g_qm = units::mhz(1.0);
  std::optional<double> tau_pc;  // release onset (us), default ramp()
  double phi = std::numbers::pi;  // calibrate_phase() value for the defaults
  double transmission = 1.0;
  bool catch_enabled = true;

  // Cascaded model only.
  double gamma_sc = 0.0, gamma_p = 0.0;
  int n_max = 2;

  // The sample grid has spacing travel_time()/steps_per_travel.
  int steps_per_travel = 200;
  IntegratorConfig integrator = [] {
    IntegratorConfig i;
    i.rel_tol = 1e-10;
    i.abs_tol = 1e-12;
    return i;
  }();

  /// Mode spacing in rad/us.
  double delta() const { return c * std::numbers::pi / L * 1e-6; }
  double kappa() const { return kappa_from_g(g_qm, delta()); }
  /// 16/kappa, or the travel time when there is no coupling.
  double ramp() const { return kappa() > 0.0 ? 16.0 / kappa() : travel_time(); }
  double onset() const { return tau_pc.value_or(ramp()); }
  /// One-way travel time L/c = pi/delta (us).
  double travel_time() const { return L / c * 1e6; }
  int center() const { return (M - 1) / 2; }
  double k(int j) const { return (N0 + j) * std::numbers::pi / L; }

  void validate() const {
    if (!(L > 0.0) || !(c > 0.0)) throw std::invalid_argument("WaveguideConfig: L and c must be > 0");
    if (M < 21 || M % 2 == 0) throw std::invalid_argument("WaveguideConfig: M must be odd and >= 21");
    if (N0 < 0) throw std::invalid_argument("WaveguideConfig: N0 must be >= 0");
    if (g_qm < 0.0) throw std::invalid_argument("WaveguideConfig: g_qm must be >= 0");
    if (!(transmission > 0.0) || transmission > 1.0) {
      throw std::invalid_argument("WaveguideConfig: transmission must lie in (0, 1]");
    }
    if (gamma_sc < 0.0 || gamma_p < 0.0) throw std::invalid_argument("WaveguideConfig: rates must be >= 0");
    if (n_max < 2) throw std::invalid_argument("WaveguideConfig: n_max must be >= 2");
    if (steps_per_travel < 1) throw std::invalid_argument("WaveguideConfig: steps_per_travel must be >= 1");
    if (M * delta() < 20.0 * kappa()) {
      throw std::invalid_argument("WaveguideConfig: retained band M*delta is narrower than 20 kappa");
    }
  }
};

/// g_qm sqrt(e^{kappa t'} / (1 + e^{kappa t'})), t' = t - tau_pc.
inline double release_coupling(double t, const WaveguideConfig& cfg) {
  const double x = cfg.kappa() * (t - cfg.onset());
  return cfg.g_qm * std::sqrt(1.0 / (1.0 + std::exp(-x)));
}

/// Time-reversed release, delayed by `delay` (0 for the cascaded model).
inline double catch_coupling(double t, const WaveguideConfig& cfg, double delay = 0.0) {
  if (!cfg.catch_enabled) return 0.0;
  const double x = -cfg.kappa() * (t - cfg.onset() - delay);
  return cfg.g_qm * std::sqrt(1.0 / (1.0 + std::exp(-x)));
}

/// Sample grid shared by both models: spacing travel_time / steps_per_travel,
/// running to tau_pc + travel_time + ramp rounded up to a whole step.
inline std::vector<double> sample_grid(const WaveguideConfig& cfg) {
  const double dt = cfg.travel_time() / cfg.steps_per_travel;
  const double t_end = cfg.onset() + cfg.travel_time() + cfg.ramp();
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  std::vector<double> t(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) t[i] = dt * static_cast<double>(i);
  return t;
}

struct SchrodingerRun {
  Trajectory trajectory;          // pop_sc, pop_wg, pop_ph, norm
  std::vector<Ket> amplitudes;    // [c_sc, c_1..c_M, c_p] at each sample
  double max_norm_error = 0.0;
};

/// Single-excitation amplitudes in the frame rotating at the central mode
/// frequency. The catch is delayed by the travel time L/c. The phonon couples
/// to mode j with the sign cos(k_j L) = (-1)^(N0 + j).
inline SchrodingerRun simulate_schrodinger(const WaveguideConfig& cfg, Ket c0 = {}) {
  cfg.validate();
  const int M = cfg.M;
  if (c0.size() == 0) {
    c0 = Ket::Zero(M + 2);
    c0(0) = 1.0;
  }
  if (c0.size() != M + 2) throw std::invalid_argument("simulate_schrodinger: initial amplitudes need M + 2 entries");

  Eigen::VectorXd detuning(M), sign(M);
  for (int j = 0; j < M; ++j) {
    detuning(j) = (j - cfg.center()) * cfg.delta();
    sign(j) = (cfg.N0 + j) % 2 == 0 ? 1.0 : -1.0;
  }
  const double delay = cfg.travel_time();
  const Complex mi(0.0, -1.0);
  auto f = [&](double t, const Ket& c) -> Ket {
    const double gr = release_coupling(t, cfg);
    const double gc = catch_coupling(t, cfg, delay);
    const auto ck = c.segment(1, M);
    Ket out(M + 2);
    out(0) = mi * gr * ck.sum();
    out.segment(1, M) = mi * (detuning.cwiseProduct(ck) + Ket::Constant(M, gr * c(0)) + gc * c(M + 1) * sign);
    out(M + 1) = mi * gc * sign.cast<Complex>().dot(ck);
    return out;
  };

  SchrodingerRun run;
  Trajectory& traj = run.trajectory;
  traj.times = sample_grid(cfg);
  traj.names = {"pop_sc", "pop_wg", "pop_ph", "norm"};
  traj.series.assign(4, std::vector<double>(traj.times.size()));
  run.amplitudes.resize(traj.times.size());
  const double norm0 = c0.squaredNorm();
  integrate(f, c0, traj.times, cfg.integrator, [&](std::size_t i, double, const Ket& c) {
    traj.series[0][i] = std::norm(c(0));
    traj.series[1][i] = c.segment(1, M).squaredNorm();
    traj.series[2][i] = std::norm(c(M + 1));
    traj.series[3][i] = c.squaredNorm();
    run.max_norm_error = std::max(run.max_norm_error, std::abs(c.squaredNorm() - norm0));
    run.amplitudes[i] = c;
  });
  return run;
}

/// psi(x) = sum_j c_j cos(k_j x); returns |psi(x)|^2 on the grid.
inline std::vector<double> wavepacket_snapshot(const Ket& amplitudes, const WaveguideConfig& cfg,
                                               const std::vector<double>& x) {
  if (amplitudes.size() != cfg.M + 2) throw std::invalid_argument("wavepacket_snapshot: amplitude size mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    Complex psi = 0.0;
    for (int j = 0; j < cfg.M; ++j) psi += amplitudes(1 + j) * std::cos(cfg.k(j) * x[i]);
    out[i] = std::norm(psi);
  }
  return out;
}

struct PacketMoments {
  double area = 0.0;
  double centroid = 0.0;
  double width = 0.0;
  double skewness = 0.0;
};

/// Trapezoid moments of an intensity profile on a uniform grid.
inline PacketMoments packet_moments(const std::vector<double>& x, const std::vector<double>& intensity) {
  if (x.size() != intensity.size() || x.size() < 2) throw std::invalid_argument("packet_moments: bad grid");
  auto integral = [&](auto&& w) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
      s += 0.5 * (x[i] - x[i - 1]) * (w(i) * intensity[i] + w(i - 1) * intensity[i - 1]);
    }
    return s;
  };
  PacketMoments m;
  m.area = integral([](std::size_t) { return 1.0; });
  if (!(m.area > 0.0)) return m;
  m.centroid = integral([&](std::size_t i) { return x[i]; }) / m.area;
  const double var = integral([&](std::size_t i) { return std::pow(x[i] - m.centroid, 2); }) / m.area;
  m.width = std::sqrt(var);
  m.skewness = integral([&](std::size_t i) { return std::pow(x[i] - m.centroid, 3); }) / m.area / std::pow(m.width, 3);
  return m;
}

/// Cascaded master equation on [SC, phonon] with time-dependent decay rates
/// kappa_sc = 2 pi release^2 / delta and kappa_p = 2 pi catch^2 / delta.
inline Trajectory simulate_cascaded(const WaveguideConfig& cfg, std::optional<DensityMatrix> sc_input = std::nullopt,
                                    std::size_t save_stride = 0) {
  cfg.validate();
  const CompositeSpace space({2, cfg.n_max});
  const ComplexMatrix s = embed(sigma_minus(), space, 0);
  const ComplexMatrix b = embed(annihilation(cfg.n_max), space, 1);
  const double delta = cfg.delta();
  const lindblad::RateFn k_sc = [cfg, delta](double t) {
    return 2.0 * std::numbers::pi * std::pow(release_coupling(t, cfg), 2) / delta;
  };
  const lindblad::RateFn k_p = [cfg, delta](double t) {
    return 2.0 * std::numbers::pi * std::pow(catch_coupling(t, cfg), 2) / delta;
  };
  const int d = space.total_dim();
  const lindblad::TimeDependentHamiltonian h(ComplexMatrix::Zero(d, d));
  const std::vector<lindblad::Dissipator> ds{
      {s, k_sc}, {b, k_p}, {s, lindblad::constant(cfg.gamma_sc)}, {b, lindblad::constant(cfg.gamma_p)}};
  const lindblad::CascadeCoupling cc{s, b, k_sc, k_p, cfg.phi, cfg.transmission};

  const DensityMatrix in = sc_input.value_or(DensityMatrix::basis(2, 1));
  const DensityMatrix rho0 = DensityMatrix::unchecked(kron(in.matrix(), projector(cfg.n_max, 0)));
  IntegratorConfig icfg = cfg.integrator;
  icfg.save_stride = save_stride;
  const auto grid = sample_grid(cfg);
  return lindblad::evolve(h, ds, cc, rho0, {grid.front(), grid.back(), grid.size()}, icfg,
                          {{"pop_sc", ComplexMatrix(s.adjoint() * s)}, {"pop_ph", ComplexMatrix(b.adjoint() * b)}});
}

/// Superposition transfer fidelity SC -> phonon qubit subspace in the cascaded
/// model, without phase compensation.
inline double cascaded_superposition_fidelity(const WaveguideConfig& cfg) {
  Ket plus(2);
  plus << 1.0, 1.0;
  const DensityMatrix in = DensityMatrix::pure(plus);
  const auto traj = simulate_cascaded(cfg, in);
  const CompositeSpace space({2, cfg.n_max});
  const ComplexMatrix ph = partial_trace(traj.final_state, space, {1}).matrix().topLeftCorner(2, 2);
  return fidelity(in, DensityMatrix::unchecked(ph));
}

struct PhaseCalibration {
  double phi = 0.0;
  std::array<double, 4> fidelity{};  // at 0, pi/2, pi, 3pi/2
};

/// Picks phi from {0, pi/2, pi, 3pi/2} by the uncompensated superposition
/// transfer fidelity. Populations alone do not depend on phi.
inline PhaseCalibration calibrate_phase(WaveguideConfig cfg) {
  PhaseCalibration cal;
  std::size_t best = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    cfg.phi = static_cast<double>(i) * std::numbers::pi / 2.0;
    cal.fidelity[i] = cascaded_superposition_fidelity(cfg);
    if (cal.fidelity[i] > cal.fidelity[best]) best = i;
  }
  cal.phi = static_cast<double>(best) * std::numbers::pi / 2.0;
  return cal;
}

struct CrossValidation {
  double max_sc = 0.0;
  double max_ph = 0.0;
  double max() const { return std::max(max_sc, max_ph); }
};

/// Compares SC populations at equal times and phonon populations with the
/// cascaded curve shifted by the travel time (the cascaded model has no delay).
inline CrossValidation cross_validate(const Trajectory& schrodinger, const Trajectory& cascaded,
                                      const WaveguideConfig& cfg) {
  const auto& ssc = schrodinger.observable("pop_sc");
  const auto& sph = schrodinger.observable("pop_ph");
  const auto& csc = cascaded.observable("pop_sc");
  const auto& cph = cascaded.observable("pop_ph");
  if (ssc.size() != csc.size()) throw std::invalid_argument("cross_validate: sample grids differ");
  const auto shift = static_cast<std::size_t>(cfg.steps_per_travel);
  CrossValidation cv;
  for (std::size_t i = 0; i < ssc.size(); ++i) {
    cv.max_sc = std::max(cv.max_sc, std::abs(ssc[i] - csc[i]));
    const double ph = i >= shift ? cph[i - shift] : cph.front();
    cv.max_ph = std::max(cv.max_ph, std::abs(sph[i] - ph));
  }
  return cv;
}

inline CrossValidation cross_validate(const WaveguideConfig& cfg) {
  return cross_validate(simulate_schrodinger(cfg).trajectory, simulate_cascaded(cfg), cfg);
}

struct EmissionFit {
  double kappa = 0.0;
  double relative_error = 0.0;
};

/// Release-only run: 1/p_sc - 1 grows as e^{kappa t}. Fits ln(1/p - 1) by least
/// squares over samples with 0.02 < p_sc < 0.98, before the packet reflected at
/// the far end can return.
inline EmissionFit fit_emission_rate(WaveguideConfig cfg) {
  cfg.catch_enabled = false;
  const auto run = simulate_schrodinger(cfg);
  const auto& t = run.trajectory.times;
  const auto& p = run.trajectory.observable("pop_sc");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] > cfg.onset() + cfg.travel_time()) break;
    if (p[i] <= 0.02 || p[i] >= 0.98) continue;
    const double y = std::log(1.0 / p[i] - 1.0);
    sx += t[i];
    sy += y;
    sxx += t[i] * t[i];
    sxy += t[i] * y;
    ++n;
  }
  if (n < 3) throw std::runtime_error("fit_emission_rate: too few samples in the fit window");
  const double dn = static_cast<double>(n);
  EmissionFit fit;
  fit.kappa = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
  fit.relative_error = std::abs(fit.kappa - cfg.kappa()) / cfg.kappa();
  return fit;
}

/// Index of the sample where the released packet is halfway along the guide.
inline std::size_t midflight_index(const WaveguideConfig& cfg) {
  const double t_mid = cfg.onset() + 0.5 * cfg.travel_time();
  return static_cast<std::size_t>(std::lround(t_mid / (cfg.travel_time() / cfg.steps_per_travel)));
}

inline std::vector<double> position_grid(const WaveguideConfig& cfg, std::size_t n = 4001) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = cfg.L * static_cast<double>(i) / static_cast<double>(n - 1);
  return x;
}

}  // namespace phonobus::pitchcatch
