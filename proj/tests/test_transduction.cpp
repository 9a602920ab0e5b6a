#include <catch2/catch_amalgamated.hpp>

#include "phonobus/transduction.hpp"

#include <numbers>

using namespace phonobus;
using namespace phonobus::transduction;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DirectChainConfig lossless() {
  DirectChainConfig c;
  c.gamma_sc = c.gamma_p = c.gamma_e = 0.0;
  return c;
}

}  // namespace

TEST_CASE("sech pulse shape") {
  const double g = 3.0, tau = 1.5;
  CHECK(sech_pulse(tau, g, tau) == g);
  CHECK_THAT(sech_pulse(tau + 6.0 / (2.0 * g), g, tau), WithinRel(g / std::cosh(6.0), 1e-14));
  CHECK_THAT(sech_pulse(tau + 6.0 / (2.0 * g), g, tau) / g, WithinAbs(0.00496, 1e-5));

  // Simpson rule over +-20/(2g) captures the area to ~1e-8.
  const int n = 20000;
  const double a = tau - 10.0 / g, b = tau + 10.0 / g, h = (b - a) / n;
  double area = sech_pulse(a, g, tau) + sech_pulse(b, g, tau);
  for (int i = 1; i < n; ++i) area += (i % 2 ? 4.0 : 2.0) * sech_pulse(a + i * h, g, tau);
  area *= h / 3.0;
  CHECK_THAT(area, WithinAbs(std::numbers::pi / 2.0, 1e-7));
}

TEST_CASE("build_chain shapes and operators") {
  const DirectChainConfig cfg;
  const Chain c = build_chain(cfg);
  CHECK(c.space.total_dim() == 12);
  CHECK(c.rho0.dim() == 12);
  REQUIRE(c.hamiltonian.driven.size() == 2);
  const ComplexMatrix qi1 = c.sc_lower * c.phonon_lower.adjoint() + c.sc_lower.adjoint() * c.phonon_lower;
  CHECK(c.hamiltonian.driven[0].op.isApprox(qi1));
  CHECK(hermiticity_error(c.hamiltonian.driven[0].op) == 0.0);
  CHECK(hermiticity_error(c.hamiltonian.driven[1].op) == 0.0);
  CHECK(c.dissipators.size() == 3);
  CHECK_THAT(expectation(c.rho0, embed(projector(2, 1), c.space, kSc)).real(), WithinAbs(1.0, 1e-15));

  DirectChainConfig bad;
  bad.n_max = 1;
  CHECK_THROWS_AS(build_chain(bad), std::invalid_argument);
  bad = DirectChainConfig{};
  bad.gamma_p = -1.0;
  CHECK_THROWS_AS(build_chain(bad), std::invalid_argument);
  bad = DirectChainConfig{};
  bad.f_e = 2.1;
  CHECK_THROWS_AS(build_chain(bad), std::invalid_argument);
}

TEST_CASE("without pulses populations only decay") {
  DirectChainConfig cfg;
  cfg.gamma_sc = 0.3;
  cfg.gamma_p = 0.2;
  cfg.gamma_e = 0.5;
  const Chain c = build_chain(cfg);
  const lindblad::TimeDependentHamiltonian idle(c.hamiltonian.static_part);
  Ket psi = kron(kron(basis_ket(2, 1), basis_ket(cfg.n_max, 1)), Ket((basis_ket(2, 0) + basis_ket(2, 1)) / std::sqrt(2.0)));
  const auto traj = lindblad::evolve(
      idle, c.dissipators, std::nullopt, DensityMatrix::pure(psi), {0.0, 4.0, 21}, {},
      {{"sc", embed(projector(2, 1), c.space, kSc)},
       {"n", ComplexMatrix(c.phonon_lower.adjoint() * c.phonon_lower)},
       {"spin", embed(projector(2, 1), c.space, kSpin)},
       {"coh", ComplexMatrix(0.5 * (c.spin_lower + c.spin_lower.adjoint()))}});
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    CHECK_THAT(traj.observable("sc")[i], WithinAbs(std::exp(-0.3 * t), 1e-7));
    CHECK_THAT(traj.observable("n")[i], WithinAbs(std::exp(-0.2 * t), 1e-7));
    CHECK_THAT(traj.observable("spin")[i], WithinAbs(0.5, 1e-9));
    // Coherence decays at gamma_e / 2.
    CHECK_THAT(traj.observable("coh")[i], WithinAbs(0.5 * std::exp(-0.25 * t), 1e-7));
  }
}

TEST_CASE("paper parameters hand the excitation down the chain") {
  DirectChainConfig cfg;
  const DelayOptimum opt = optimize_delay(cfg);
  cfg.dtau = opt.dtau;
  const TransferResult r = run_transfer(cfg);
  CHECK(r.fidelity == opt.fidelity);
  CHECK(1.0 - r.fidelity <= 2e-2);
  const auto& sc = r.trajectory.observable("pop_sc");
  const auto& ph = r.trajectory.observable("pop_ph");
  const auto& sp = r.trajectory.observable("pop_spin");
  CHECK(sp.back() >= 0.97);
  CHECK(sc.back() < 1e-3);
  const auto peak_ph = std::max_element(ph.begin(), ph.end()) - ph.begin();
  CHECK(ph[peak_ph] > 0.95);
  CHECK(sc[peak_ph] < 0.05);
  CHECK(sp[peak_ph] < 0.05);
}

TEST_CASE("lossless transfer with optimized delay") {
  const auto cfg = lossless();
  const DelayOptimum opt = optimize_delay(cfg);
  CHECK(1.0 - opt.fidelity <= 1e-3);

  auto sup = cfg;
  sup.input = InputState::superposition;
  CHECK(transfer_fidelity(sup, opt.dtau) >= 0.999);
}

TEST_CASE("ground input transfers trivially") {
  auto cfg = DirectChainConfig{};
  cfg.input = InputState::custom;
  cfg.custom_input = DensityMatrix::basis(2, 0);
  const auto r = run_transfer(cfg);
  CHECK_THAT(r.fidelity, WithinAbs(1.0, 1e-9));
  const auto& sp = r.trajectory.observable("pop_spin");
  CHECK(*std::max_element(sp.begin(), sp.end()) < 1e-12);
}

TEST_CASE("delay optimum is an argmax and stable under refinement") {
  // Lossy chain: the fidelity has a genuine interior maximum in dtau.
  const DirectChainConfig cfg;
  const double hi = default_dtau(cfg);
  const DelayOptimum coarse = optimize_delay(cfg, 0.0, hi, 41);
  // The optimizer reports the earliest delay within 1e-6 of the best value.
  for (int i = 0; i <= 40; ++i) CHECK(transfer_fidelity(cfg, hi * i / 40.0) <= coarse.fidelity + 1e-6);
  const DelayOptimum fine = optimize_delay(cfg, 0.0, hi, 81);
  CHECK(std::abs(fine.dtau - coarse.dtau) < 1e-3);
  auto at_opt = cfg;
  at_opt.dtau = coarse.dtau;
  CHECK(run_transfer(at_opt).fidelity == coarse.fidelity);
  CHECK_THROWS_AS(optimize_delay(cfg, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("lossless single excitation is conserved and stays below the cutoff") {
  auto cfg = lossless();
  cfg.dtau = 0.5;
  const auto r = run_transfer(cfg);
  const auto& sc = r.trajectory.observable("pop_sc");
  const auto& ph = r.trajectory.observable("pop_ph");
  const auto& sp = r.trajectory.observable("pop_spin");
  for (std::size_t i = 0; i < sc.size(); ++i) CHECK_THAT(sc[i] + ph[i] + sp[i], WithinAbs(1.0, 1e-6));
  CHECK(r.max_top_fock < 1e-6);

  auto bigger = cfg;
  bigger.n_max = cfg.n_max + 1;
  CHECK(std::abs(run_transfer(bigger).fidelity - r.fidelity) < 1e-8);
}

TEST_CASE("reversed pulse order transfers spin to SC with the same fidelity") {
  for (const auto input : {InputState::excited, InputState::superposition}) {
    auto fwd = lossless();
    fwd.input = input;
    auto rev = fwd;
    rev.reverse = true;
    for (double dtau : {0.3, 0.5, 0.6}) {
      CHECK(std::abs(transfer_fidelity(fwd, dtau) - transfer_fidelity(rev, dtau)) < 1e-6);
    }
  }
}

TEST_CASE("pulse margins are enforced") {
  DirectChainConfig cfg;
  cfg.tau_scp = 1.0 / cfg.g_scp;
  CHECK_THROWS_AS(run_transfer(cfg), std::invalid_argument);
  cfg = DirectChainConfig{};
  cfg.tau_scp = 1.0;
  cfg.tau_pe = 0.5;
  CHECK_THROWS_AS(run_transfer(cfg), std::invalid_argument);
}

TEST_CASE("sweep is deterministic across worker counts and monotone in dephasing") {
  DirectChainConfig tmpl;
  const std::vector<double> g{0.5, 2.0};
  const std::vector<double> ge{1.0, 10.0, 100.0};
  const SweepTable one = sweep(tmpl, g, ge, 1);
  const SweepTable three = sweep(tmpl, g, ge, 3);
  REQUIRE(one.cells.size() == 6);
  for (std::size_t i = 0; i < one.cells.size(); ++i) {
    CHECK(one.cells[i].fidelity == three.cells[i].fidelity);
    CHECK(one.cells[i].dtau == three.cells[i].dtau);
  }
  for (std::size_t ig = 0; ig < g.size(); ++ig) {
    for (std::size_t k = 1; k < ge.size(); ++k) CHECK(one.at(ig, k).fidelity <= one.at(ig, k - 1).fidelity);
  }
  CHECK(one.at(1, 0).fidelity >= one.at(0, 0).fidelity);
  CHECK_THROWS_AS(sweep(tmpl, {}, ge, 1), std::invalid_argument);
}

TEST_CASE("log grid endpoints") {
  const auto v = log_grid(0.1, 10.0, 20);
  CHECK(v.size() == 20);
  CHECK(v.front() == 0.1);
  CHECK(v.back() == 10.0);
  CHECK_THAT(v[1] / v[0], WithinRel(std::pow(100.0, 1.0 / 19.0), 1e-12));
}
