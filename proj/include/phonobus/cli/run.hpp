#pragma once

#include "phonobus/cli/config.hpp"
#include "phonobus/cli/io.hpp"
#include "phonobus/msgate.hpp"
#include "phonobus/nuclear.hpp"
#include "phonobus/pitchcatch.hpp"
#include "phonobus/strain.hpp"
#include "phonobus/transduction.hpp"
#include "phonobus/version.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace phonobus::cli {

namespace fs = std::filesystem;

inline void apply_integrator(const RunConfig& rc, IntegratorConfig& icfg) {
  if (rc.rel_tol) icfg.rel_tol = *rc.rel_tol;
  if (rc.abs_tol) icfg.abs_tol = *rc.abs_tol;
}

inline transduction::DirectChainConfig to_chain(const RunConfig& rc) {
  transduction::DirectChainConfig c;
  c.f_sc = rc.number("f_sc") * 1e-9;
  c.f_p = rc.number("f_p") * 1e-9;
  c.f_e = rc.number("f_e") * 1e-9;
  c.g_scp = units::hz(rc.number("g_scp"));
  c.gamma_sc = units::hz(rc.number("gamma_sc"));
  c.gamma_p = units::hz(rc.number("gamma_p"));
  c.n_max = rc.count("n_max");
  const std::string& in = rc.text("input");
  if (in == "excited") {
    c.input = transduction::InputState::excited;
  } else if (in == "superposition") {
    c.input = transduction::InputState::superposition;
  } else {
    throw ConfigError("input: expected excited or superposition, got '" + in + "'");
  }
  c.phase_compensation = rc.flag("phase_compensation");
  if (rc.has("g_pe")) c.g_pe = units::hz(rc.number("g_pe"));
  if (rc.has("gamma_e")) c.gamma_e = units::hz(rc.number("gamma_e"));
  if (rc.has("reverse")) c.reverse = rc.flag("reverse");
  if (rc.has("samples")) c.samples = static_cast<std::size_t>(rc.count("samples"));
  c.tau_scp = rc.optional_number("tau_scp");
  c.tau_pe = rc.optional_number("tau_pe");
  c.dtau = rc.optional_number("dtau");
  apply_integrator(rc, c.integrator);
  return c;
}

inline pitchcatch::WaveguideConfig to_waveguide(const RunConfig& rc) {
  pitchcatch::WaveguideConfig c;
  c.L = rc.number("L");
  c.c = rc.number("c");
  c.N0 = rc.count("N0");
  c.M = rc.count("M");
  c.g_qm = units::hz(rc.number("g_qm"));
  c.tau_pc = rc.optional_number("tau_pc");
  c.phi = rc.number("phi");
  c.transmission = rc.number("transmission");
  c.catch_enabled = rc.flag("catch");
  c.steps_per_travel = rc.count("steps_per_travel");
  apply_integrator(rc, c.integrator);
  return c;
}

inline nuclear::HyperfineConfig to_hyperfine(const RunConfig& rc) {
  nuclear::HyperfineConfig c;
  c.A_parallel = units::hz(rc.number("A_parallel"));
  c.Omega_mw = units::hz(rc.number("Omega_mw"));
  c.gamma_e = units::hz(rc.number("gamma_e"));
  c.gamma_n = units::hz(rc.number("gamma_n"));
  c.tau = rc.optional_number("tau").value_or(0.0);
  return c;
}

inline msgate::MSConfig to_ms(const RunConfig& rc) {
  msgate::MSConfig c;
  c.f_e = rc.number("f_e") * 1e-9;
  c.f_p = rc.number("f_p") * 1e-9;
  c.g_eff0 = units::hz(rc.number("g_eff0"));
  c.delta_ms = units::hz(rc.number("delta_ms"));
  c.n_max = rc.count("n_max");
  c.gamma_e = units::hz(rc.number("gamma_e"));
  c.gamma_p = units::hz(rc.number("gamma_p"));
  c.t_end = rc.optional_number("t_end").value_or(0.0);
  c.samples = static_cast<std::size_t>(rc.count("samples"));
  c.pre_rwa = rc.flag("pre_rwa");
  apply_integrator(rc, c.integrator);
  return c;
}

namespace detail {

inline void write_trajectory(const fs::path& path, const lindblad::Trajectory& tr, const std::vector<std::string>& names,
                             const std::vector<double>* extra = nullptr) {
  std::vector<std::string> header{"t_us"};
  header.insert(header.end(), names.begin(), names.end());
  if (extra) header.push_back("ideal");
  CsvWriter csv(path, header);
  std::vector<const std::vector<double>*> cols;
  for (const auto& n : names) cols.push_back(&tr.observable(n));
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    std::vector<double> row{tr.times[i]};
    for (const auto* c : cols) row.push_back((*c)[i]);
    if (extra) row.push_back((*extra)[i]);
    csv.row(row);
  }
}

inline DensityMatrix qubit_input(const std::string& name) {
  if (name == "ground") return DensityMatrix::basis(2, 0);
  if (name == "excited") return DensityMatrix::basis(2, 1);
  if (name == "superposition") {
    Ket p(2);
    p << 1.0, 1.0;
    return DensityMatrix::pure(p);
  }
  throw ConfigError("input: expected ground, excited or superposition, got '" + name + "'");
}

}  // namespace detail

/// Runs one protocol, writes its CSVs and manifest.json under `out`, and
/// returns the manifest. Output bytes do not depend on `workers`.
inline nlohmann::ordered_json run(const RunConfig& rc, const fs::path& out, std::size_t workers = 1) {
  fs::create_directories(out);
  nlohmann::ordered_json summary;
  std::vector<std::string> files;
  const std::string& p = rc.protocol;

  if (p == "transfer") {
    auto cfg = to_chain(rc);
    if (!cfg.dtau && rc.flag("optimize_delay")) cfg.dtau = transduction::optimize_delay(cfg).dtau;
    const auto r = transduction::run_transfer(cfg);
    detail::write_trajectory(out / "populations.csv", r.trajectory, {"pop_sc", "pop_ph", "pop_spin"});
    files.push_back("populations.csv");
    summary["fidelity"] = r.fidelity;
    summary["dtau_us"] = r.dtau;
    summary["max_top_fock"] = r.max_top_fock;
  } else if (p == "sweep") {
    const auto tmpl = to_chain(rc);
    const auto g = transduction::log_grid(rc.number("g_pe_min") * 1e-6, rc.number("g_pe_max") * 1e-6,
                                          static_cast<std::size_t>(rc.count("g_pe_points")));
    const auto ge = transduction::log_grid(rc.number("gamma_e_min") * 1e-3, rc.number("gamma_e_max") * 1e-3,
                                           static_cast<std::size_t>(rc.count("gamma_e_points")));
    const auto table = transduction::sweep(tmpl, g, ge, workers);
    CsvWriter csv(out / "fidelity_grid.csv", {"g_pe_MHz", "gamma_e_kHz", "F", "log10_infidelity", "dtau_us"});
    double best = 0.0, worst = 1.0;
    for (const auto& c : table.cells) {
      csv.row({c.g_pe_mhz, c.gamma_e_khz, c.fidelity, c.log10_infidelity(), c.dtau});
      best = std::max(best, c.fidelity);
      worst = std::min(worst, c.fidelity);
    }
    files.push_back("fidelity_grid.csv");
    summary["cells"] = table.cells.size();
    summary["best_fidelity"] = best;
    summary["worst_fidelity"] = worst;
  } else if (p == "pitch-catch") {
    const auto cfg = to_waveguide(rc);
    const auto r = pitchcatch::simulate_schrodinger(cfg);
    detail::write_trajectory(out / "populations.csv", r.trajectory, {"pop_sc", "pop_wg", "pop_ph"});
    const auto x = pitchcatch::position_grid(cfg, static_cast<std::size_t>(rc.count("packet_points")));
    const std::size_t mid = std::min(pitchcatch::midflight_index(cfg), r.amplitudes.size() - 1);
    const auto intensity = pitchcatch::wavepacket_snapshot(r.amplitudes[mid], cfg, x);
    CsvWriter csv(out / "packet.csv", {"x_m", "intensity"});
    for (std::size_t i = 0; i < x.size(); ++i) csv.row({x[i], intensity[i]});
    files.insert(files.end(), {"populations.csv", "packet.csv"});
    const auto m = pitchcatch::packet_moments(x, intensity);
    summary["final_pop_ph"] = r.trajectory.observable("pop_ph").back();
    summary["max_norm_error"] = r.max_norm_error;
    summary["packet_time_us"] = r.trajectory.times[mid];
    summary["packet_skewness"] = m.skewness;
    summary["kappa_per_us"] = cfg.kappa();
  } else if (p == "strain-map") {
    if (!rc.has("input")) throw ConfigError("input: strain-map needs a strain CSV path");
    fs::path in = rc.text("input");
    if (in.is_relative()) in = fs::path(rc.base_dir) / in;
    std::ifstream f(in);
    if (!f) throw ConfigError("input: cannot open '" + in.string() + "'");
    const auto samples = strain::read_strain_csv(f);
    strain::SusceptibilityConstants k{rc.number("t_parallel"), rc.number("t_perp"), rc.number("d"), rc.number("f")};
    const auto map = strain::coupling_map(samples, k, rc.number("normalization"), workers);
    CsvWriter csv(out / "coupling_map.csv", {"x", "y", "z", "g_orb_MHz"});
    for (const auto& pt : map.points) csv.row({pt.position[0], pt.position[1], pt.position[2], pt.g_orb * 1e-6});
    files.push_back("coupling_map.csv");
    summary["points"] = map.points.size();
    summary["max_abs_g_orb_MHz"] = map.max_abs_g_orb * 1e-6;
  } else if (p == "nuclear-swap") {
    const auto cfg = to_hyperfine(rc);
    const auto r = nuclear::swap_protocol(cfg, detail::qubit_input(rc.text("input")), rc.flag("phase_compensation"),
                                          rc.count("N_half"));
    CsvWriter csv(out / "gates.csv", {"gate_index", "duration_us", "F_running"});
    for (const auto& g : r.gates) csv.row({static_cast<double>(g.index), g.duration, g.fidelity_running});
    files.push_back("gates.csv");
    summary["fidelity"] = r.fidelity;
    summary["total_time_us"] = r.total_time;
    summary["weak_drive_warning"] = cfg.weak_drive_warning();
  } else if (p == "ms-gate") {
    const auto cfg = to_ms(rc);
    const auto r = msgate::simulate(cfg);
    detail::write_trajectory(out / "populations.csv", r.trajectory, {"n_gg", "n_ee"}, &r.ideal);
    files.push_back("populations.csv");
    const double tb = msgate::bell_time(cfg);
    const auto bell = msgate::bell_state_fidelity(cfg, tb);
    summary["g_ms_kHz"] = units::to_khz(cfg.rate());
    summary["bell_time_us"] = tb;
    summary["bell_fidelity"] = bell.fidelity;
    summary["bell_purity"] = bell.purity;
    summary["cutoff_warning"] = r.cutoff_warning;
    summary["weak_coupling_warning"] = cfg.weak_coupling_warning();
    summary["rwa_warning"] = cfg.rwa_warning();
  } else {
    throw ConfigError("unknown protocol '" + p + "'");
  }

  nlohmann::ordered_json manifest;
  manifest["tool"] = "phonobus";
  manifest["version"] = kVersion;
  manifest["protocol"] = p;
  nlohmann::ordered_json params;
  for (const auto& d : schema(p)) {
    if (rc.has(d.name)) params[d.name] = format_value(rc.at(d.name));
  }
  manifest["parameters"] = params;
  manifest["config"] = serialize(rc);
  manifest["files"] = files;
  manifest["summary"] = summary;
  std::ofstream(out / "manifest.json") << manifest.dump(2) << "\n";
  return manifest;
}

}  // namespace phonobus::cli
