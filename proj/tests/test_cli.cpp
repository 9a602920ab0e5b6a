#include <catch2/catch_amalgamated.hpp>

#include "phonobus/cli/run.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace phonobus;
using namespace phonobus::cli;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream f(p);
  for (std::string l; std::getline(f, l);) out.push_back(l);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("phonobus_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// Runs the built tool; returns the exit status.
int tool(const std::string& args, const fs::path& log) {
  const char* exe = std::getenv("PHONOBUS_TOOL");
  if (!exe) return -1;
  const std::string cmd = std::string(exe) + " " + args + " >" + log.string() + " 2>&1";
  const int s = std::system(cmd.c_str());
  return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

}  // namespace

TEST_CASE("empty transfer block resolves to the section V defaults") {
  const RunConfig rc = parse_config_text("[transfer]\n");
  CHECK(rc.protocol == "transfer");
  CHECK(rc.number("g_scp") == 50e6);
  CHECK(rc.number("g_pe") == 1e6);
  CHECK(rc.number("gamma_sc") == 10e3);
  CHECK(rc.number("gamma_p") == 100.0);
  CHECK(rc.number("gamma_e") == 10e3);
  CHECK(!rc.has("dtau"));
  const auto c = to_chain(rc);
  CHECK_THAT(c.g_scp, WithinRel(units::mhz(50.0), 1e-15));
  CHECK_THAT(c.gamma_p, WithinRel(units::khz(0.1), 1e-15));
  CHECK(c.f_sc == 2.0);
}

TEST_CASE("units convert at the boundary") {
  const RunConfig rc = parse_config_text("[pitch-catch]\nL = 250 um\nc = 3 km/s\ng_qm = 0.5 MHz\ntau_pc = 500 ns\n");
  CHECK_THAT(rc.number("L"), WithinRel(2.5e-4, 1e-15));
  CHECK(rc.number("c") == 3000.0);
  CHECK(rc.number("tau_pc") == 0.5);
  const auto w = to_waveguide(rc);
  CHECK_THAT(w.g_qm, WithinRel(units::mhz(0.5), 1e-15));
  CHECK(parse_config_text("[strain-map]\nd = 1 PHz\n").number("d") == 1e15);
  CHECK(parse_config_text("[ms-gate]\nt_end = 2 us\n").number("t_end") == 2.0);
}

TEST_CASE("config errors name the key") {
  CHECK_THAT(error_of("[transfer]\ng_pe = -1 MHz\n"), ContainsSubstring("g_pe"));
  CHECK_THAT(error_of("[transfer]\ngamma_e = -3 kHz\n"), ContainsSubstring("gamma_e"));
  CHECK_THAT(error_of("[transfer]\ng_pe = 1\n"), ContainsSubstring("g_pe: missing unit"));
  CHECK_THAT(error_of("[transfer]\nbogus = 1 MHz\n"), ContainsSubstring("bogus: unknown key"));
  CHECK_THAT(error_of("[transfer]\ng_pe = 1 furlong\n"), ContainsSubstring("g_pe: unknown unit"));
  CHECK_THAT(error_of("[transfer]\ntau_scp = 3 MHz\n"), ContainsSubstring("tau_scp"));
  CHECK_THAT(error_of("[transfer]\nn_max = 2.5\n"), ContainsSubstring("n_max"));
  CHECK_THAT(error_of("[transfer]\nreverse = maybe\n"), ContainsSubstring("reverse"));
  CHECK_THAT(error_of("[teleport]\n"), ContainsSubstring("teleport"));
  CHECK_THAT(error_of("[transfer]\n[sweep]\n"), ContainsSubstring("sweep"));
  CHECK_THAT(error_of("[integrator]\nrel_tol = 1e-9\n"), ContainsSubstring("no protocol"));
  CHECK_THAT(error_of("[ms-gate]\n[integrator]\nrtol = 1e-9\n"), ContainsSubstring("rtol"));
  CHECK_THROWS_AS(parse_config_text("[sweep]\n", "transfer"), ConfigError);
}

TEST_CASE("serialize then parse gives an equal config") {
  for (const std::string text : {
           std::string("[transfer]\ng_pe = 0.123456789 MHz\ntau_scp = 37 ns\ndtau = 0.41 us\ninput = superposition\n"),
           std::string("[sweep]\ng_pe_points = 3\ngamma_e_min = 1.1 kHz\n[integrator]\nrel_tol = 3e-9\n"),
           std::string("[pitch-catch]\nL = 1.7 mm\nphi = -0.3\ncatch = false\n"),
           std::string("[strain-map]\ninput = field.csv\nnormalization = 5.4e-9\n"),
           std::string("[nuclear-swap]\ntau = 2.1 us\nN_half = 8\n"),
           std::string("[ms-gate]\ng_eff0 = 7.1 MHz\npre_rwa = yes\n"),
       }) {
    const RunConfig a = parse_config_text(text);
    const RunConfig b = parse_config_text(serialize(a));
    CHECK(a == b);
    CHECK(serialize(b) == serialize(a));
  }
}

TEST_CASE("csv writer uses 12 significant digits") {
  const auto dir = scratch("csv");
  {
    CsvWriter w(dir / "a.csv", {"a", "b"});
    w.row({1.0 / 3.0, 123456789.0});
    CHECK_THROWS_AS(w.row({1.0}), std::logic_error);
  }
  const auto l = lines(dir / "a.csv");
  REQUIRE(l.size() == 2);
  CHECK(l[0] == "a,b");
  CHECK(l[1] == "0.333333333333,123456789");
}

TEST_CASE("transfer run writes monotone populations and a manifest, deterministically") {
  const auto dir = scratch("transfer");
  RunConfig rc = parse_config_text("[transfer]\nsamples = 101\n");
  const auto m = run(rc, dir / "a");
  run(rc, dir / "b");
  const auto l = lines(dir / "a" / "populations.csv");
  REQUIRE(l.size() == 102);
  CHECK(l[0] == "t_us,pop_sc,pop_ph,pop_spin");
  double prev = -1.0;
  for (std::size_t i = 1; i < l.size(); ++i) {
    const double t = std::stod(l[i].substr(0, l[i].find(',')));
    CHECK(t > prev);
    prev = t;
  }
  CHECK(slurp(dir / "a" / "populations.csv") == slurp(dir / "b" / "populations.csv"));
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
  CHECK(m["summary"]["fidelity"].get<double>() > 0.99);
  CHECK(parse_config_text(m["config"].get<std::string>()) == rc);
}

TEST_CASE("sweep grid bytes do not depend on the worker count") {
  const auto dir = scratch("sweep");
  const RunConfig rc = parse_config_text("[sweep]\ng_pe_points = 2\ngamma_e_points = 2\ng_pe_min = 1 MHz\n");
  run(rc, dir / "w1", 1);
  run(rc, dir / "w2", 2);
  const auto l = lines(dir / "w1" / "fidelity_grid.csv");
  REQUIRE(l.size() == 5);
  CHECK(l[0] == "g_pe_MHz,gamma_e_kHz,F,log10_infidelity,dtau_us");
  CHECK(slurp(dir / "w1" / "fidelity_grid.csv") == slurp(dir / "w2" / "fidelity_grid.csv"));
}

TEST_CASE("strain map reads a field relative to the config file") {
  const auto dir = scratch("strain");
  write(dir / "field.csv", "x,y,z,e11,e22,e33,e12,e13,e23\n0,0,0,0,0,1,0,0,0\n5,0,0,0,0,0,0,0,0\n");
  write(dir / "map.ini", "[strain-map]\ninput = field.csv\nnormalization = 1e-9\n");
  const RunConfig rc = parse_config(dir / "map.ini");
  run(rc, dir / "out");
  const auto l = lines(dir / "out" / "coupling_map.csv");
  REQUIRE(l.size() == 3);
  CHECK(l[0] == "x,y,z,g_orb_MHz");
  CHECK(l[2] == "5,0,0,0");
  // Pure e33: eps_xx - eps_yy = 4/6 - 0 in the defect frame; d = 1 PHz, scale 1e-9.
  const double g = std::stod(l[1].substr(l[1].rfind(',') + 1));
  CHECK_THAT(g, WithinRel(2.0 / 3.0, 1e-11));
  CHECK_THROWS_AS(run(parse_config_text("[strain-map]\n"), dir / "none"), ConfigError);
}

TEST_CASE("nuclear swap and ms gate write their schemas") {
  const auto dir = scratch("gates");
  run(parse_config_text("[nuclear-swap]\ngamma_e = 0 Hz\ngamma_n = 0 Hz\n"), dir / "swap");
  const auto g = lines(dir / "swap" / "gates.csv");
  REQUIRE(g.size() == 11);
  CHECK(g[0] == "gate_index,duration_us,F_running");
  const auto m = run(parse_config_text("[ms-gate]\ngamma_e = 0 Hz\ngamma_p = 0 Hz\nsamples = 51\n"), dir / "ms");
  const auto l = lines(dir / "ms" / "populations.csv");
  REQUIRE(l.size() == 52);
  CHECK(l[0] == "t_us,n_gg,n_ee,ideal");
  CHECK(l[1] == "0,1,0,1");
  CHECK(m["summary"]["bell_fidelity"].get<double>() > 0.98);
}

TEST_CASE("command line tool") {
  if (!std::getenv("PHONOBUS_TOOL")) SKIP("PHONOBUS_TOOL not set");
  const auto dir = scratch("tool");
  const auto out = (dir / "ms").string();
  write(dir / "ms.ini", "[ms-gate]\nsamples = 21\n");
  CHECK(tool("ms-gate --config " + (dir / "ms.ini").string() + " --out " + out + " --workers 2 --seedless", dir / "log") == 0);
  CHECK(fs::exists(dir / "ms" / "populations.csv"));
  CHECK(fs::exists(dir / "ms" / "manifest.json"));

  write(dir / "bad.ini", "[transfer]\ng_pe = -1 MHz\n");
  CHECK(tool("transfer --config " + (dir / "bad.ini").string() + " --out " + out, dir / "log") == 2);
  CHECK_THAT(slurp(dir / "log"), ContainsSubstring("g_pe"));

  CHECK(tool("transfer --config " + (dir / "ms.ini").string() + " --out " + out, dir / "log") == 2);
  CHECK(tool("teleport", dir / "log") != 0);
}
