#include "phonobus/cli/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace phonobus::cli;
  CLI::App app{"Phonon-bus transduction and gate simulations"};
  app.set_version_flag("--version", phonobus::kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::size_t workers = 1;
  bool seedless = false;
  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (default out/<protocol>)");
  app.add_option("--workers", workers, "worker threads for sweep and strain-map")->check(CLI::PositiveNumber);
  app.add_flag("--seedless", seedless, "accepted for scripting; every protocol is deterministic");

  for (const auto& p : protocols()) app.add_subcommand(p, p + " protocol")->fallthrough();
  CLI11_PARSE(app, argc, argv);

  const std::string protocol = app.get_subcommands().front()->get_name();
  RunConfig cfg;
  try {
    cfg = config_path.empty() ? parse_config_text("[" + protocol + "]\n", protocol) : parse_config(config_path, protocol);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (out_dir.empty()) out_dir = "out/" + protocol;
  try {
    const auto manifest = run(cfg, out_dir, workers);
    std::cout << manifest["summary"].dump(2) << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
