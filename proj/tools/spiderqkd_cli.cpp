#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spiderqkd/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"spiderqkd: spider identities, protocol simulation and eavesdropper analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool quiet = false;

  for (const char* name : {"verify-spiders", "simulate", "analyze-attack", "calibrate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out, "output path (overrides the config)");
    sub->add_option("--seed", seed, "seed (overrides the config)");
    sub->add_flag("--quiet", quiet, "no progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : spiderqkd::kExitBadConfig;
  }

  const auto* sub = app.get_subcommands().front();
  spiderqkd::CommandOptions opt;
  opt.quiet = quiet;
  if (sub->count("--out")) opt.out = out;
  if (sub->count("--seed")) opt.seed = seed;

  spiderqkd::Json config;
  try {
    config = spiderqkd::read_json_file(config_path);
  } catch (const spiderqkd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return spiderqkd::kExitBadConfig;
  }
  return spiderqkd::run_command(sub->get_name(), config, opt, std::cout, std::cerr);
}
