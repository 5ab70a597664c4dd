#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "ssb/experiments/config.hpp"
#include "ssb/experiments/runner.hpp"

using namespace ssb::experiments;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw semantic("cannot read config file '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

ExperimentConfig load(const std::string& path, const std::string& preset_name) {
  if (!preset_name.empty()) {
    if (!path.empty()) throw semantic("give either a config file or --preset, not both");
    return validate_config(preset(preset_name));
  }
  if (path.empty()) throw semantic("missing config file (or --preset <name>)");
  return validate_config(read_file(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for spontaneous symmetry breaking in the classical limit", "ssb-lab"};
  app.set_version_flag("--version", std::string(tool_name) + " " + tool_version);
  app.require_subcommand(1);

  std::string config_path, preset_name, out_dir;
  std::size_t jobs = 0;
  bool no_svg = false;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write CSV/JSON/SVG outputs");
  run_cmd->add_option("config", config_path, "Experiment config (JSON)");
  std::string presets;
  for (const auto& p : preset_names()) presets += (presets.empty() ? "" : ", ") + p;
  run_cmd->add_option("--preset", preset_name, "Built-in parameter set: " + presets);
  run_cmd->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run_cmd->add_option("--jobs", jobs, "Worker threads (default: logical cores)")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--no-svg", no_svg, "Skip SVG plots");

  auto* validate_cmd = app.add_subcommand("validate", "Check a config and print it fully defaulted");
  validate_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  ExperimentConfig cfg;
  try {
    cfg = load(config_path, validate_cmd->parsed() ? std::string() : preset_name);
  } catch (const ConfigError& e) {
    std::cerr << "ssb-lab: " << e.what() << "\n";
    return exit_config;
  }

  if (validate_cmd->parsed()) {
    std::cout << cfg.echo().dump(2) << "\n";
    return exit_ok;
  }

  RunOptions opt;
  if (!out_dir.empty()) opt.out_dir = out_dir;
  if (no_svg) opt.emit_svg = false;
  opt.jobs = jobs;
  RunManifest manifest;
  std::string diagnostic;
  const int code = run(cfg, opt, manifest, diagnostic);
  if (!diagnostic.empty()) std::cerr << "ssb-lab: " << diagnostic << "\n";
  std::cout << to_string(cfg.kind) << ": " << manifest.status << " (" << manifest.tasks.size() << " tasks, "
            << manifest.wall_seconds << " s) -> " << (opt.out_dir ? *opt.out_dir : cfg.output_dir) << "\n";
  return code;
}
