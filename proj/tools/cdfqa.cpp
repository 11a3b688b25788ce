// Command-line runner: executes configs and figure presets, validates
// configs, and prints the parallel-measurement report.
//
// Exit codes: 0 success, 2 configuration error, 3 physics/domain error.
// The output root comes from --output or $CDFQA_OUTPUT_ROOT (default ./out).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cdfqa/config.hpp"
#include "cdfqa/presets.hpp"

namespace {

void report(const cdfqa::RunOutput& out) {
  for (const auto& file : out.files) std::cout << "wrote " << file.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"counterdiabatic feedback protocol runner"};
  app.require_subcommand(1);

  std::string output_root = "out";
  if (const char* env = std::getenv("CDFQA_OUTPUT_ROOT")) output_root = env;
  app.add_option("-o,--output", output_root,
                 "output root directory (default $CDFQA_OUTPUT_ROOT or ./out)");

  std::string config_path, preset_name;
  CLI::App* run = app.add_subcommand("run", "run a config file");
  run->add_option("config", config_path, "config file path")->required();
  CLI::App* preset = app.add_subcommand("preset", "run a named figure preset");
  preset->add_option("name", preset_name, "preset name (see list-presets)")
      ->required();
  CLI::App* list = app.add_subcommand("list-presets", "list figure presets");
  CLI::App* counts = app.add_subcommand(
      "measure-counts", "print the parallel-measurement count table");
  CLI::App* validate =
      app.add_subcommand("validate", "check a config file without running it");
  validate->add_option("config", config_path, "config file path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      const cdfqa::ExperimentConfig cfg = cdfqa::load_config(config_path);
      if (cfg.preset)
        report(cdfqa::run_preset(*cfg.preset, output_root));
      else
        report(cdfqa::run_experiment(cfg, output_root));
    } else if (preset->parsed()) {
      report(cdfqa::run_preset(preset_name, output_root));
    } else if (list->parsed()) {
      for (const cdfqa::PresetInfo& p : cdfqa::preset_registry())
        std::cout << p.name << "\t" << p.figure << "\t" << p.summary << "\n";
    } else if (counts->parsed()) {
      std::cout << cdfqa::measure_count_report();
    } else if (validate->parsed()) {
      const cdfqa::ExperimentConfig cfg = cdfqa::load_config(config_path);
      if (cfg.preset) {
        cdfqa::find_preset(*cfg.preset);
        std::cout << "ok: preset " << *cfg.preset << "\n";
      } else {
        cdfqa::validate_config(cfg);
        std::cout << "ok: " << cdfqa::expand_config(cfg).size() << " curve(s)\n";
      }
    }
  } catch (const cdfqa::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cdfqa::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
