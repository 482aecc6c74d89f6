#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "adiaflow/errors.hpp"
#include "adiaflow/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"adiaflow: hypersurface flows, their adiabatic deformations, and the estimates "
               "that control them"};
  app.require_subcommand(1);

  std::string run_config, check_config;
  bool json_out = false;

  CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", run_config, "JSON config file")->required();

  CLI::App* check = app.add_subcommand("check", "validate a config file without running it");
  check->add_option("config", check_config, "JSON config file")->required();

  CLI::App* list = app.add_subcommand("list-problems", "show the builtin problem catalogue");
  list->add_flag("--json", json_out, "machine-readable output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      adiaflow::ExperimentConfig cfg = adiaflow::load_config_file(run_config);
      const int rc = adiaflow::run_experiment(cfg);
      std::printf("%s: %s (summary in %s/summary.json)\n", cfg.problem.name.c_str(),
                  rc == 0 ? "all suites passed" : "FAILURES, see summary", cfg.output_dir.c_str());
      return rc;
    }
    if (check->parsed()) {
      adiaflow::ExperimentConfig cfg = adiaflow::load_config_file(check_config);
      std::printf("ok: problem %s, grid T=%g N=%d, %zu eps values, %zu suites\n",
                  cfg.problem.name.c_str(), cfg.grid.T, cfg.grid.N, cfg.eps_list.size(),
                  cfg.suites.size());
      return 0;
    }
    if (list->parsed()) {
      if (json_out)
        std::printf("%s\n", adiaflow::list_problems_json().dump(2).c_str());
      else
        std::printf("%s", adiaflow::list_problems_text().c_str());
      return 0;
    }
  } catch (const adiaflow::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
