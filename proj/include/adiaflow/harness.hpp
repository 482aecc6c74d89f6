#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adiaflow/problem.hpp"

namespace adiaflow {

struct GridSpec {
  double T = 12.0;
  int N = 1200;
};

// A validated experiment description. `problem` is fully resolved (builtin or
// inline fields); `suites` is stored in canonical execution order.
struct ExperimentConfig {
  ProblemSetup problem;
  GridSpec grid;
  std::vector<double> eps_list;  // descending, all in (0, 1]
  double alpha = 2.0;
  double beta = 2.0;
  bool experimental = false;
  std::vector<std::string> suites;
  std::uint64_t seed = 12345;
  std::string output_dir = "adiaflow_out";
};

// Canonical suite order; config suites must form a subset.
const std::vector<std::string>& all_suites();

ExperimentConfig load_config(const nlohmann::json& js);
ExperimentConfig load_config_file(const std::string& filename);

// Runs the requested suites in dependency order, writes summary.json plus the
// per-suite data files under output_dir, and returns 0 when every suite
// passed, 1 otherwise. Configuration problems throw ConfigError.
int run_experiment(const ExperimentConfig& cfg);

nlohmann::json list_problems_json();
std::string list_problems_text();

// Concurrency cap: ADIAFLOW_THREADS when set, hardware concurrency otherwise.
int harness_thread_cap();

}  // namespace adiaflow
