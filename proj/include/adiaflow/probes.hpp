#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adiaflow/grid.hpp"
#include "adiaflow/linops.hpp"
#include "adiaflow/problem.hpp"
#include "adiaflow/rng.hpp"

namespace adiaflow {

// One estimate family evaluated over random smooth fields: for each eps the
// worst observed lhs/rhs ratio. A bounded family shows up as ratios that do
// not drift as eps shrinks.
struct ProbeResult {
  std::string inequality_id;
  std::vector<double> eps_values;
  std::vector<double> max_ratio;
  int fields_tested = 0;
};

nlohmann::json probe_to_json(const ProbeResult& r);

// Known ids:
//   sobolev          sqrt(eps)*|Z|_{0,inf,eps} vs 3 |Z|_{1,2,eps}; ratio <= 1
//   ambient          component bound for D^eps on arbitrary fields
//   ambient_adjoint  same for the adjoint
//   range_12         sqrt(eps)*sup + (1,2,eps) norm of adjoint-range fields vs |D Z*|
//   range_pi         (1,2,eps) norm of adjoint-range fields vs eps |D Z*| + |pi_eps D Z*|
//   range_components constraint/multiplier components of adjoint-range fields
//   difference       commutator of pi_eps with the adjoints vs its eps-weighted bound
//   embedding        |I_q pi_eps Z|_{0,2,eps} vs 2 |Z|_{0,2,eps}; ratio <= 1
//   pi_identity      max node deviation of pi_eps(I_q xi) from xi (absolute, not a ratio)
//   b_inverse        max fiber operator norm of B^{-1} and B^{-1}P; <= 1
std::vector<std::string> probe_ids();

ProbeResult run_probe(const ProblemSetup& p, BasePath& path, const std::string& id,
                      const std::vector<double>& eps_values, int n_fields, Rng& rng,
                      double alpha = 2.0, double beta = 2.0);

}  // namespace adiaflow
