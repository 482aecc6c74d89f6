#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adiaflow/scalar_field.hpp"

namespace adiaflow {

struct SigmaSamplerConfig {
  std::uint64_t seed = 1;
  int count = 256;
};

// A constrained-gradient problem: the zero level set of H inside the box,
// the objective F restricted to it, and the numeric guard rails.
struct ProblemSetup {
  std::string name;
  int dim = 0;
  ScalarField F;
  ScalarField H;
  double kappa = 0.5;        // retraction is only attempted for |H| <= kappa
  double m_H_floor = 1e-6;   // frames refuse to build below this |grad H|
  double boundary_tol = 1e-4;  // how close path ends must sit to the critical pair
  Eigen::VectorXd box_lo, box_hi;
  SigmaSamplerConfig sampler;

  bool in_box(const Eigen::VectorXd& p, double margin = 0.0) const {
    for (int i = 0; i < dim; ++i)
      if (p[i] < box_lo[i] - margin || p[i] > box_hi[i] + margin) return false;
    return true;
  }
};

struct BuiltinInfo {
  std::string name;
  int dim = 0;
  int crit_count = 0;      // cardinality of the constrained critical set
  std::string notes;
};

// circle: H = x^2 + y^2 - 1, F = y + 0.1 x^2 (the pure-height circle is
// degenerate at the top in the extended sense, so the built-in carries a small
// quadratic perturbation).
ProblemSetup make_circle();
// ellipse: H = x^2/4 + y^2 - 1, F = y. Slow tangential rates (+-1/4 at the
// poles), boundary_tol is widened accordingly.
ProblemSetup make_ellipse();
// sphere: H = x^2 + y^2 + z^2 - 1, F = z. Index difference 2 between the poles.
ProblemSetup make_sphere();
// pure-height circle H = x^2 + y^2 - 1, F = y; kept for tests because its
// connecting flow line is known in closed form. Not listed by the CLI.
ProblemSetup make_circle_unperturbed();

std::vector<BuiltinInfo> builtin_problems();
std::optional<ProblemSetup> make_builtin(const std::string& name);

}  // namespace adiaflow
