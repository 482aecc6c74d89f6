#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adiaflow/criticals.hpp"
#include "adiaflow/grid.hpp"
#include "adiaflow/problem.hpp"

namespace adiaflow {

// Negative-gradient flow of f on the surface, shot from the unstable manifold
// of `from` and resampled onto `grid` so that f at the middle node equals the
// mean of the endpoint values. Tails outside the traversal window are padded
// with the critical points. unstable_branch flips the shooting direction.
BasePath integrate_base_flow(const ProblemSetup& p, const CriticalPoint& from,
                             const CriticalPoint& to, const TimeGrid& grid,
                             double shoot_delta = 1e-5, int unstable_branch = +1);

enum class EpsFlowMode {
  collocation,        // global implicit midpoint, boundary rows at both ends
  implicit_stepping,  // sequential implicit midpoint (diagnostic; stiff)
  rk4,                // sequential explicit RK4 (diagnostic; stiff)
};

struct EpsFlowReport {
  AmbientPath path;
  int newton_iterations = 0;
  double final_residual = 0.0;
};

// Extended negative-gradient flow at deformation eps connecting the lifted
// critical pairs. Default mode solves the whole boundary-value problem at
// once; the sequential modes throw StiffnessFailure when the transverse
// instability overwhelms them.
EpsFlowReport integrate_eps_flow(const ProblemSetup& p, const CriticalPoint& from,
                                 const CriticalPoint& to, double eps,
                                 const TimeGrid& grid,
                                 EpsFlowMode mode = EpsFlowMode::collocation,
                                 const BasePath* guess = nullptr);

struct EnergyBreakdown {
  double value = 0.0;       // quadrature + both tails
  double quadrature = 0.0;  // trapezoid over [-T, T]
  double tail_left = 0.0;   // drop from f(x-) still ahead of the left endpoint
  double tail_right = 0.0;  // drop to f(x+) remaining past the right endpoint
};

// Lift of a surface path through the canonical graph: u = q, tau = chi(q).
AmbientPath embed_base_path(const ProblemSetup& p, const BasePath& path);

EnergyBreakdown base_energy(const ProblemSetup& p, const BasePath& path);
EnergyBreakdown eps_energy(const ProblemSetup& p, const AmbientPath& path, double eps);

// |E - (f(x-) - f(x+))|.
double energy_identity_residual(const EnergyBreakdown& e, double f_minus, double f_plus);

// Node-sampled section values along a path (central differences inside,
// one-sided at the ends). For the base flow only `first` is filled; for the
// extended flow `second` holds the multiplier equation values.
struct SectionSample {
  std::vector<Eigen::VectorXd> first;
  std::vector<double> second;
  double max_first_norm = 0.0;
  double max_second_abs = 0.0;
};

SectionSample base_section_values(const ProblemSetup& p, const BasePath& path);
SectionSample eps_section_values(const ProblemSetup& p, const AmbientPath& path, double eps);

void write_base_path_csv(const ProblemSetup& p, const BasePath& path, const std::string& filename);
void write_ambient_path_csv(const ProblemSetup& p, const AmbientPath& path, double eps,
                            const std::string& filename);

}  // namespace adiaflow
