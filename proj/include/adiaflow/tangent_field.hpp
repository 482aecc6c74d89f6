#pragma once

#include <vector>

#include <Eigen/Core>

#include "adiaflow/grid.hpp"
#include "adiaflow/problem.hpp"
#include "adiaflow/rng.hpp"

namespace adiaflow {

// A discretized section of the extended bundle along a path: an ambient vector
// X_j plus a multiplier component ell_j at every node.
struct TangentField {
  TimeGrid grid;
  std::vector<Eigen::VectorXd> X;
  std::vector<double> ell;
};

TangentField zero_field(const TimeGrid& grid, int dim);

// Trapezoid node weights: ds inside, ds/2 at the ends.
Eigen::VectorXd node_weights(const TimeGrid& grid);

// Weighted section norms. The derivative part of the (1,2) norm uses forward
// cell differences.
double norm_02_eps(const TangentField& Z, double eps);
double norm_0inf_eps(const TangentField& Z, double eps);
double norm_12_eps(const TangentField& Z, double eps);

// Band-limited random field vanishing at both ends: sums of sin(k pi (s+T)/2T)
// modes with 1/k^2 coefficient decay.
TangentField random_smooth_field(const TimeGrid& grid, int dim, Rng& rng,
                                 double amplitude = 1.0, int modes = 6);

// Same, with X projected fiberwise onto the tangent spaces along the path and
// ell = 0.
TangentField random_tangent_field(const ProblemSetup& p, BasePath& path, Rng& rng,
                                  double amplitude = 1.0, int modes = 6);

// Stacked raw coordinates, [X_j; ell_j] per node.
Eigen::VectorXd flatten_extended(const TangentField& Z);
TangentField unflatten_extended(const TimeGrid& grid, int dim, const Eigen::VectorXd& v);

// Frame coordinates of a tangent field (ell ignored). Throws NotTangent when a
// node value has a relative normal component above tangency_tol.
Eigen::VectorXd frame_coordinates(const ProblemSetup& p, BasePath& path,
                                  const TangentField& Z, double tangency_tol = 1e-8);
TangentField from_frame_coordinates(const ProblemSetup& p, BasePath& path,
                                    const Eigen::VectorXd& coords);

}  // namespace adiaflow
