#pragma once

#include <vector>

#include <Eigen/Core>

#include "adiaflow/errors.hpp"
#include "adiaflow/surface.hpp"

namespace adiaflow {

// Uniform grid on [-T, T] with N cells, N+1 nodes.
struct TimeGrid {
  double T = 12.0;
  int N = 1200;
  double ds = 0.02;

  static TimeGrid make(double T, int N) {
    if (!(T > 0.0)) throw ConfigError("TimeGrid: T must be positive");
    if (N < 16) throw ConfigError("TimeGrid: N must be at least 16");
    TimeGrid g;
    g.T = T;
    g.N = N;
    g.ds = 2.0 * T / N;
    return g;
  }

  double s(int j) const { return -T + j * ds; }
  int nodes() const { return N + 1; }
};

// Discretized connecting trajectory on the surface, plus per-node frames and
// per-cell retracted midpoints (filled by ensure_path_caches; operator assembly
// and flows read them).
struct BasePath {
  TimeGrid grid;
  std::vector<Eigen::VectorXd> q;  // N+1 surface points, |H| <= 1e-10
  Eigen::VectorXd x_minus, x_plus;
  double f_minus = 0.0, f_plus = 0.0;

  std::vector<SurfaceFrame> frames;      // per node
  std::vector<Eigen::VectorXd> q_mid;    // per cell, retracted to the surface
  std::vector<SurfaceFrame> frames_mid;  // per cell
  bool caches_ready = false;
};

// Discretized extended trajectory (u, tau).
struct AmbientPath {
  TimeGrid grid;
  std::vector<Eigen::VectorXd> u;
  std::vector<double> tau;
  Eigen::VectorXd x_minus, x_plus;
  double tau_minus = 0.0, tau_plus = 0.0;
};

void ensure_path_caches(const ProblemSetup& p, BasePath& path);

}  // namespace adiaflow
