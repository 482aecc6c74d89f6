#pragma once

#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "adiaflow/problem.hpp"

namespace adiaflow {

// A constrained critical point of F on the surface, together with its extended
// counterpart (x, tau) with tau = chi(x). index_FH = index_f + 1 whenever the
// extended Hessian is nondegenerate.
struct CriticalPoint {
  Eigen::VectorXd x;
  double f_value = 0.0;
  double tau = 0.0;
  int index_f = 0;
  int index_FH = 0;
  std::vector<double> hess_eigs_f;   // m-1 values, ascending
  std::vector<double> hess_eigs_FH;  // m+1 values, ascending
  bool nondegenerate = true;
};

// Hessian of the restricted objective in the tangent frame at a critical point
// (symmetric within 1e-8; throws NotCritical away from critical points).
Eigen::MatrixXd hessian_f(const ProblemSetup& p, const Eigen::VectorXd& x,
                          double crit_tol = 1e-8);

// Extended Hessian [[Hess F + tau Hess H, grad H], [grad H^T, 0]] at (x, tau).
Eigen::MatrixXd hessian_FH(const ProblemSetup& p, const Eigen::VectorXd& x, double tau);

// Morse data from a symmetric spectrum: number of eigenvalues below
// -degeneracy_tol * spectral_radius, and the nondegeneracy flag.
std::pair<int, bool> morse_index(const Eigen::MatrixXd& sym_matrix,
                                 double degeneracy_tol = 1e-8);

// Newton search from deterministic seeds; deduplicates within 1e-6. Seeds that
// fail to converge are skipped.
std::vector<CriticalPoint> find_critical_points(const ProblemSetup& p,
                                                const std::vector<Eigen::VectorXd>& seeds);
std::vector<CriticalPoint> find_critical_points(const ProblemSetup& p);

// Checks |grad F + tau grad H| at (x, tau = chi(x)) and the index shift; throws
// CorrespondenceFailed on violation.
void verify_crit_correspondence(const ProblemSetup& p, const CriticalPoint& c,
                                double grad_tol = 1e-8);

nlohmann::json critical_point_to_json(const CriticalPoint& c);

// Deterministic seed grids for the search (angular for dim 2, lat/long for dim 3).
std::vector<Eigen::VectorXd> default_seeds(const ProblemSetup& p);

}  // namespace adiaflow
