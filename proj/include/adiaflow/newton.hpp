#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <nlohmann/json.hpp>

#include "adiaflow/linops.hpp"
#include "adiaflow/tangent_field.hpp"

namespace adiaflow {

// Minimum-norm right inverse r -> W_dom^{-1} A^T (A W_dom^{-1} A^T)^{-1} r.
// The Gram factorization is computed once and reused; a factorization that only
// succeeds with diagonal jitter marks the operator surjectivity as suspect.
class RightInverse {
 public:
  explicit RightInverse(const LinearOperator& op);
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
  bool jitter_used() const { return jitter_; }

 private:
  const LinearOperator* op_;
  Eigen::VectorXd winv_;
  Eigen::VectorXd scale_;  // symmetric Jacobi scaling of the Gram matrix
  Eigen::SparseMatrix<double> gram_scaled_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
  bool jitter_ = false;
};

// Node values of the deformed section at (u, tau) = (q + X, chi(q) + ell):
// first component the vector equation, second the multiplier equation.
TangentField trivialized_section(const ProblemSetup& p, BasePath& path, double eps,
                                 const TangentField& Z);

// Cell-collocated residual in the row layout of Deps. Field arguments are
// taken at the cached surface midpoints shifted by the node-averaged
// correction, so the derivative at Z = 0 is exactly Deps.
Eigen::VectorXd newton_residual(const ProblemSetup& p, BasePath& path,
                                const LinearOperator& Deps, double eps, const TangentField& Z);

// Analytic directional derivative of newton_residual at Z in direction zeta.
Eigen::VectorXd apply_section_jacobian(const ProblemSetup& p, BasePath& path,
                                       const LinearOperator& Deps, double eps,
                                       const TangentField& Z, const TangentField& zeta);

// Sparse matrix of the derivative at Z (same layout and weights as Deps; end
// rows copied unchanged). At Z = 0 this reproduces Deps.
LinearOperator assemble_section_jacobian(const ProblemSetup& p, BasePath& path,
                                         const LinearOperator& Deps, double eps,
                                         const TangentField& Z);

struct NewtonIterationStat {
  int nu = 0;
  double norm_zeta_12eps = 0.0;
  double norm_residual_02eps = 0.0;
  double contraction_factor = 0.0;
};

struct NewtonReport {
  double eps = 0.0;
  std::vector<NewtonIterationStat> iterations;
  bool converged = false;
  TangentField Z_final;
  double norm_Z_12eps = 0.0;
  double norm_X_inf = 0.0;
  double norm_ell_inf = 0.0;
  double residual_final = 0.0;
  bool surjective_suspect = false;
};

struct NewtonOptions {
  int max_iter = 50;
  double newton_tol = 1e-10;
  bool full_newton = false;             // re-linearize each step instead of freezing
  const TangentField* Z_start = nullptr;
};

NewtonReport newton_iterate(const ProblemSetup& p, BasePath& path, double eps,
                            const NewtonOptions& opts = {});

// Deformed trajectory (q + X, chi(q) + ell) from a converged Newton run.
AmbientPath T_eps(const ProblemSetup& p, BasePath& path, double eps,
                  NewtonReport* out_report = nullptr);

struct ScalingRow {
  double eps = 0.0;
  double norm_Z_12eps = 0.0;
  double norm_X_inf = 0.0;
  double norm_ell_inf = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

struct ScalingStudy {
  std::vector<ScalingRow> rows;
  double slope_Z_12eps = 0.0;
  double slope_X_inf = 0.0;
  double slope_ell_inf = 0.0;
  double max_ratio_X = 0.0;    // norm_X_inf / eps^{3/2}
  double max_ratio_ell = 0.0;  // norm_ell_inf / eps^{1/2}
  bool degenerate = false;     // all corrections at roundoff, slopes meaningless
};

ScalingStudy scaling_study(const ProblemSetup& p, BasePath& path,
                           const std::vector<double>& eps_list);
void write_scaling_csv(const ScalingStudy& study, const std::string& filename);

struct UniquenessReport {
  double eps = 0.0;
  double delta0 = 0.0;
  int n_perturbations = 0;
  double max_distance_12eps = 0.0;
  bool all_returned = false;
};

UniquenessReport uniqueness_probe(const ProblemSetup& p, BasePath& path, double eps,
                                  int n_perturbations, double delta0, Rng& rng);

struct QuadraticReport {
  std::vector<double> t_ladder;
  double remainder_slope = 0.0;   // worst-case over tested fields
  double derivative_slope = 0.0;
  double max_remainder = 0.0;
  int fields_tested = 0;
};

QuadraticReport quadratic_remainder_check(const ProblemSetup& p, BasePath& path, double eps,
                                          int n_fields, Rng& rng);

nlohmann::json newton_report_to_json(const NewtonReport& rep);

}  // namespace adiaflow
