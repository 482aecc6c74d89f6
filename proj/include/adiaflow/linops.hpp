#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "adiaflow/grid.hpp"
#include "adiaflow/problem.hpp"
#include "adiaflow/tangent_field.hpp"

namespace adiaflow {

enum class OperatorKind { base, extended };

// Cell-collocated first-order operator along a path, with asymptotic end rows.
//
// base:     domain = frame coordinates, (N+1)(m-1); codomain = N(m-1) cell rows
//           followed by end rows (positive end-Hessian modes at the left end,
//           negative ones at the right end).
// extended: domain = raw [X_j; ell_j], (N+1)(m+1); codomain = N(m+1) cell rows
//           plus end rows from the symmetrized extended end Hessians.
//
// w_dom and w_cod are the diagonal weights of the domain and codomain inner
// products (trapezoid nodes, resp. ds per cell row and 1 per end row; the
// multiplier slots carry the extra eps^2). apply_adjoint is the exact adjoint
// with respect to these weights.
struct LinearOperator {
  OperatorKind kind = OperatorKind::base;
  double eps = 0.0;
  TimeGrid grid;
  int dim = 0;
  int n_end_left = 0, n_end_right = 0;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd w_dom, w_cod;

  int rows() const { return static_cast<int>(A.rows()); }
  int cols() const { return static_cast<int>(A.cols()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return A * x; }
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const {
    return w_dom.cwiseInverse().asDiagonal() * (A.transpose() * (w_cod.asDiagonal() * y));
  }
  double dom_norm(const Eigen::VectorXd& x) const {
    return std::sqrt(x.dot(w_dom.asDiagonal() * x));
  }
  double cod_norm(const Eigen::VectorXd& y) const {
    return std::sqrt(y.dot(w_cod.asDiagonal() * y));
  }
  // codomain norm over the cell rows only
  double cod_norm_cells(const Eigen::VectorXd& y) const;
};

LinearOperator assemble_base_operator(const ProblemSetup& p, BasePath& path);
LinearOperator assemble_extended_operator(const ProblemSetup& p, BasePath& path, double eps);

// Node-sampled continuum formulas (central differences inside, one-sided at
// the ends); used to cross-check the assembled matrices and to evaluate the
// analytic estimates on smooth fields. The base pair acts on tangent fields
// and returns tangent fields; set ambient_form to evaluate the base adjoint
// through the ambient derivative plus curvature-correction representation
// instead of projecting.
TangentField apply_base_continuum(const ProblemSetup& p, BasePath& path,
                                  const TangentField& xi, bool adjoint,
                                  bool ambient_form = false);
TangentField apply_extended_continuum(const ProblemSetup& p, BasePath& path,
                                      const TangentField& Z, double eps, bool adjoint);

// Fiberwise projection pi_eps(X, ell) = B^{-1}(tan X + eps^beta ell grad_chi)
// with B = 1 + eps^alpha mu^2 P, P the rank-one projector onto grad_chi.
// Output is a tangent field (ell = 0).
TangentField project_pi_eps(const ProblemSetup& p, BasePath& path, const TangentField& Z,
                            double eps, double alpha = 2.0, double beta = 2.0);

// Graph embedding of a tangent field: X = xi, ell = <grad_chi, xi>.
TangentField embed_graph(const ProblemSetup& p, BasePath& path, const TangentField& xi);

// Closed-form operator norms of the fiber maps at one frame, paired with the
// numerically computed ones for cross-checking.
struct FiberNorms {
  double binv_closed = 0.0, binv_numeric = 0.0;            // ||B^{-1}|| = 1
  double binv_p_closed = 0.0, binv_p_numeric = 0.0;        // 1/(1 + eps^a mu^2)
  double mixed_half = 0.0;       // eps^{a/2} mu/(1 + eps^a mu^2), always <= 1/2
  double saturation = 0.0;       // eps^a mu^2/(1 + eps^a mu^2), always < 1
};
FiberNorms fiber_norms(const SurfaceFrame& fr, double eps, double alpha);

struct FredholmReport {
  int dim_ker = 0;
  int dim_coker = 0;
  int index = 0;
  double sigma_max = 0.0;
  double smallest_kept = 0.0;   // singular values counted as nonzero
  double largest_dropped = 0.0; // singular values counted as zero
  Eigen::VectorXd kernel_vector;  // raw domain coordinates, empty if dim_ker = 0
};

// Dense SVD of the weight-normalized matrix; rank_tol is relative to the top
// singular value. Throws IllConditioned when the spectral gap around the
// threshold is thinner than a factor 10.
FredholmReport fredholm_index_estimate(const LinearOperator& op, double rank_tol = 1e-7);

}  // namespace adiaflow
