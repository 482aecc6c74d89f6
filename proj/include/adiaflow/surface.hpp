#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "adiaflow/problem.hpp"
#include "adiaflow/rng.hpp"

namespace adiaflow {

// Pointwise geometric data of the constraint surface at q: unit normal,
// orthonormal tangent frame, the multiplier field chi and its tangential
// gradient. Invariants: |normal_u| = 1, frame columns orthonormal and
// orthogonal to grad_H, grad_chi orthogonal to grad_H.
struct SurfaceFrame {
  Eigen::VectorXd q;
  Eigen::VectorXd grad_H;
  Eigen::VectorXd normal_u;   // grad_H / |grad_H|
  Eigen::MatrixXd frame;      // m x (m-1), orthonormal tangent basis
  double chi = 0.0;
  Eigen::VectorXd grad_chi;   // tangential gradient of chi on the surface
  double mu = 0.0;            // |grad_chi|
};

struct RetractResult {
  Eigen::VectorXd q;  // point on the surface
  double r = 0.0;     // level H(p) the input started from
  int iterations = 0;
};

// Multiplier field chi = -<grad F, grad H>/|grad H|^2, evaluated off-surface via
// the same formula. Throws DegenerateGradient below m_H_floor.
double chi_value(const ProblemSetup& p, const Eigen::VectorXd& x);

// Analytic ambient gradient of chi (quotient rule through the Hessians of F, H).
Eigen::VectorXd chi_ambient_grad(const ProblemSetup& p, const Eigen::VectorXd& x);

// X = tan + nor with nor = (<X, grad H>/|grad H|^2) grad H; the pair sums back
// to X exactly up to roundoff.
std::pair<Eigen::VectorXd, Eigen::VectorXd> tan_nor_split(const ProblemSetup& p,
                                                          const Eigen::VectorXd& q,
                                                          const Eigen::VectorXd& X);

// Gradient of the restricted objective: grad F + chi grad H. Tangent to the
// surface up to roundoff.
Eigen::VectorXd grad_f_sigma(const ProblemSetup& p, const Eigen::VectorXd& q);

// Tangential gradient of chi and its norm mu at q.
std::pair<Eigen::VectorXd, double> grad_chi_sigma(const ProblemSetup& p,
                                                  const Eigen::VectorXd& q);

// Second fundamental form of the level set in the normal direction:
// II(xi, eta) = -(xi^T Hess H eta / |grad H|^2) grad H.
// Requires xi, eta tangent at q within 1e-8 (NotTangent otherwise); symmetric.
Eigen::VectorXd second_fundamental_form(const ProblemSetup& p, const Eigen::VectorXd& q,
                                        const Eigen::VectorXd& xi,
                                        const Eigen::VectorXd& eta);

// (q, chi(q)) on the critical graph, and the derivative of the embedding,
// xi -> (xi, <grad_chi, xi>). Throws NotOnSurface when |H(q)| > 1e-8.
std::pair<Eigen::VectorXd, double> canonical_embed(const ProblemSetup& p,
                                                   const Eigen::VectorXd& q);
std::pair<Eigen::VectorXd, double> canonical_embed_derivative(const ProblemSetup& p,
                                                              const Eigen::VectorXd& q,
                                                              const Eigen::VectorXd& xi);

// Normal-form retraction: flow p by -grad H/|grad H|^2 over time H(p) (RK4
// substeps), then polish along grad H until |H| <= 1e-12. Accepts |H(p)| <= kappa.
RetractResult retract_to_sigma(const ProblemSetup& p, const Eigen::VectorXd& point,
                               int max_iter = 50);

// Orthonormal tangent frame + chi data at q; q must satisfy |H(q)| <= 1e-8.
SurfaceFrame build_frame(const ProblemSetup& p, const Eigen::VectorXd& q);

// Seeded rejection sampling of surface points inside the box.
std::vector<Eigen::VectorXd> sample_sigma(const ProblemSetup& p, Rng& rng, int count);

// min |grad H| over a surface sample.
double m_H_estimate(const ProblemSetup& p);

}  // namespace adiaflow
