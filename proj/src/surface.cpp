#include "adiaflow/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adiaflow/errors.hpp"

namespace adiaflow {

namespace {

constexpr double kOnSurfaceTol = 1e-8;
constexpr double kRetractTarget = 1e-12;

Eigen::VectorXd grad_H_checked(const ProblemSetup& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd g = p.H.grad(x);
  if (g.norm() < p.m_H_floor)
    throw DegenerateGradient("grad H below floor " + std::to_string(p.m_H_floor) +
                             " (|grad H| = " + std::to_string(g.norm()) + ")");
  return g;
}

void check_on_surface(const ProblemSetup& p, const Eigen::VectorXd& q) {
  double h = p.H.eval(q);
  if (std::abs(h) > kOnSurfaceTol)
    throw NotOnSurface("point has |H| = " + std::to_string(std::abs(h)));
}

}  // namespace

double chi_value(const ProblemSetup& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd gH = grad_H_checked(p, x);
  return -p.F.grad(x).dot(gH) / gH.squaredNorm();
}

Eigen::VectorXd chi_ambient_grad(const ProblemSetup& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd gF = p.F.grad(x);
  Eigen::VectorXd gH = grad_H_checked(p, x);
  Eigen::MatrixXd hF = p.F.hess(x);
  Eigen::MatrixXd hH = p.H.hess(x);
  double n = gF.dot(gH);
  double d = gH.squaredNorm();
  Eigen::VectorXd grad_n = hF * gH + hH * gF;
  Eigen::VectorXd grad_d = 2.0 * (hH * gH);
  return -grad_n / d + (n / (d * d)) * grad_d;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> tan_nor_split(const ProblemSetup& p,
                                                          const Eigen::VectorXd& q,
                                                          const Eigen::VectorXd& X) {
  Eigen::VectorXd gH = grad_H_checked(p, q);
  Eigen::VectorXd nor = (X.dot(gH) / gH.squaredNorm()) * gH;
  return {X - nor, nor};
}

Eigen::VectorXd grad_f_sigma(const ProblemSetup& p, const Eigen::VectorXd& q) {
  Eigen::VectorXd gH = grad_H_checked(p, q);
  return p.F.grad(q) + chi_value(p, q) * gH;
}

std::pair<Eigen::VectorXd, double> grad_chi_sigma(const ProblemSetup& p,
                                                  const Eigen::VectorXd& q) {
  Eigen::VectorXd amb = chi_ambient_grad(p, q);
  Eigen::VectorXd tan = tan_nor_split(p, q, amb).first;
  return {tan, tan.norm()};
}

Eigen::VectorXd second_fundamental_form(const ProblemSetup& p, const Eigen::VectorXd& q,
                                        const Eigen::VectorXd& xi,
                                        const Eigen::VectorXd& eta) {
  Eigen::VectorXd gH = grad_H_checked(p, q);
  double gn = gH.norm();
  if (std::abs(xi.dot(gH)) / gn > 1e-8 * std::max(1.0, xi.norm()) ||
      std::abs(eta.dot(gH)) / gn > 1e-8 * std::max(1.0, eta.norm()))
    throw NotTangent("second_fundamental_form: inputs not tangent at q");
  double coeff = -(xi.dot(p.H.hess(q) * eta)) / gH.squaredNorm();
  return coeff * gH;
}

std::pair<Eigen::VectorXd, double> canonical_embed(const ProblemSetup& p,
                                                   const Eigen::VectorXd& q) {
  check_on_surface(p, q);
  return {q, chi_value(p, q)};
}

std::pair<Eigen::VectorXd, double> canonical_embed_derivative(const ProblemSetup& p,
                                                              const Eigen::VectorXd& q,
                                                              const Eigen::VectorXd& xi) {
  check_on_surface(p, q);
  auto [gchi, mu] = grad_chi_sigma(p, q);
  (void)mu;
  return {xi, gchi.dot(xi)};
}

RetractResult retract_to_sigma(const ProblemSetup& p, const Eigen::VectorXd& point,
                               int max_iter) {
  double r = p.H.eval(point);
  if (std::abs(r) > p.kappa)
    throw RetractFailed("retract_to_sigma: |H(p)| = " + std::to_string(std::abs(r)) +
                        " exceeds kappa = " + std::to_string(p.kappa));
  RetractResult out;
  out.r = r;
  Eigen::VectorXd q = point;

  // Flow dq/dt = -grad H/|grad H|^2 decreases H at unit rate; integrate over
  // time r so the remaining defect is pure integration error.
  auto v = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd g = grad_H_checked(p, x);
    return -g / g.squaredNorm();
  };
  int nsub = std::max(4, static_cast<int>(std::ceil(std::abs(r) / 0.05)));
  double dt = r / nsub;
  for (int k = 0; k < nsub; ++k) {
    Eigen::VectorXd k1 = v(q);
    Eigen::VectorXd k2 = v(q + 0.5 * dt * k1);
    Eigen::VectorXd k3 = v(q + 0.5 * dt * k2);
    Eigen::VectorXd k4 = v(q + dt * k3);
    q += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  // Newton polish along grad H.
  int it = 0;
  for (; it < max_iter; ++it) {
    double h = p.H.eval(q);
    if (std::abs(h) <= kRetractTarget) break;
    Eigen::VectorXd g = grad_H_checked(p, q);
    q -= (h / g.squaredNorm()) * g;
  }
  if (std::abs(p.H.eval(q)) > kRetractTarget)
    throw RetractFailed("retract_to_sigma: Newton polish did not reach target");
  if (!p.in_box(q, 0.5))
    throw RetractFailed("retract_to_sigma: left the problem box");
  out.q = q;
  out.iterations = it;
  return out;
}

SurfaceFrame build_frame(const ProblemSetup& p, const Eigen::VectorXd& q) {
  check_on_surface(p, q);
  SurfaceFrame fr;
  fr.q = q;
  fr.grad_H = grad_H_checked(p, q);
  fr.normal_u = fr.grad_H / fr.grad_H.norm();

  const int m = p.dim;
  // Seed the tangent basis with the standard basis vectors least aligned with
  // the normal, then modified Gram-Schmidt against the normal and each other.
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(fr.normal_u[a]) < std::abs(fr.normal_u[b]);
  });
  fr.frame.resize(m, m - 1);
  int col = 0;
  for (int k = 0; k < m && col < m - 1; ++k) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(m, order[k]);
    v -= v.dot(fr.normal_u) * fr.normal_u;
    for (int c = 0; c < col; ++c) v -= v.dot(fr.frame.col(c)) * fr.frame.col(c);
    double n = v.norm();
    if (n < 1e-8) continue;
    fr.frame.col(col++) = v / n;
  }
  if (col != m - 1) throw FrameDegenerate("build_frame: could not complete tangent basis");

  fr.chi = chi_value(p, q);
  auto [gchi, mu] = grad_chi_sigma(p, q);
  fr.grad_chi = gchi;
  fr.mu = mu;
  return fr;
}

std::vector<Eigen::VectorXd> sample_sigma(const ProblemSetup& p, Rng& rng, int count) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  long tries = 0;
  const long max_tries = 1000L * count + 1000;
  while (static_cast<int>(out.size()) < count) {
    if (++tries > max_tries)
      throw NumericalError("sample_sigma: rejection sampling starved; check kappa/box");
    Eigen::VectorXd cand = rng.uniform_vec(p.box_lo, p.box_hi);
    if (std::abs(p.H.eval(cand)) > p.kappa) continue;
    try {
      RetractResult r = retract_to_sigma(p, cand);
      if (p.in_box(r.q)) out.push_back(r.q);
    } catch (const AdiaflowError&) {
      continue;
    }
  }
  return out;
}

double m_H_estimate(const ProblemSetup& p) {
  Rng rng(p.sampler.seed);
  auto pts = sample_sigma(p, rng, p.sampler.count);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : pts) best = std::min(best, p.H.grad(q).norm());
  return best;
}

}  // namespace adiaflow
