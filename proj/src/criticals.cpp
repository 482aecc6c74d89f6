#include "adiaflow/criticals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "adiaflow/errors.hpp"
#include "adiaflow/surface.hpp"

namespace adiaflow {

namespace {

// Tangent-frame Hessian of the restricted objective; valid as a Newton model
// anywhere on the surface, not just at critical points.
Eigen::MatrixXd frame_hessian(const ProblemSetup& p, const SurfaceFrame& fr) {
  Eigen::MatrixXd amb = p.F.hess(fr.q) + fr.chi * p.H.hess(fr.q);
  Eigen::MatrixXd a = fr.frame.transpose() * amb * fr.frame;
  return 0.5 * (a + a.transpose());
}

std::vector<double> eig_ascending(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  return v;
}

}  // namespace

Eigen::MatrixXd hessian_f(const ProblemSetup& p, const Eigen::VectorXd& x, double crit_tol) {
  double gnorm = grad_f_sigma(p, x).norm();
  if (gnorm > crit_tol)
    throw NotCritical("hessian_f: |grad| = " + std::to_string(gnorm) + " at query point");
  SurfaceFrame fr = build_frame(p, x);
  Eigen::MatrixXd amb = p.F.hess(x) + fr.chi * p.H.hess(x);
  Eigen::MatrixXd a = fr.frame.transpose() * amb * fr.frame;
  double asym = (a - a.transpose()).lpNorm<Eigen::Infinity>();
  if (asym > 1e-8 * std::max(1.0, a.lpNorm<Eigen::Infinity>()))
    throw NumericalError("hessian_f: unexpected asymmetry " + std::to_string(asym));
  return 0.5 * (a + a.transpose());
}

Eigen::MatrixXd hessian_FH(const ProblemSetup& p, const Eigen::VectorXd& x, double tau) {
  const int m = p.dim;
  Eigen::MatrixXd h(m + 1, m + 1);
  h.topLeftCorner(m, m) = p.F.hess(x) + tau * p.H.hess(x);
  Eigen::VectorXd g = p.H.grad(x);
  h.topRightCorner(m, 1) = g;
  h.bottomLeftCorner(1, m) = g.transpose();
  h(m, m) = 0.0;
  return h;
}

std::pair<int, bool> morse_index(const Eigen::MatrixXd& sym_matrix, double degeneracy_tol) {
  auto eigs = eig_ascending(sym_matrix);
  double rad = 0.0;
  for (double e : eigs) rad = std::max(rad, std::abs(e));
  double cut = degeneracy_tol * std::max(rad, 1e-300);
  int idx = 0;
  bool nondeg = rad > 0.0;
  for (double e : eigs) {
    if (e < -cut) ++idx;
    if (std::abs(e) <= cut) nondeg = false;
  }
  return {idx, nondeg};
}

std::vector<Eigen::VectorXd> default_seeds(const ProblemSetup& p) {
  std::vector<Eigen::VectorXd> dirs;
  const int m = p.dim;
  if (m == 2) {
    const int n = 12;
    for (int k = 0; k < n; ++k) {
      double th = 2.0 * M_PI * k / n;
      Eigen::VectorXd d(2);
      d << std::cos(th), std::sin(th);
      dirs.push_back(d);
    }
  } else if (m == 3) {
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c) {
          if (a == 0 && b == 0 && c == 0) continue;
          Eigen::VectorXd d(3);
          d << a, b, c;
          dirs.push_back(d.normalized());
        }
  } else {
    for (int i = 0; i < m; ++i) {
      dirs.push_back(Eigen::VectorXd::Unit(m, i));
      dirs.push_back(-Eigen::VectorXd::Unit(m, i));
    }
  }

  // Walk each ray from the box center outward and keep the sample closest to
  // the surface; seeds must start inside the retraction basin |H| <= kappa.
  Eigen::VectorXd center = 0.5 * (p.box_lo + p.box_hi);
  Eigen::VectorXd half = 0.5 * (p.box_hi - p.box_lo);
  std::vector<Eigen::VectorXd> seeds;
  for (const auto& d : dirs) {
    Eigen::VectorXd scaled = d.cwiseProduct(half);
    Eigen::VectorXd best;
    double best_h = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= 64; ++t) {
      Eigen::VectorXd cand = center + (static_cast<double>(t) / 64.0) * scaled;
      double h = std::abs(p.H.eval(cand));
      if (h < best_h) {
        best_h = h;
        best = cand;
      }
    }
    if (best_h <= p.kappa) seeds.push_back(best);
  }
  return seeds;
}

std::vector<CriticalPoint> find_critical_points(const ProblemSetup& p) {
  return find_critical_points(p, default_seeds(p));
}

std::vector<CriticalPoint> find_critical_points(const ProblemSetup& p,
                                                const std::vector<Eigen::VectorXd>& seeds) {
  std::vector<CriticalPoint> found;
  for (const auto& seed : seeds) {
    Eigen::VectorXd x;
    try {
      x = retract_to_sigma(p, seed).q;
    } catch (const AdiaflowError&) {
      continue;
    }
    bool converged = false;
    for (int it = 0; it < 60; ++it) {
      SurfaceFrame fr = build_frame(p, x);
      Eigen::VectorXd g_amb = p.F.grad(x) + fr.chi * p.H.grad(x);
      Eigen::VectorXd g = fr.frame.transpose() * g_amb;
      if (g.norm() <= 1e-11) {
        converged = true;
        break;
      }
      Eigen::MatrixXd a = frame_hessian(p, fr);
      Eigen::VectorXd delta;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      if (lu.isInvertible()) {
        delta = lu.solve(-g);
      } else {
        delta = -g;  // gradient fallback near degenerate Hessians
      }
      // Damped update: keep steps inside the retraction basin and insist on
      // gradient decrease.
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 10; ++ls) {
        Eigen::VectorXd cand = x + step * (fr.frame * delta);
        try {
          Eigen::VectorXd xc = retract_to_sigma(p, cand).q;
          if (grad_f_sigma(p, xc).norm() < g_amb.norm() || step < 0.2) {
            x = xc;
            moved = true;
            break;
          }
        } catch (const AdiaflowError&) {
          // fall through to smaller step
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (!converged || grad_f_sigma(p, x).norm() > 1e-10) {
      std::fprintf(stderr, "[criticals] seed did not converge for %s, skipping\n",
                   p.name.c_str());
      continue;
    }
    bool dup = false;
    for (const auto& c : found)
      if ((c.x - x).norm() < 1e-6) {
        dup = true;
        break;
      }
    if (dup) continue;

    CriticalPoint c;
    c.x = x;
    c.f_value = p.F.eval(x);
    c.tau = chi_value(p, x);
    Eigen::MatrixXd hf = hessian_f(p, x, 1e-8);
    c.hess_eigs_f = eig_ascending(hf);
    auto [idx_f, nd_f] = morse_index(hf);
    c.index_f = idx_f;
    Eigen::MatrixXd hFH = hessian_FH(p, x, c.tau);
    c.hess_eigs_FH = eig_ascending(hFH);
    auto [idx_FH, nd_FH] = morse_index(hFH);
    c.index_FH = idx_FH;
    c.nondegenerate = nd_f && nd_FH;
    found.push_back(std::move(c));
  }

  std::stable_sort(found.begin(), found.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    if (a.f_value != b.f_value) return a.f_value > b.f_value;
    for (Eigen::Index i = 0; i < a.x.size(); ++i)
      if (a.x[i] != b.x[i]) return a.x[i] < b.x[i];
    return false;
  });
  return found;
}

void verify_crit_correspondence(const ProblemSetup& p, const CriticalPoint& c,
                                double grad_tol) {
  Eigen::VectorXd g = p.F.grad(c.x) + c.tau * p.H.grad(c.x);
  if (g.norm() > grad_tol)
    throw CorrespondenceFailed("extended gradient |dF + tau dH| = " +
                               std::to_string(g.norm()));
  double tau_ref = chi_value(p, c.x);
  if (std::abs(tau_ref - c.tau) > 1e-8)
    throw CorrespondenceFailed("tau does not match the multiplier field value");
  if (c.nondegenerate && c.index_FH != c.index_f + 1)
    throw CorrespondenceFailed("extended index " + std::to_string(c.index_FH) +
                               " != restricted index + 1 = " + std::to_string(c.index_f + 1));
}

nlohmann::json critical_point_to_json(const CriticalPoint& c) {
  nlohmann::json j;
  j["x"] = std::vector<double>(c.x.data(), c.x.data() + c.x.size());
  j["tau"] = c.tau;
  j["f_value"] = c.f_value;
  j["index_f"] = c.index_f;
  j["index_FH"] = c.index_FH;
  j["hess_eigs_f"] = c.hess_eigs_f;
  j["hess_eigs_FH"] = c.hess_eigs_FH;
  j["nondegenerate"] = c.nondegenerate;
  return j;
}

}  // namespace adiaflow
