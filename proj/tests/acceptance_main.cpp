// Acceptance harness: one line per criterion, nonzero exit if any fails.
// Each check pins the quantitative behavior the library is sold on; the
// stated wall-clock caps are part of the contract and generous on purpose.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adiaflow/criticals.hpp"
#include "adiaflow/errors.hpp"
#include "adiaflow/flows.hpp"
#include "adiaflow/linops.hpp"
#include "adiaflow/newton.hpp"
#include "adiaflow/probes.hpp"
#include "adiaflow/problem.hpp"
#include "adiaflow/rng.hpp"
#include "adiaflow/surface.hpp"
#include "adiaflow/tangent_field.hpp"

using namespace adiaflow;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Check {
  bool ok = true;
  std::ostringstream msg;
  void fail(const std::string& why) {
    ok = false;
    if (msg.tellp() > 0) msg << "; ";
    msg << why;
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

BasePath connect(const ProblemSetup& p, double T, int N) {
  auto crits = find_critical_points(p);
  if (crits.size() != 2) throw NoConnection(p.name + ": expected exactly two critical points");
  BasePath path = integrate_base_flow(p, crits.front(), crits.back(), TimeGrid::make(T, N));
  ensure_path_caches(p, path);
  return path;
}

ProblemSetup make_quartic_circle() {
  ProblemSetup p = make_circle();
  p.name = "quartic-circle";
  p.H = ScalarField::polynomial(2, {{{2, 0}, 1.0}, {{0, 2}, 1.0}, {{0, 0}, -1.0}, {{4, 0}, 0.1}});
  p.boundary_tol = 5e-4;
  return p;
}

// weighted cosine between a kernel X-part and the discrete flow direction
double kernel_flow_correlation(const BasePath& path, const std::vector<Eigen::VectorXd>& kx) {
  const Eigen::VectorXd w = node_weights(path.grid);
  double num = 0.0, na = 0.0, nb = 0.0;
  for (int j = 0; j <= path.grid.N; ++j) {
    Eigen::VectorXd t = (j == 0)             ? (path.q[1] - path.q[0]) / path.grid.ds
                        : (j == path.grid.N) ? (path.q[j] - path.q[j - 1]) / path.grid.ds
                                             : (path.q[j + 1] - path.q[j - 1]) / (2.0 * path.grid.ds);
    num += w(j) * kx[j].dot(t);
    na += w(j) * kx[j].squaredNorm();
    nb += w(j) * t.squaredNorm();
  }
  return std::abs(num) / std::sqrt(na * nb);
}

double base_kernel_correlation(const ProblemSetup& p, const BasePath& path,
                               const Eigen::VectorXd& kv) {
  const int k = p.dim - 1;
  std::vector<Eigen::VectorXd> kx(path.grid.N + 1);
  for (int j = 0; j <= path.grid.N; ++j) kx[j] = path.frames[j].frame * kv.segment(j * k, k);
  return kernel_flow_correlation(path, kx);
}

double shifted_distance(const AmbientPath& a, const AmbientPath& b, double sigma) {
  const TimeGrid& g = a.grid;
  double d = 0.0;
  for (int j = 0; j <= g.N; ++j) {
    const double s = g.s(j);
    if (std::abs(s) > g.T - 1.0) continue;
    const double x = (s + sigma + g.T) / g.ds;
    const int i = std::clamp(static_cast<int>(std::floor(x)), 0, g.N - 1);
    const double w = x - i;
    Eigen::VectorXd ub = (1.0 - w) * b.u[i] + w * b.u[i + 1];
    const double tb = (1.0 - w) * b.tau[i] + w * b.tau[i + 1];
    d = std::max({d, (a.u[j] - ub).norm(), std::abs(a.tau[j] - tb)});
  }
  return d;
}

double aligned_distance(const AmbientPath& a, const AmbientPath& b) {
  double lo = -0.3, hi = 0.3;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = shifted_distance(a, b, x1), f2 = shifted_distance(a, b, x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = shifted_distance(a, b, x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = shifted_distance(a, b, x2);
    }
  }
  return std::min(f1, f2);
}

// ---------------------------------------------------------------- criteria

Outcome c1_index_shift() {
  Check c;
  int total = 0;
  for (const char* name : {"circle", "ellipse", "sphere"}) {
    auto p = *make_builtin(name);
    for (const auto& cp : find_critical_points(p)) {
      ++total;
      if (!cp.nondegenerate) c.fail(std::string(name) + ": degenerate point");
      if (cp.index_FH != cp.index_f + 1)
        c.fail(std::string(name) + ": ind_FH=" + std::to_string(cp.index_FH) +
               " vs ind_f=" + std::to_string(cp.index_f));
    }
  }
  if (c.ok) c.msg << total << "/" << total << " points, ind_FH - ind_f = 1 everywhere";
  return {c.ok, c.msg.str()};
}

Outcome c2_correspondence() {
  Check c;
  double worst = 0.0;
  for (const char* name : {"circle", "ellipse", "sphere"}) {
    auto p = *make_builtin(name);
    for (const auto& cp : find_critical_points(p)) {
      const Eigen::VectorXd r = p.F.grad(cp.x) + cp.tau * p.H.grad(cp.x);
      worst = std::max(worst, r.norm());
      try {
        verify_crit_correspondence(p, cp, 1e-8);
      } catch (const std::exception& e) {
        c.fail(std::string(name) + ": " + e.what());
      }
    }
  }
  if (worst > 1e-8) c.fail("max |grad F + tau grad H| = " + fmt(worst));
  if (c.ok) c.msg << "max |grad F + tau grad H| = " << fmt(worst);
  return {c.ok, c.msg.str()};
}

Outcome c3_energies() {
  Check c;
  const std::vector<double> sweep = {0.5, 0.2, 0.1, 0.05};
  double worst_base = 0.0, worst_eps = 0.0;
  for (const char* name : {"circle", "ellipse"}) {
    auto p = *make_builtin(name);
    auto crits = find_critical_points(p);
    BasePath path = connect(p, 12.0, 1200);
    const double dev0 = energy_identity_residual(base_energy(p, path), path.f_minus, path.f_plus);
    worst_base = std::max(worst_base, dev0);
    if (dev0 > 1e-3) c.fail(std::string(name) + ": base energy deviation " + fmt(dev0));
    for (double eps : sweep) {
      auto rep = integrate_eps_flow(p, crits.front(), crits.back(), eps, path.grid,
                                    EpsFlowMode::collocation, &path);
      const double dev =
          energy_identity_residual(eps_energy(p, rep.path, eps), path.f_minus, path.f_plus);
      worst_eps = std::max(worst_eps, dev);
      if (dev > 1e-2)
        c.fail(std::string(name) + " eps=" + fmt(eps) + ": energy deviation " + fmt(dev));
    }
  }
  // second-order quadrature: deviation must shrink by >= 3.5x under refinement
  auto p = make_circle();
  BasePath p320 = connect(p, 12.0, 320);
  BasePath p640 = connect(p, 12.0, 640);
  const double d320 = energy_identity_residual(base_energy(p, p320), p320.f_minus, p320.f_plus);
  const double d640 = energy_identity_residual(base_energy(p, p640), p640.f_minus, p640.f_plus);
  const double ratio = d320 / std::max(d640, 1e-300);
  if (ratio < 3.5) c.fail("refinement ratio " + fmt(ratio));
  if (c.ok)
    c.msg << "base dev " << fmt(worst_base) << ", eps dev " << fmt(worst_eps)
          << ", refinement ratio " << fmt(ratio);
  return {c.ok, c.msg.str()};
}

Outcome c4_adjoints_projection() {
  Check c;
  auto p = make_circle();
  BasePath path = connect(p, 12.0, 1200);
  Rng rng(2024);
  const std::vector<double> eps_list = {1.0, 0.3, 0.1, 0.03, 0.01};
  const int per_eps = 200;
  double worst_adj = 0.0, worst_sym = 0.0, worst_pi = 0.0, worst_embed = 0.0;
  const Eigen::VectorXd w = node_weights(path.grid);

  LinearOperator D0 = assemble_base_operator(p, path);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x = rng.normal_vec(D0.cols()), y = rng.normal_vec(D0.rows());
    const double lhs = D0.apply(x).dot(D0.w_cod.asDiagonal() * y);
    const double rhs = x.dot(D0.w_dom.asDiagonal() * D0.apply_adjoint(y));
    worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1.0));
  }
  int fields = 0;
  for (double eps : eps_list) {
    LinearOperator De = assemble_extended_operator(p, path, eps);
    for (int t = 0; t < per_eps; ++t) {
      ++fields;
      Eigen::VectorXd x = rng.normal_vec(De.cols()), y = rng.normal_vec(De.rows());
      const double lhs = De.apply(x).dot(De.w_cod.asDiagonal() * y);
      const double rhs = x.dot(De.w_dom.asDiagonal() * De.apply_adjoint(y));
      worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1.0));

      // multiplier-block symmetry of the eps-weighted pairing
      TangentField Za = random_smooth_field(path.grid, p.dim, rng);
      TangentField Zb = random_smooth_field(path.grid, p.dim, rng);
      double a = 0.0, b = 0.0;
      for (int j = 0; j <= path.grid.N; ++j) {
        const Eigen::VectorXd& g = path.frames[j].grad_H;
        a += w(j) * (Za.X[j].dot(Zb.ell[j] * g) + Za.ell[j] * g.dot(Zb.X[j]));
        b += w(j) * ((Za.ell[j] * g).dot(Zb.X[j]) + g.dot(Za.X[j]) * Zb.ell[j]);
      }
      worst_sym = std::max(worst_sym, std::abs(a - b) / (std::abs(a) + std::abs(b) + 1.0));

      // graph projection: left inverse of the embedding, and the 2-bound
      TangentField xi = random_tangent_field(p, path, rng);
      TangentField back = project_pi_eps(p, path, embed_graph(p, path, xi), eps);
      double dev = 0.0, scale = 0.0;
      for (int j = 0; j <= path.grid.N; ++j) {
        dev = std::max(dev, (back.X[j] - xi.X[j]).norm());
        scale = std::max(scale, xi.X[j].norm());
      }
      worst_pi = std::max(worst_pi, dev / (scale + 1.0));

      TangentField Z = random_smooth_field(path.grid, p.dim, rng);
      TangentField proj = project_pi_eps(p, path, Z, eps);
      const double nz = norm_02_eps(Z, eps);
      if (nz > 0.0)
        worst_embed = std::max(
            worst_embed, norm_02_eps(embed_graph(p, path, proj), eps) / (2.0 * nz));
    }
  }
  if (worst_adj > 1e-12) c.fail("adjoint pairing defect " + fmt(worst_adj));
  if (worst_sym > 1e-12) c.fail("pairing symmetry defect " + fmt(worst_sym));
  if (worst_pi > 1e-12) c.fail("projection identity defect " + fmt(worst_pi));
  if (worst_embed > 1.0 + 1e-12) c.fail("embedding ratio " + fmt(worst_embed));
  if (c.ok)
    c.msg << fields << " fields: adjoint " << fmt(worst_adj) << ", symmetry " << fmt(worst_sym)
          << ", projection id " << fmt(worst_pi) << ", embedding ratio " << fmt(worst_embed);
  return {c.ok, c.msg.str()};
}

Outcome c5_sobolev() {
  Check c;
  auto p = make_circle();
  BasePath path = connect(p, 12.0, 1200);
  Rng rng(55);
  ProbeResult pr = run_probe(p, path, "sobolev", {1.0, 0.1, 0.01}, 334, rng);
  double worst = 0.0;
  for (double r : pr.max_ratio) worst = std::max(worst, r);
  if (worst > 1.0) c.fail("ratio " + fmt(worst));
  if (c.ok) c.msg << 3 * pr.fields_tested << " field evaluations, worst ratio " << fmt(worst);
  return {c.ok, c.msg.str()};
}

Outcome c6_fredholm() {
  Check c;
  const std::vector<double> sweep = {0.1, 0.05, 0.025};
  double worst_corr = 1.0;
  for (const char* name : {"circle", "ellipse"}) {
    auto p = *make_builtin(name);
    BasePath path = connect(p, 12.0, 320);
    LinearOperator D0 = assemble_base_operator(p, path);
    FredholmReport f0 = fredholm_index_estimate(D0);
    if (f0.dim_ker != 1 || f0.dim_coker != 0 || f0.index != 1)
      c.fail(std::string(name) + " base: (" + std::to_string(f0.dim_ker) + "," +
             std::to_string(f0.dim_coker) + "," + std::to_string(f0.index) + ")");
    else
      worst_corr = std::min(worst_corr, base_kernel_correlation(p, path, f0.kernel_vector));
    for (double eps : sweep) {
      LinearOperator De = assemble_extended_operator(p, path, eps);
      FredholmReport fe = fredholm_index_estimate(De);
      if (fe.dim_ker != 1 || fe.dim_coker != 0 || fe.index != 1) {
        c.fail(std::string(name) + " eps=" + fmt(eps) + ": (" + std::to_string(fe.dim_ker) + "," +
               std::to_string(fe.dim_coker) + "," + std::to_string(fe.index) + ")");
        continue;
      }
      TangentField kz = unflatten_extended(path.grid, p.dim, fe.kernel_vector);
      worst_corr = std::min(worst_corr, kernel_flow_correlation(path, kz.X));
    }
  }
  if (worst_corr <= 0.999) c.fail("kernel correlation " + fmt(worst_corr));
  if (c.ok) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", worst_corr);
    c.msg << "counts (1,0,1) across both problems, kernel correlation >= " << buf;
  }
  return {c.ok, c.msg.str()};
}

Outcome c7_contraction() {
  Check c;
  double worst_contr = 0.0;
  size_t worst_iters = 0;
  double worst_res = 0.0;
  for (const char* name : {"circle", "ellipse"}) {
    auto p = *make_builtin(name);
    BasePath path = connect(p, 12.0, 1200);
    for (double eps : {0.2, 0.1, 0.05}) {
      NewtonReport rep = newton_iterate(p, path, eps);
      if (!rep.converged) {
        c.fail(std::string(name) + " eps=" + fmt(eps) + ": no convergence");
        continue;
      }
      worst_iters = std::max(worst_iters, rep.iterations.size());
      worst_res = std::max(worst_res, rep.residual_final);
      for (size_t k = 1; k < rep.iterations.size(); ++k)
        worst_contr = std::max(worst_contr, rep.iterations[k].contraction_factor);
    }
  }
  if (worst_iters > 10) c.fail("needed " + std::to_string(worst_iters) + " iterations");
  if (worst_res > 1e-10) c.fail("final residual " + fmt(worst_res));
  if (worst_contr > 0.6) c.fail("contraction factor " + fmt(worst_contr));
  if (c.ok)
    c.msg << "max " << worst_iters << " iterations, contraction <= " << fmt(worst_contr)
          << ", residual <= " << fmt(worst_res);
  return {c.ok, c.msg.str()};
}

Outcome c8_scaling() {
  Check c;
  auto p = make_circle();
  BasePath path = connect(p, 12.0, 3600);
  ScalingStudy st = scaling_study(p, path, {0.2, 0.1, 0.05, 0.025, 0.0125});
  if (st.degenerate) c.fail("degenerate study");
  if (!(st.slope_Z_12eps >= 1.8)) c.fail("slope " + fmt(st.slope_Z_12eps));
  if (!(st.max_ratio_X <= 1.0)) c.fail("sup |X|/eps^1.5 = " + fmt(st.max_ratio_X));
  if (!(st.max_ratio_ell <= 1.0)) c.fail("sup |l|/eps^0.5 = " + fmt(st.max_ratio_ell));
  if (c.ok)
    c.msg << "slope " << fmt(st.slope_Z_12eps) << ", sup |X|/eps^1.5 = " << fmt(st.max_ratio_X)
          << ", sup |l|/eps^0.5 = " << fmt(st.max_ratio_ell);
  return {c.ok, c.msg.str()};
}

Outcome c9_uniqueness() {
  Check c;
  auto p = make_circle();
  BasePath path = connect(p, 12.0, 1200);
  Rng rng(99);
  UniquenessReport rep = uniqueness_probe(p, path, 0.1, 20, 0.05, rng);
  if (!rep.all_returned) c.fail("a perturbed start escaped");
  if (rep.max_distance_12eps > 1e-8) c.fail("max distance " + fmt(rep.max_distance_12eps));
  if (c.ok)
    c.msg << rep.n_perturbations << "/" << rep.n_perturbations
          << " reconverged, max distance " << fmt(rep.max_distance_12eps);
  return {c.ok, c.msg.str()};
}

Outcome c10_iteration_map() {
  Check c;
  auto p = make_circle();
  auto crits = find_critical_points(p);
  BasePath path = connect(p, 12.0, 1200);
  double worst = 0.0;
  for (double eps : {0.5, 1.0}) {
    AmbientPath newton_path = T_eps(p, path, eps);
    auto flow = integrate_eps_flow(p, crits.front(), crits.back(), eps, path.grid,
                                   EpsFlowMode::collocation, &path);
    worst = std::max(worst, aligned_distance(newton_path, flow.path));
  }
  if (worst > 1e-3) c.fail("aligned distance " + fmt(worst));
  if (c.ok) c.msg << "max aligned distance to the deformed flow " << fmt(worst);
  return {c.ok, c.msg.str()};
}

Outcome c11_probe_families() {
  Check c;
  auto p = make_circle();
  BasePath path = connect(p, 12.0, 1200);
  Rng rng(7);
  const std::vector<double> sweep = {0.8, 0.4, 0.2, 0.1, 0.05, 0.025};
  double worst_growth = 0.0;
  for (const auto& id : probe_ids()) {
    Rng sub = rng.fork(std::hash<std::string>{}(id));
    const int n_fields = id == "b_inverse" ? 1 : 24;
    ProbeResult pr = run_probe(p, path, id, sweep, n_fields, sub);
    for (double r : pr.max_ratio)
      if (!std::isfinite(r)) c.fail(id + ": non-finite ratio");
    if (id == "sobolev")
      for (double r : pr.max_ratio)
        if (r > 1.0) c.fail("sobolev ratio " + fmt(r));
    if (id == "pi_identity")
      for (double r : pr.max_ratio)
        if (r > 1e-12) c.fail("projection identity " + fmt(r));
    if (id == "b_inverse")
      for (double r : pr.max_ratio)
        if (r > 1.0 + 1e-12) c.fail("fiber inverse norm " + fmt(r));
    if (id == "embedding")
      for (double r : pr.max_ratio)
        if (r > 0.5 + 1e-9) c.fail("embedding ratio " + fmt(r));
    const bool growth_family = id == "ambient" || id == "ambient_adjoint" || id == "range_12" ||
                               id == "range_pi" || id == "range_components" || id == "difference";
    if (growth_family) {
      std::vector<double> sorted = pr.max_ratio;
      std::sort(sorted.begin(), sorted.end());
      const double median = sorted[sorted.size() / 2];
      const double growth = pr.max_ratio.back() / std::max(median, 1e-6);
      worst_growth = std::max(worst_growth, growth);
      if (growth > 1.5) c.fail(id + ": ratio grew " + fmt(growth) + "x along the sweep");
    }
  }
  if (c.ok)
    c.msg << probe_ids().size() << " families over eps in [0.025, 0.8], worst end-of-sweep "
          << "growth " << fmt(worst_growth) << "x";
  return {c.ok, c.msg.str()};
}

Outcome c12_quadratic() {
  Check c;
  Rng rng(31);
  auto p = make_circle();
  BasePath path = connect(p, 12.0, 600);
  QuadraticReport qr = quadratic_remainder_check(p, path, 0.3, 6, rng);
  if (std::abs(qr.remainder_slope - 2.0) > 1e-6)
    c.fail("circle remainder slope " + fmt(qr.remainder_slope));
  if (std::abs(qr.derivative_slope - 1.0) > 1e-6)
    c.fail("circle derivative slope " + fmt(qr.derivative_slope));

  auto q = make_quartic_circle();
  BasePath qpath = connect(q, 12.0, 600);
  QuadraticReport qq = quadratic_remainder_check(q, qpath, 0.3, 6, rng);
  if (qq.remainder_slope < 1.9) c.fail("quartic remainder slope " + fmt(qq.remainder_slope));
  if (qq.derivative_slope < 0.9) c.fail("quartic derivative slope " + fmt(qq.derivative_slope));
  if (c.ok)
    c.msg << "slopes " << fmt(qr.remainder_slope) << "/" << fmt(qr.derivative_slope)
          << " (quadratic data), " << fmt(qq.remainder_slope) << "/" << fmt(qq.derivative_slope)
          << " (quartic data)";
  return {c.ok, c.msg.str()};
}

}  // namespace

int main() {
  struct Row {
    const char* label;
    double cap_seconds;
    std::function<Outcome()> fn;
  };
  const std::vector<Row> rows = {
      {"extended index shift", 2.0, c1_index_shift},
      {"critical point correspondence", 2.0, c2_correspondence},
      {"energy identities", 60.0, c3_energies},
      {"weighted adjoints and graph projection", 10.0, c4_adjoints_projection},
      {"uniform Sobolev bound", 10.0, c5_sobolev},
      {"Fredholm counts and kernels", 60.0, c6_fredholm},
      {"deformed Newton contraction", 360.0, c7_contraction},
      {"correction norm scaling", 300.0, c8_scaling},
      {"uniqueness in the weighted ball", 120.0, c9_uniqueness},
      {"iteration map matches the deformed flow", 60.0, c10_iteration_map},
      {"estimate families stay bounded", 120.0, c11_probe_families},
      {"quadratic remainder exponents", 30.0, c12_quadratic},
  };

  int passed = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = rows[i].fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > rows[i].cap_seconds) {
      o.pass = false;
      o.detail += " [exceeded " + fmt(rows[i].cap_seconds) + "s cap]";
    }
    passed += o.pass ? 1 : 0;
    std::printf("[%2zu] %s  %-42s %s  (%.1fs, cap %.0fs)\n", i + 1, o.pass ? "PASS" : "FAIL",
                rows[i].label, o.detail.c_str(), secs, rows[i].cap_seconds);
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/%zu criteria passed\n", passed, rows.size());
  return passed == static_cast<int>(rows.size()) ? 0 : 1;
}
