#include "adiaflow/flows.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "adiaflow/surface.hpp"

namespace adiaflow {

namespace {

Eigen::VectorXd flow_rhs(const ProblemSetup& p, const Eigen::VectorXd& q) {
  return -grad_f_sigma(p, q);
}

// One RK4 step; stages stay ambient (the fields are smooth off the surface),
// the endpoint is retracted back.
Eigen::VectorXd rk4_surface_step(const ProblemSetup& p, const Eigen::VectorXd& q, double h) {
  Eigen::VectorXd k1 = flow_rhs(p, q);
  Eigen::VectorXd k2 = flow_rhs(p, q + 0.5 * h * k1);
  Eigen::VectorXd k3 = flow_rhs(p, q + 0.5 * h * k2);
  Eigen::VectorXd k4 = flow_rhs(p, q + h * k3);
  Eigen::VectorXd next = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return retract_to_sigma(p, next).q;
}

struct FineTrajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> q;
  std::vector<Eigen::VectorXd> v;  // flow velocities at the stored points
};

Eigen::VectorXd hermite_eval(const FineTrajectory& fine, int k, double t) {
  const double h = fine.t[k + 1] - fine.t[k];
  const double th = (t - fine.t[k]) / h;
  const double th2 = th * th, th3 = th2 * th;
  const double h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
  const double h10 = th3 - 2.0 * th2 + th;
  const double h01 = -2.0 * th3 + 3.0 * th2;
  const double h11 = th3 - th2;
  return h00 * fine.q[k] + (h10 * h) * fine.v[k] + h01 * fine.q[k + 1] +
         (h11 * h) * fine.v[k + 1];
}

int locate_cell(const std::vector<double>& t, double query) {
  auto it = std::upper_bound(t.begin(), t.end(), query);
  int k = static_cast<int>(it - t.begin()) - 1;
  return std::clamp(k, 0, static_cast<int>(t.size()) - 2);
}

double F_H_value(const ProblemSetup& p, const Eigen::VectorXd& u, double tau) {
  return p.F.eval(u) + tau * p.H.eval(u);
}

}  // namespace

void ensure_path_caches(const ProblemSetup& p, BasePath& path) {
  if (path.caches_ready) return;
  const int N = path.grid.N;
  path.frames.clear();
  path.frames.reserve(N + 1);
  for (int j = 0; j <= N; ++j) path.frames.push_back(build_frame(p, path.q[j]));
  path.q_mid.clear();
  path.frames_mid.clear();
  path.q_mid.reserve(N);
  path.frames_mid.reserve(N);
  for (int j = 0; j < N; ++j) {
    Eigen::VectorXd mid = retract_to_sigma(p, 0.5 * (path.q[j] + path.q[j + 1])).q;
    path.q_mid.push_back(mid);
    path.frames_mid.push_back(build_frame(p, mid));
  }
  path.caches_ready = true;
}

BasePath integrate_base_flow(const ProblemSetup& p, const CriticalPoint& from,
                             const CriticalPoint& to, const TimeGrid& grid,
                             double shoot_delta, int unstable_branch) {
  const int m = p.dim;
  if ((from.x - to.x).norm() < 1e-9)
    throw NoConnection("integrate_base_flow: endpoints coincide");
  if (!(from.f_value > to.f_value))
    throw NoConnection("integrate_base_flow: no strict value drop from start to end");

  // Shoot along the steepest unstable direction of the start point.
  SurfaceFrame start_frame = build_frame(p, from.x);
  Eigen::MatrixXd A = hessian_f(p, from.x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.eigenvalues()(0) >= -1e-10)
    throw NoConnection("integrate_base_flow: start point has no unstable direction");
  Eigen::VectorXd e = start_frame.frame * es.eigenvectors().col(0);
  e.normalize();
  int imax = 0;
  for (int i = 1; i < m; ++i)
    if (std::abs(e(i)) > std::abs(e(imax))) imax = i;
  if (e(imax) < 0.0) e = -e;
  if (unstable_branch < 0) e = -e;

  FineTrajectory fine;
  Eigen::VectorXd q = retract_to_sigma(p, from.x + shoot_delta * e).q;
  const double h = std::min(0.005, grid.ds / 4.0);
  const double t_cap = 50.0 * grid.T + 400.0;
  const double arrive_tol = 1e-9;
  double t = 0.0;
  fine.t.push_back(t);
  fine.q.push_back(q);
  fine.v.push_back(flow_rhs(p, q));
  bool arrived = false;
  while (t < t_cap) {
    q = rk4_surface_step(p, q, h);
    t += h;
    fine.t.push_back(t);
    fine.q.push_back(q);
    fine.v.push_back(flow_rhs(p, q));
    if (!p.in_box(q, 0.25))
      throw NoConnection("integrate_base_flow: trajectory left the search box");
    if ((q - to.x).norm() <= arrive_tol) {
      arrived = true;
      break;
    }
  }
  if (!arrived) throw NoConnection("integrate_base_flow: trajectory did not reach the end point");

  // Anchor: the middle node sits at the mean value level.
  const double f_mid = 0.5 * (from.f_value + to.f_value);
  int k_br = -1;
  for (size_t k = 0; k + 1 < fine.q.size(); ++k) {
    if (p.F.eval(fine.q[k]) >= f_mid && p.F.eval(fine.q[k + 1]) < f_mid) {
      k_br = static_cast<int>(k);
      break;
    }
  }
  if (k_br < 0) throw NumericalError("integrate_base_flow: anchor level not bracketed");
  double a = fine.t[k_br], b = fine.t[k_br + 1];
  for (int it = 0; it < 80 && (b - a) > 1e-14 * (1.0 + std::abs(b)); ++it) {
    double mid = 0.5 * (a + b);
    if (p.F.eval(hermite_eval(fine, k_br, mid)) >= f_mid)
      a = mid;
    else
      b = mid;
  }
  const double t0 = 0.5 * (a + b);

  BasePath path;
  path.grid = grid;
  path.x_minus = from.x;
  path.x_plus = to.x;
  path.f_minus = from.f_value;
  path.f_plus = to.f_value;
  path.q.resize(grid.N + 1);
  for (int j = 0; j <= grid.N; ++j) {
    const double tj = t0 + grid.s(j);
    if (tj <= fine.t.front()) {
      path.q[j] = from.x;
    } else if (tj >= fine.t.back()) {
      path.q[j] = to.x;
    } else {
      int k = locate_cell(fine.t, tj);
      path.q[j] = retract_to_sigma(p, hermite_eval(fine, k, tj)).q;
    }
  }

  if ((path.q.front() - from.x).norm() > p.boundary_tol ||
      (path.q.back() - to.x).norm() > p.boundary_tol)
    throw NoConnection("integrate_base_flow: window too short for the boundary tolerance");
  for (int j = 0; j < grid.N; ++j) {
    if (p.F.eval(path.q[j + 1]) > p.F.eval(path.q[j]) + 1e-9)
      throw NumericalError("integrate_base_flow: resampled values not monotone");
  }
  return path;
}

namespace {

// Rows of the two-point boundary conditions for the extended flow: left rows
// annihilate the modes that grow backward in time, right rows the modes that
// grow forward. Built from the eigenvectors of the symmetrized linearization.
struct EndRows {
  Eigen::MatrixXd rows;  // each row is y^T, acting on (X, ell) deviations
};

EndRows end_condition_rows(const ProblemSetup& p, const CriticalPoint& c, double eps,
                           bool left_end) {
  const int m = p.dim;
  Eigen::MatrixXd W = p.F.hess(c.x) + c.tau * p.H.hess(c.x);
  Eigen::VectorXd g = p.H.grad(c.x);
  Eigen::MatrixXd M(m + 1, m + 1);
  M.topLeftCorner(m, m) = W;
  M.topRightCorner(m, 1) = g / eps;
  M.bottomLeftCorner(1, m) = g.transpose() / eps;
  M(m, m) = 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const double rad = es.eigenvalues().cwiseAbs().maxCoeff();
  std::vector<int> keep;
  for (int k = 0; k <= m; ++k) {
    const double lam = es.eigenvalues()(k);
    if (std::abs(lam) < 1e-10 * rad)
      throw IllConditioned("end_condition_rows: near-degenerate extended spectrum");
    if ((left_end && lam > 0.0) || (!left_end && lam < 0.0)) keep.push_back(k);
  }
  EndRows out;
  out.rows.resize(static_cast<int>(keep.size()), m + 1);
  for (size_t r = 0; r < keep.size(); ++r) {
    Eigen::VectorXd z = es.eigenvectors().col(keep[r]);
    Eigen::VectorXd y(m + 1);
    y.head(m) = z.head(m);
    y(m) = eps * z(m);
    out.rows.row(static_cast<int>(r)) = y.transpose();
  }
  return out;
}

struct CollocationSystem {
  const ProblemSetup& p;
  double eps;
  TimeGrid grid;
  Eigen::VectorXd c_minus, c_plus;  // extended end states (x, chi)
  EndRows left, right;
  Eigen::MatrixXd phase_dirs;  // columns: tangential anchors at the middle node
  int j_mid = 0;
  Eigen::VectorXd q_mid_ref;

  int m() const { return p.dim; }
  int n_unknowns() const { return (grid.N + 1) * (m() + 1); }
  int n_rows() const {
    return grid.N * (m() + 1) + static_cast<int>(left.rows.rows()) +
           static_cast<int>(right.rows.rows()) + static_cast<int>(phase_dirs.cols());
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& z) const {
    const int mm = m();
    const int N = grid.N;
    Eigen::VectorXd R(n_rows());
    int row = 0;
    const double inv_eps2 = 1.0 / (eps * eps);
    for (int j = 0; j < N; ++j) {
      const auto zj = z.segment(j * (mm + 1), mm + 1);
      const auto zj1 = z.segment((j + 1) * (mm + 1), mm + 1);
      Eigen::VectorXd u_mid = 0.5 * (zj.head(mm) + zj1.head(mm));
      const double tau_mid = 0.5 * (zj(mm) + zj1(mm));
      R.segment(row, mm) = (zj1.head(mm) - zj.head(mm)) / grid.ds + p.F.grad(u_mid) +
                           tau_mid * p.H.grad(u_mid);
      R(row + mm) = (zj1(mm) - zj(mm)) / grid.ds + inv_eps2 * p.H.eval(u_mid);
      row += mm + 1;
    }
    Eigen::VectorXd dl = z.head(mm + 1) - c_minus;
    for (int r = 0; r < left.rows.rows(); ++r) R(row++) = left.rows.row(r).dot(dl);
    Eigen::VectorXd dr = z.tail(mm + 1) - c_plus;
    for (int r = 0; r < right.rows.rows(); ++r) R(row++) = right.rows.row(r).dot(dr);
    Eigen::VectorXd du = z.segment(j_mid * (mm + 1), mm) - q_mid_ref;
    for (int c = 0; c < phase_dirs.cols(); ++c) R(row++) = phase_dirs.col(c).dot(du);
    return R;
  }

  Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& z) const {
    const int mm = m();
    const int N = grid.N;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(N) * 2 * (mm + 1) * (mm + 1) + 64);
    int row = 0;
    const double inv_eps2 = 1.0 / (eps * eps);
    const double inv_ds = 1.0 / grid.ds;
    for (int j = 0; j < N; ++j) {
      const auto zj = z.segment(j * (mm + 1), mm + 1);
      const auto zj1 = z.segment((j + 1) * (mm + 1), mm + 1);
      Eigen::VectorXd u_mid = 0.5 * (zj.head(mm) + zj1.head(mm));
      const double tau_mid = 0.5 * (zj(mm) + zj1(mm));
      Eigen::MatrixXd Wm = p.F.hess(u_mid) + tau_mid * p.H.hess(u_mid);
      Eigen::VectorXd gm = p.H.grad(u_mid);
      const int c0 = j * (mm + 1), c1 = (j + 1) * (mm + 1);
      for (int r = 0; r < mm; ++r) {
        for (int c = 0; c < mm; ++c) {
          const double w = 0.5 * Wm(r, c);
          trips.emplace_back(row + r, c0 + c, w - (r == c ? inv_ds : 0.0));
          trips.emplace_back(row + r, c1 + c, w + (r == c ? inv_ds : 0.0));
        }
        trips.emplace_back(row + r, c0 + mm, 0.5 * gm(r));
        trips.emplace_back(row + r, c1 + mm, 0.5 * gm(r));
      }
      for (int c = 0; c < mm; ++c) {
        trips.emplace_back(row + mm, c0 + c, 0.5 * inv_eps2 * gm(c));
        trips.emplace_back(row + mm, c1 + c, 0.5 * inv_eps2 * gm(c));
      }
      trips.emplace_back(row + mm, c0 + mm, -inv_ds);
      trips.emplace_back(row + mm, c1 + mm, inv_ds);
      row += mm + 1;
    }
    for (int r = 0; r < left.rows.rows(); ++r) {
      for (int c = 0; c <= mm; ++c) trips.emplace_back(row, c, left.rows(r, c));
      ++row;
    }
    const int cN = N * (mm + 1);
    for (int r = 0; r < right.rows.rows(); ++r) {
      for (int c = 0; c <= mm; ++c) trips.emplace_back(row, cN + c, right.rows(r, c));
      ++row;
    }
    const int cmid = j_mid * (mm + 1);
    for (int c = 0; c < phase_dirs.cols(); ++c) {
      for (int i = 0; i < mm; ++i) trips.emplace_back(row, cmid + i, phase_dirs(i, c));
      ++row;
    }
    Eigen::SparseMatrix<double> J(n_rows(), n_unknowns());
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
  }
};

EpsFlowReport solve_collocation(const ProblemSetup& p, const CriticalPoint& from,
                                const CriticalPoint& to, double eps, const TimeGrid& grid,
                                const BasePath& base) {
  const int m = p.dim;
  CollocationSystem sys{p, eps, grid, {}, {}, end_condition_rows(p, from, eps, true),
                        end_condition_rows(p, to, eps, false), {}, grid.N / 2, {}};
  sys.c_minus.resize(m + 1);
  sys.c_minus << from.x, from.tau;
  sys.c_plus.resize(m + 1);
  sys.c_plus << to.x, to.tau;

  const int n_bc = static_cast<int>(sys.left.rows.rows() + sys.right.rows.rows());
  const int n_phase = (m + 1) - n_bc;
  if (n_phase < 0) throw IllConditioned("integrate_eps_flow: end spectra give too many rows");
  sys.q_mid_ref = base.q[sys.j_mid];
  if (n_phase > 0) {
    SurfaceFrame mid_frame = build_frame(p, base.q[sys.j_mid]);
    Eigen::VectorXd that =
        (base.q[std::min(sys.j_mid + 1, grid.N)] - base.q[std::max(sys.j_mid - 1, 0)]);
    that -= that.dot(mid_frame.normal_u) * mid_frame.normal_u;
    if (that.norm() < 1e-12)
      throw IllConditioned("integrate_eps_flow: stationary anchor node");
    that.normalize();
    Eigen::MatrixXd cand(m, m);
    cand.col(0) = that;
    cand.rightCols(m - 1) = mid_frame.frame;
    Eigen::MatrixXd dirs(m, n_phase);
    int have = 0;
    for (int c = 0; c < m && have < n_phase; ++c) {
      Eigen::VectorXd v = cand.col(c);
      for (int k = 0; k < have; ++k) v -= dirs.col(k).dot(v) * dirs.col(k);
      if (v.norm() < 1e-8) continue;
      dirs.col(have++) = v.normalized();
    }
    if (have < n_phase)
      throw IllConditioned("integrate_eps_flow: cannot build enough phase anchors");
    sys.phase_dirs = dirs;
  } else {
    sys.phase_dirs.resize(m, 0);
  }

  Eigen::VectorXd z(sys.n_unknowns());
  for (int j = 0; j <= grid.N; ++j) {
    z.segment(j * (m + 1), m) = base.q[j];
    z(j * (m + 1) + m) = chi_value(p, base.q[j]);
  }

  EpsFlowReport rep;
  double res_norm = sys.residual(z).lpNorm<Eigen::Infinity>();
  const double tol = 1e-11;
  const double accept_floor = 1e-9;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int it = 0; it < 50 && res_norm > tol; ++it) {
    Eigen::SparseMatrix<double> J = sys.jacobian(z);
    J.makeCompressed();
    lu.compute(J);
    if (lu.info() != Eigen::Success)
      throw StiffnessFailure("integrate_eps_flow: collocation jacobian is singular");
    Eigen::VectorXd step = lu.solve(-sys.residual(z));
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls) {
      Eigen::VectorXd z_try = z + alpha * step;
      double res_try = std::numeric_limits<double>::infinity();
      try {
        res_try = sys.residual(z_try).lpNorm<Eigen::Infinity>();
      } catch (const NumericalError&) {
        // overflow in a field evaluation; treat the trial as rejected
      }
      if (std::isfinite(res_try) && res_try < res_norm * (1.0 - 0.2 * alpha)) {
        z = z_try;
        res_norm = res_try;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    rep.newton_iterations = it + 1;
    if (!accepted) {
      if (res_norm <= accept_floor) break;
      throw StiffnessFailure("integrate_eps_flow: collocation line search stalled");
    }
  }
  if (res_norm > accept_floor)
    throw StiffnessFailure("integrate_eps_flow: collocation did not converge");
  rep.final_residual = res_norm;

  rep.path.grid = grid;
  rep.path.x_minus = from.x;
  rep.path.x_plus = to.x;
  rep.path.tau_minus = from.tau;
  rep.path.tau_plus = to.tau;
  rep.path.u.resize(grid.N + 1);
  rep.path.tau.resize(grid.N + 1);
  for (int j = 0; j <= grid.N; ++j) {
    rep.path.u[j] = z.segment(j * (m + 1), m);
    rep.path.tau[j] = z(j * (m + 1) + m);
  }
  return rep;
}

Eigen::VectorXd extended_rhs(const ProblemSetup& p, double eps, const Eigen::VectorXd& z) {
  const int m = static_cast<int>(z.size()) - 1;
  Eigen::VectorXd u = z.head(m);
  Eigen::VectorXd out(m + 1);
  out.head(m) = -(p.F.grad(u) + z(m) * p.H.grad(u));
  out(m) = -p.H.eval(u) / (eps * eps);
  return out;
}

void check_stepping_state(const ProblemSetup& p, const Eigen::VectorXd& z, const char* what) {
  const int m = p.dim;
  if (!z.allFinite()) throw StiffnessFailure(std::string(what) + ": state blew up");
  Eigen::VectorXd u = z.head(m);
  if (!p.in_box(u, 0.5)) throw StiffnessFailure(std::string(what) + ": state left the box");
  if (std::abs(p.H.eval(u)) > p.kappa)
    throw StiffnessFailure(std::string(what) + ": constraint drift exceeded kappa");
}

EpsFlowReport solve_stepping(const ProblemSetup& p, const CriticalPoint& from,
                             const CriticalPoint& to, double eps, const TimeGrid& grid,
                             const BasePath& base, EpsFlowMode mode) {
  const int m = p.dim;
  EpsFlowReport rep;
  rep.path.grid = grid;
  rep.path.x_minus = from.x;
  rep.path.x_plus = to.x;
  rep.path.tau_minus = from.tau;
  rep.path.tau_plus = to.tau;
  rep.path.u.resize(grid.N + 1);
  rep.path.tau.resize(grid.N + 1);

  Eigen::VectorXd z(m + 1);
  z << base.q[0], chi_value(p, base.q[0]);
  rep.path.u[0] = z.head(m);
  rep.path.tau[0] = z(m);
  const double ds = grid.ds;
  for (int j = 0; j < grid.N; ++j) try {
    if (mode == EpsFlowMode::rk4) {
      Eigen::VectorXd k1 = extended_rhs(p, eps, z);
      Eigen::VectorXd k2 = extended_rhs(p, eps, z + 0.5 * ds * k1);
      Eigen::VectorXd k3 = extended_rhs(p, eps, z + 0.5 * ds * k2);
      Eigen::VectorXd k4 = extended_rhs(p, eps, z + ds * k3);
      z = z + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      check_stepping_state(p, z, "integrate_eps_flow[rk4]");
    } else {
      // Implicit midpoint cell solve.
      Eigen::VectorXd zn = z + ds * extended_rhs(p, eps, z);
      if (!zn.allFinite()) zn = z;
      bool ok = false;
      for (int it = 0; it < 40; ++it) {
        Eigen::VectorXd mid = 0.5 * (z + zn);
        Eigen::VectorXd r = zn - z - ds * extended_rhs(p, eps, mid);
        if (r.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + zn.lpNorm<Eigen::Infinity>())) {
          ok = true;
          break;
        }
        Eigen::VectorXd u_mid = mid.head(m);
        Eigen::MatrixXd Wm = p.F.hess(u_mid) + mid(m) * p.H.hess(u_mid);
        Eigen::VectorXd gm = p.H.grad(u_mid);
        Eigen::MatrixXd J = Eigen::MatrixXd::Identity(m + 1, m + 1);
        J.topLeftCorner(m, m) += 0.5 * ds * Wm;
        J.topRightCorner(m, 1) = 0.5 * ds * gm;
        J.bottomLeftCorner(1, m) = (0.5 * ds / (eps * eps)) * gm.transpose();
        Eigen::VectorXd step = J.fullPivLu().solve(-r);
        if (!step.allFinite())
          throw StiffnessFailure("integrate_eps_flow[midpoint]: cell solve diverged");
        zn += step;
      }
      if (!ok) throw StiffnessFailure("integrate_eps_flow[midpoint]: cell solve stalled");
      z = zn;
      check_stepping_state(p, z, "integrate_eps_flow[midpoint]");
    }
    rep.path.u[j + 1] = z.head(m);
    rep.path.tau[j + 1] = z(m);
  } catch (const NumericalError&) {
    throw StiffnessFailure("integrate_eps_flow: field evaluation overflowed while stepping");
  }
  return rep;
}

}  // namespace

EpsFlowReport integrate_eps_flow(const ProblemSetup& p, const CriticalPoint& from,
                                 const CriticalPoint& to, double eps, const TimeGrid& grid,
                                 EpsFlowMode mode, const BasePath* guess) {
  if (!(eps > 0.0) || eps > 1.0)
    throw ConfigError("integrate_eps_flow: eps must lie in (0, 1]");
  BasePath local;
  const BasePath* base = guess;
  if (base == nullptr) {
    local = integrate_base_flow(p, from, to, grid);
    base = &local;
  }
  if (base->grid.N != grid.N || std::abs(base->grid.T - grid.T) > 1e-12)
    throw ConfigError("integrate_eps_flow: guess grid mismatch");
  if (mode == EpsFlowMode::collocation) return solve_collocation(p, from, to, eps, grid, *base);
  return solve_stepping(p, from, to, eps, grid, *base, mode);
}

namespace {

// Central differences inside, one-sided at the ends.
template <typename Get>
auto grid_derivative(const TimeGrid& grid, int j, Get&& value) -> decltype(value(0)) {
  if (j == 0) return (value(1) - value(0)) / grid.ds;
  if (j == grid.N) return (value(grid.N) - value(grid.N - 1)) / grid.ds;
  return (value(j + 1) - value(j - 1)) / (2.0 * grid.ds);
}

}  // namespace

AmbientPath embed_base_path(const ProblemSetup& p, const BasePath& path) {
  AmbientPath out;
  out.grid = path.grid;
  out.x_minus = path.x_minus;
  out.x_plus = path.x_plus;
  out.tau_minus = chi_value(p, path.x_minus);
  out.tau_plus = chi_value(p, path.x_plus);
  out.u = path.q;
  out.tau.resize(path.grid.N + 1);
  for (int j = 0; j <= path.grid.N; ++j) out.tau[j] = chi_value(p, path.q[j]);
  return out;
}

EnergyBreakdown base_energy(const ProblemSetup& p, const BasePath& path) {
  const TimeGrid& g = path.grid;
  EnergyBreakdown e;
  for (int j = 0; j <= g.N; ++j) {
    Eigen::VectorXd dq = grid_derivative(g, j, [&](int k) { return path.q[k]; });
    Eigen::VectorXd gf = grad_f_sigma(p, path.q[j]);
    const double w = (j == 0 || j == g.N) ? 0.5 * g.ds : g.ds;
    e.quadrature += w * 0.5 * (dq.squaredNorm() + gf.squaredNorm());
  }
  e.tail_left = path.f_minus - p.F.eval(path.q.front());
  e.tail_right = p.F.eval(path.q.back()) - path.f_plus;
  e.value = e.quadrature + e.tail_left + e.tail_right;
  return e;
}

EnergyBreakdown eps_energy(const ProblemSetup& p, const AmbientPath& path, double eps) {
  const TimeGrid& g = path.grid;
  EnergyBreakdown e;
  const double eps2 = eps * eps;
  for (int j = 0; j <= g.N; ++j) {
    Eigen::VectorXd du = grid_derivative(g, j, [&](int k) { return path.u[k]; });
    const double dtau = grid_derivative(g, j, [&](int k) { return path.tau[k]; });
    Eigen::VectorXd gFH = p.F.grad(path.u[j]) + path.tau[j] * p.H.grad(path.u[j]);
    const double Hu = p.H.eval(path.u[j]);
    const double w = (j == 0 || j == g.N) ? 0.5 * g.ds : g.ds;
    e.quadrature +=
        w * 0.5 * (du.squaredNorm() + eps2 * dtau * dtau + gFH.squaredNorm() + Hu * Hu / eps2);
  }
  // The end values of F + tau H continue the drop to the critical levels.
  e.tail_left = (p.F.eval(path.x_minus) + path.tau_minus * p.H.eval(path.x_minus)) -
                F_H_value(p, path.u.front(), path.tau.front());
  e.tail_right = F_H_value(p, path.u.back(), path.tau.back()) -
                 (p.F.eval(path.x_plus) + path.tau_plus * p.H.eval(path.x_plus));
  e.value = e.quadrature + e.tail_left + e.tail_right;
  return e;
}

double energy_identity_residual(const EnergyBreakdown& e, double f_minus, double f_plus) {
  return std::abs(e.value - (f_minus - f_plus));
}

SectionSample base_section_values(const ProblemSetup& p, const BasePath& path) {
  const TimeGrid& g = path.grid;
  SectionSample out;
  out.first.resize(g.N + 1);
  for (int j = 0; j <= g.N; ++j) {
    Eigen::VectorXd dq = grid_derivative(g, j, [&](int k) { return path.q[k]; });
    out.first[j] = dq + grad_f_sigma(p, path.q[j]);
    out.max_first_norm = std::max(out.max_first_norm, out.first[j].norm());
  }
  return out;
}

SectionSample eps_section_values(const ProblemSetup& p, const AmbientPath& path, double eps) {
  const TimeGrid& g = path.grid;
  SectionSample out;
  out.first.resize(g.N + 1);
  out.second.resize(g.N + 1);
  const double inv_eps2 = 1.0 / (eps * eps);
  for (int j = 0; j <= g.N; ++j) {
    Eigen::VectorXd du = grid_derivative(g, j, [&](int k) { return path.u[k]; });
    const double dtau = grid_derivative(g, j, [&](int k) { return path.tau[k]; });
    out.first[j] = du + p.F.grad(path.u[j]) + path.tau[j] * p.H.grad(path.u[j]);
    out.second[j] = dtau + inv_eps2 * p.H.eval(path.u[j]);
    out.max_first_norm = std::max(out.max_first_norm, out.first[j].norm());
    out.max_second_abs = std::max(out.max_second_abs, std::abs(out.second[j]));
  }
  return out;
}

void write_base_path_csv(const ProblemSetup& p, const BasePath& path,
                         const std::string& filename) {
  std::ofstream out(filename);
  if (!out) throw ConfigError("write_base_path_csv: cannot open " + filename);
  out << std::setprecision(17);
  out << "s";
  for (int i = 0; i < p.dim; ++i) out << ",q" << i;
  out << ",H,f\n";
  for (int j = 0; j <= path.grid.N; ++j) {
    out << path.grid.s(j);
    for (int i = 0; i < p.dim; ++i) out << "," << path.q[j](i);
    out << "," << p.H.eval(path.q[j]) << "," << p.F.eval(path.q[j]) << "\n";
  }
}

void write_ambient_path_csv(const ProblemSetup& p, const AmbientPath& path, double eps,
                            const std::string& filename) {
  std::ofstream out(filename);
  if (!out) throw ConfigError("write_ambient_path_csv: cannot open " + filename);
  out << std::setprecision(17);
  out << "s";
  for (int i = 0; i < p.dim; ++i) out << ",u" << i;
  out << ",tau,H,F_H,eps\n";
  for (int j = 0; j <= path.grid.N; ++j) {
    out << path.grid.s(j);
    for (int i = 0; i < p.dim; ++i) out << "," << path.u[j](i);
    out << "," << path.tau[j] << "," << p.H.eval(path.u[j]) << ","
        << F_H_value(p, path.u[j], path.tau[j]) << "," << eps << "\n";
  }
}

}  // namespace adiaflow
