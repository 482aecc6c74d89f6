#include "adiaflow/newton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Dense>

#include "adiaflow/errors.hpp"
#include "adiaflow/surface.hpp"

namespace adiaflow {

namespace {

// End rows of an assembled operator as dense blocks over the first and last
// node slots. Row order matches the tail rows of op.A.
struct EndRowBlocks {
  Eigen::MatrixXd left;   // n_end_left x b, columns 0..b-1
  Eigen::MatrixXd right;  // n_end_right x b, columns N*b..N*b+b-1
};

EndRowBlocks extract_end_rows(const LinearOperator& op) {
  const int b = op.dim + 1;
  const int N = op.grid.N;
  EndRowBlocks blocks;
  blocks.left = Eigen::MatrixXd::Zero(op.n_end_left, b);
  blocks.right = Eigen::MatrixXd::Zero(op.n_end_right, b);
  const int row0 = N * b;
  for (int c = 0; c < b; ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.A, c); it; ++it)
      if (it.row() >= row0 && it.row() < row0 + op.n_end_left)
        blocks.left(it.row() - row0, c) = it.value();
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.A, N * b + c); it; ++it)
      if (it.row() >= row0 + op.n_end_left)
        blocks.right(it.row() - row0 - op.n_end_left, c) = it.value();
  }
  return blocks;
}

Eigen::VectorXd node_slot(const TangentField& Z, int j) {
  Eigen::VectorXd v(Z.X[j].size() + 1);
  v.head(Z.X[j].size()) = Z.X[j];
  v(Z.X[j].size()) = Z.ell[j];
  return v;
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

RightInverse::RightInverse(const LinearOperator& op) : op_(&op) {
  winv_ = op.w_dom.cwiseInverse();
  Eigen::SparseMatrix<double> At = op.A.transpose();
  Eigen::SparseMatrix<double> gram = op.A * winv_.asDiagonal() * At;
  gram.makeCompressed();

  scale_.resize(gram.rows());
  for (int i = 0; i < gram.rows(); ++i) {
    const double d = gram.coeff(i, i);
    if (!(d > 0.0)) throw NotSurjective("right inverse: Gram matrix has a nonpositive diagonal");
    scale_(i) = 1.0 / std::sqrt(d);
  }
  gram_scaled_ = scale_.asDiagonal() * gram * scale_.asDiagonal();
  gram_scaled_.makeCompressed();

  llt_.compute(gram_scaled_);
  if (llt_.info() != Eigen::Success) {
    // one retry with diagonal jitter; needing it flags suspect surjectivity
    Eigen::SparseMatrix<double> bumped = gram_scaled_;
    for (int i = 0; i < bumped.rows(); ++i) bumped.coeffRef(i, i) += 1e-12;
    llt_.compute(bumped);
    jitter_ = true;
    if (llt_.info() != Eigen::Success)
      throw NotSurjective("right inverse: Gram factorization failed");
  }
}

Eigen::VectorXd RightInverse::apply(const Eigen::VectorXd& r) const {
  Eigen::VectorXd y = scale_.asDiagonal() * llt_.solve(scale_.asDiagonal() * r);
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd resid = r - op_->A * (winv_.asDiagonal() * (op_->A.transpose() * y));
    y += scale_.asDiagonal() * llt_.solve(scale_.asDiagonal() * resid);
  }
  Eigen::VectorXd zeta = winv_.asDiagonal() * (op_->A.transpose() * y);
  const double rnorm = op_->cod_norm(r);
  if (rnorm > 0.0) {
    const double defect = op_->cod_norm(op_->apply(zeta) - r) / rnorm;
    if (!(defect <= 1e-6))
      throw NotSurjective("right inverse: preimage defect " + std::to_string(defect));
  }
  return zeta;
}

TangentField trivialized_section(const ProblemSetup& p, BasePath& path, double eps,
                                 const TangentField& Z) {
  ensure_path_caches(p, path);
  const int N = path.grid.N;
  const double ds = path.grid.ds;
  const double inv_eps2 = 1.0 / (eps * eps);
  TangentField out = zero_field(path.grid, p.dim);
  std::vector<Eigen::VectorXd> u(N + 1);
  std::vector<double> tau(N + 1);
  for (int j = 0; j <= N; ++j) {
    u[j] = path.q[j] + Z.X[j];
    tau[j] = path.frames[j].chi + Z.ell[j];
    if (!p.in_box(u[j], 0.25))
      throw DomainExit("trivialized_section: deformed point left the domain box");
  }
  for (int j = 0; j <= N; ++j) {
    Eigen::VectorXd du = (j == 0)   ? (u[1] - u[0]) / ds
                         : (j == N) ? (u[N] - u[N - 1]) / ds
                                    : (u[j + 1] - u[j - 1]) / (2.0 * ds);
    const double dtau = (j == 0)   ? (tau[1] - tau[0]) / ds
                        : (j == N) ? (tau[N] - tau[N - 1]) / ds
                                   : (tau[j + 1] - tau[j - 1]) / (2.0 * ds);
    out.X[j] = du + p.F.grad(u[j]) + tau[j] * p.H.grad(u[j]);
    out.ell[j] = dtau + inv_eps2 * p.H.eval(u[j]);
  }
  return out;
}

Eigen::VectorXd newton_residual(const ProblemSetup& p, BasePath& path,
                                const LinearOperator& Deps, double eps, const TangentField& Z) {
  ensure_path_caches(p, path);
  const int m = p.dim;
  const int b = m + 1;
  const int N = path.grid.N;
  const double inv_ds = 1.0 / path.grid.ds;
  const double inv_eps2 = 1.0 / (eps * eps);

  Eigen::VectorXd r(Deps.rows());
  for (int j = 0; j <= N; ++j)
    if (!p.in_box(path.q[j] + Z.X[j], 0.25))
      throw DomainExit("newton_residual: deformed point left the domain box");

  for (int j = 0; j < N; ++j) {
    const Eigen::VectorXd ubar = path.q_mid[j] + 0.5 * (Z.X[j] + Z.X[j + 1]);
    const double taubar = path.frames_mid[j].chi + 0.5 * (Z.ell[j] + Z.ell[j + 1]);
    const Eigen::VectorXd du =
        inv_ds * (path.q[j + 1] + Z.X[j + 1] - path.q[j] - Z.X[j]);
    const double dtau = inv_ds * (path.frames[j + 1].chi + Z.ell[j + 1] -
                                  path.frames[j].chi - Z.ell[j]);
    r.segment(j * b, m) = du + p.F.grad(ubar) + taubar * p.H.grad(ubar);
    r(j * b + m) = dtau + inv_eps2 * p.H.eval(ubar);
  }
  const EndRowBlocks ends = extract_end_rows(Deps);
  int row = N * b;
  const Eigen::VectorXd z0 = node_slot(Z, 0), zN = node_slot(Z, N);
  for (int k = 0; k < Deps.n_end_left; ++k, ++row) r(row) = ends.left.row(k).dot(z0);
  for (int k = 0; k < Deps.n_end_right; ++k, ++row) r(row) = ends.right.row(k).dot(zN);
  return r;
}

Eigen::VectorXd apply_section_jacobian(const ProblemSetup& p, BasePath& path,
                                       const LinearOperator& Deps, double eps,
                                       const TangentField& Z, const TangentField& zeta) {
  ensure_path_caches(p, path);
  const int m = p.dim;
  const int b = m + 1;
  const int N = path.grid.N;
  const double inv_ds = 1.0 / path.grid.ds;
  const double inv_eps2 = 1.0 / (eps * eps);

  Eigen::VectorXd r(Deps.rows());
  for (int j = 0; j < N; ++j) {
    const Eigen::VectorXd ubar = path.q_mid[j] + 0.5 * (Z.X[j] + Z.X[j + 1]);
    const double taubar = path.frames_mid[j].chi + 0.5 * (Z.ell[j] + Z.ell[j + 1]);
    const Eigen::VectorXd xbar = 0.5 * (zeta.X[j] + zeta.X[j + 1]);
    const double lbar = 0.5 * (zeta.ell[j] + zeta.ell[j + 1]);
    const Eigen::MatrixXd W = p.F.hess(ubar) + taubar * p.H.hess(ubar);
    const Eigen::VectorXd g = p.H.grad(ubar);
    r.segment(j * b, m) =
        inv_ds * (zeta.X[j + 1] - zeta.X[j]) + W * xbar + lbar * g;
    r(j * b + m) = inv_ds * (zeta.ell[j + 1] - zeta.ell[j]) + inv_eps2 * g.dot(xbar);
  }
  const EndRowBlocks ends = extract_end_rows(Deps);
  int row = N * b;
  const Eigen::VectorXd z0 = node_slot(zeta, 0), zN = node_slot(zeta, N);
  for (int k = 0; k < Deps.n_end_left; ++k, ++row) r(row) = ends.left.row(k).dot(z0);
  for (int k = 0; k < Deps.n_end_right; ++k, ++row) r(row) = ends.right.row(k).dot(zN);
  return r;
}

LinearOperator assemble_section_jacobian(const ProblemSetup& p, BasePath& path,
                                         const LinearOperator& Deps, double eps,
                                         const TangentField& Z) {
  ensure_path_caches(p, path);
  const int m = p.dim;
  const int b = m + 1;
  const int N = path.grid.N;
  const double inv_ds = 1.0 / path.grid.ds;
  const double inv_eps2 = 1.0 / (eps * eps);

  LinearOperator op = Deps;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(N) * 2 * b * b + 2 * static_cast<size_t>(b) * b);
  for (int j = 0; j < N; ++j) {
    const Eigen::VectorXd ubar = path.q_mid[j] + 0.5 * (Z.X[j] + Z.X[j + 1]);
    const double taubar = path.frames_mid[j].chi + 0.5 * (Z.ell[j] + Z.ell[j + 1]);
    const Eigen::MatrixXd W = p.F.hess(ubar) + taubar * p.H.hess(ubar);
    const Eigen::VectorXd g = p.H.grad(ubar);
    const int row = j * b, c0 = j * b, c1 = (j + 1) * b;
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) {
        const double w = 0.5 * W(r, c);
        trips.emplace_back(row + r, c0 + c, w - (r == c ? inv_ds : 0.0));
        trips.emplace_back(row + r, c1 + c, w + (r == c ? inv_ds : 0.0));
      }
      trips.emplace_back(row + r, c0 + m, 0.5 * g(r));
      trips.emplace_back(row + r, c1 + m, 0.5 * g(r));
    }
    for (int c = 0; c < m; ++c) {
      trips.emplace_back(row + m, c0 + c, 0.5 * inv_eps2 * g(c));
      trips.emplace_back(row + m, c1 + c, 0.5 * inv_eps2 * g(c));
    }
    trips.emplace_back(row + m, c0 + m, -inv_ds);
    trips.emplace_back(row + m, c1 + m, inv_ds);
  }
  const EndRowBlocks ends = extract_end_rows(Deps);
  int row = N * b;
  for (int k = 0; k < Deps.n_end_left; ++k, ++row)
    for (int c = 0; c < b; ++c) trips.emplace_back(row, c, ends.left(k, c));
  for (int k = 0; k < Deps.n_end_right; ++k, ++row)
    for (int c = 0; c < b; ++c) trips.emplace_back(row, N * b + c, ends.right(k, c));
  op.A.setZero();
  op.A.setFromTriplets(trips.begin(), trips.end());
  op.A.makeCompressed();
  return op;
}

NewtonReport newton_iterate(const ProblemSetup& p, BasePath& path, double eps,
                            const NewtonOptions& opts) {
  ensure_path_caches(p, path);
  LinearOperator Deps = assemble_extended_operator(p, path, eps);
  std::unique_ptr<RightInverse> R = std::make_unique<RightInverse>(Deps);

  NewtonReport rep;
  rep.eps = eps;
  rep.surjective_suspect = R->jitter_used();
  TangentField Z = opts.Z_start ? *opts.Z_start : zero_field(path.grid, p.dim);

  Eigen::VectorXd r = newton_residual(p, path, Deps, eps, Z);
  double res = Deps.cod_norm(r);
  int stalls = 0;
  LinearOperator J;  // only used when re-linearizing
  for (int nu = 0; nu < opts.max_iter && res > opts.newton_tol; ++nu) {
    if (opts.full_newton && nu > 0) {
      J = assemble_section_jacobian(p, path, Deps, eps, Z);
      R = std::make_unique<RightInverse>(J);
      rep.surjective_suspect = rep.surjective_suspect || R->jitter_used();
    }
    Eigen::VectorXd zeta_flat = -R->apply(r);
    TangentField zeta = unflatten_extended(path.grid, p.dim, zeta_flat);
    for (int j = 0; j <= path.grid.N; ++j) {
      Z.X[j] += zeta.X[j];
      Z.ell[j] += zeta.ell[j];
    }
    r = newton_residual(p, path, Deps, eps, Z);
    const double res_new = Deps.cod_norm(r);
    rep.iterations.push_back({nu, norm_12_eps(zeta, eps), res_new, res_new / res});
    stalls = (res_new >= res) ? stalls + 1 : 0;
    res = res_new;
    if (!std::isfinite(res) || stalls >= 3)
      throw Diverged("newton_iterate: residual stopped contracting");
  }
  rep.converged = res <= opts.newton_tol;
  rep.residual_final = res;
  rep.Z_final = Z;
  rep.norm_Z_12eps = norm_12_eps(Z, eps);
  for (int j = 0; j <= path.grid.N; ++j) {
    rep.norm_X_inf = std::max(rep.norm_X_inf, Z.X[j].norm());
    rep.norm_ell_inf = std::max(rep.norm_ell_inf, std::abs(Z.ell[j]));
  }
  return rep;
}

AmbientPath T_eps(const ProblemSetup& p, BasePath& path, double eps, NewtonReport* out_report) {
  NewtonReport rep = newton_iterate(p, path, eps);
  if (!rep.converged)
    throw NoConvergence("T_eps: newton iteration did not reach tolerance");
  AmbientPath out;
  out.grid = path.grid;
  out.u.resize(path.grid.N + 1);
  out.tau.resize(path.grid.N + 1);
  for (int j = 0; j <= path.grid.N; ++j) {
    out.u[j] = path.q[j] + rep.Z_final.X[j];
    out.tau[j] = path.frames[j].chi + rep.Z_final.ell[j];
  }
  out.x_minus = path.x_minus;
  out.x_plus = path.x_plus;
  out.tau_minus = chi_value(p, path.x_minus);
  out.tau_plus = chi_value(p, path.x_plus);
  if (out_report) *out_report = std::move(rep);
  return out;
}

ScalingStudy scaling_study(const ProblemSetup& p, BasePath& path,
                           const std::vector<double>& eps_list) {
  if (eps_list.size() < 2) throw InsufficientData("scaling_study: need at least two eps values");
  const auto [lo, hi] = std::minmax_element(eps_list.begin(), eps_list.end());
  if (*hi / *lo < 10.0 * (1.0 - 1e-12))
    throw InsufficientData("scaling_study: eps range must span a decade");

  ScalingStudy study;
  for (double eps : eps_list) {
    NewtonReport rep = newton_iterate(p, path, eps);
    if (!rep.converged)
      throw InsufficientData("scaling_study: run at eps " + std::to_string(eps) +
                             " did not converge");
    study.rows.push_back({eps, rep.norm_Z_12eps, rep.norm_X_inf, rep.norm_ell_inf,
                          static_cast<int>(rep.iterations.size()), rep.residual_final});
  }
  double max_norm = 0.0;
  for (const auto& row : study.rows) max_norm = std::max(max_norm, row.norm_Z_12eps);
  if (max_norm <= 1e-12) {
    study.degenerate = true;
    study.slope_Z_12eps = study.slope_X_inf = study.slope_ell_inf =
        std::numeric_limits<double>::quiet_NaN();
    return study;
  }
  std::vector<double> lx, lz, lxi, lli;
  for (const auto& row : study.rows) {
    lx.push_back(std::log(row.eps));
    lz.push_back(std::log(row.norm_Z_12eps));
    lxi.push_back(std::log(row.norm_X_inf));
    lli.push_back(std::log(row.norm_ell_inf));
    study.max_ratio_X = std::max(study.max_ratio_X, row.norm_X_inf / std::pow(row.eps, 1.5));
    study.max_ratio_ell = std::max(study.max_ratio_ell, row.norm_ell_inf / std::sqrt(row.eps));
  }
  study.slope_Z_12eps = lsq_slope(lx, lz);
  study.slope_X_inf = lsq_slope(lx, lxi);
  study.slope_ell_inf = lsq_slope(lx, lli);
  return study;
}

void write_scaling_csv(const ScalingStudy& study, const std::string& filename) {
  std::ofstream out(filename);
  if (!out) throw ConfigError("write_scaling_csv: cannot open " + filename);
  out.precision(17);
  out << "eps,norm_Z_12eps,norm_X_inf,norm_ell_inf,iterations,residual\n";
  for (const auto& row : study.rows)
    out << row.eps << ',' << row.norm_Z_12eps << ',' << row.norm_X_inf << ','
        << row.norm_ell_inf << ',' << row.iterations << ',' << row.residual << '\n';
}

UniquenessReport uniqueness_probe(const ProblemSetup& p, BasePath& path, double eps,
                                  int n_perturbations, double delta0, Rng& rng) {
  if (n_perturbations < 1) throw ConfigError("uniqueness_probe: need at least one perturbation");
  NewtonReport base = newton_iterate(p, path, eps);
  if (!base.converged) throw NoConvergence("uniqueness_probe: base run did not converge");

  LinearOperator Deps = assemble_extended_operator(p, path, eps);
  UniquenessReport rep;
  rep.eps = eps;
  rep.delta0 = delta0;
  rep.n_perturbations = n_perturbations;
  rep.all_returned = true;

  const double ball = delta0 * std::sqrt(eps);
  for (int i = 0; i < n_perturbations; ++i) {
    Rng sub = rng.fork(static_cast<uint64_t>(i) + 1);
    Eigen::VectorXd y = sub.normal_vec(Deps.rows());
    Eigen::VectorXd pert = Deps.apply_adjoint(y);  // stays in the adjoint range
    TangentField P = unflatten_extended(path.grid, p.dim, pert);
    double xinf = 0.0;
    for (int j = 0; j <= path.grid.N; ++j) xinf = std::max(xinf, P.X[j].norm());
    if (xinf <= 0.0) continue;
    const double s = 0.9 * ball / xinf;

    TangentField Z0 = base.Z_final;
    for (int j = 0; j <= path.grid.N; ++j) {
      Z0.X[j] += s * P.X[j];
      Z0.ell[j] += s * P.ell[j];
    }
    NewtonOptions opts;
    opts.Z_start = &Z0;
    NewtonReport rerun = newton_iterate(p, path, eps, opts);

    TangentField diff = rerun.Z_final;
    for (int j = 0; j <= path.grid.N; ++j) {
      diff.X[j] -= base.Z_final.X[j];
      diff.ell[j] -= base.Z_final.ell[j];
    }
    const double dist = norm_12_eps(diff, eps);
    rep.max_distance_12eps = std::max(rep.max_distance_12eps, dist);
    if (!rerun.converged || dist > 1e-8) {
      rep.all_returned = false;
      throw UniquenessViolated("uniqueness_probe: perturbation " + std::to_string(i) +
                               " converged to a different zero (distance " +
                               std::to_string(dist) + ")");
    }
  }
  return rep;
}

QuadraticReport quadratic_remainder_check(const ProblemSetup& p, BasePath& path, double eps,
                                          int n_fields, Rng& rng) {
  if (n_fields < 1) throw ConfigError("quadratic_remainder_check: need at least one field");
  ensure_path_caches(p, path);
  LinearOperator Deps = assemble_extended_operator(p, path, eps);

  QuadraticReport rep;
  rep.t_ladder = {1.0, 0.5, 0.25, 0.125};
  rep.fields_tested = n_fields;
  rep.remainder_slope = std::numeric_limits<double>::infinity();
  rep.derivative_slope = std::numeric_limits<double>::infinity();

  const TangentField zero = zero_field(path.grid, p.dim);
  for (int f = 0; f < n_fields; ++f) {
    Rng sub = rng.fork(static_cast<uint64_t>(f) + 1);
    TangentField Z = random_smooth_field(path.grid, p.dim, sub);
    TangentField zeta = random_smooth_field(path.grid, p.dim, sub);
    double zx = 0.0, cx = 0.0;
    for (int j = 0; j <= path.grid.N; ++j) {
      zx = std::max(zx, Z.X[j].norm() + std::abs(Z.ell[j]));
      cx = std::max(cx, zeta.X[j].norm() + std::abs(zeta.ell[j]));
    }
    for (int j = 0; j <= path.grid.N; ++j) {
      Z.X[j] *= 0.1 / zx;
      Z.ell[j] *= 0.1 / zx;
      zeta.X[j] *= 0.1 / cx;
      zeta.ell[j] *= 0.1 / cx;
    }

    const Eigen::VectorXd FZ = newton_residual(p, path, Deps, eps, Z);
    const Eigen::VectorXd JZzeta = apply_section_jacobian(p, path, Deps, eps, Z, zeta);
    const Eigen::VectorXd J0zeta = apply_section_jacobian(p, path, Deps, eps, zero, zeta);

    std::vector<double> lt, lrem, lder;
    for (double t : rep.t_ladder) {
      TangentField Zt = Z, tZ = Z;
      for (int j = 0; j <= path.grid.N; ++j) {
        Zt.X[j] += t * zeta.X[j];
        Zt.ell[j] += t * zeta.ell[j];
        tZ.X[j] *= t;
        tZ.ell[j] *= t;
      }
      const Eigen::VectorXd rem = newton_residual(p, path, Deps, eps, Zt) - FZ - t * JZzeta;
      const Eigen::VectorXd dd = apply_section_jacobian(p, path, Deps, eps, tZ, zeta) - J0zeta;
      const double rn = Deps.cod_norm(rem);
      const double dn = Deps.cod_norm(dd);
      rep.max_remainder = std::max(rep.max_remainder, rn);
      lt.push_back(std::log(t));
      lrem.push_back(std::log(std::max(rn, 1e-300)));
      lder.push_back(std::log(std::max(dn, 1e-300)));
    }
    rep.remainder_slope = std::min(rep.remainder_slope, lsq_slope(lt, lrem));
    rep.derivative_slope = std::min(rep.derivative_slope, lsq_slope(lt, lder));
  }
  return rep;
}

nlohmann::json newton_report_to_json(const NewtonReport& rep) {
  nlohmann::json its = nlohmann::json::array();
  for (const auto& it : rep.iterations)
    its.push_back({{"nu", it.nu},
                   {"norm_zeta_12eps", it.norm_zeta_12eps},
                   {"norm_residual_02eps", it.norm_residual_02eps},
                   {"contraction_factor", it.contraction_factor}});
  return nlohmann::json{{"eps", rep.eps},
                        {"converged", rep.converged},
                        {"iterations", its},
                        {"norm_Z_12eps", rep.norm_Z_12eps},
                        {"norm_X_inf", rep.norm_X_inf},
                        {"norm_ell_inf", rep.norm_ell_inf},
                        {"residual_final", rep.residual_final},
                        {"surjective_suspect", rep.surjective_suspect}};
}

}  // namespace adiaflow
