#include "adiaflow/linops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "adiaflow/errors.hpp"
#include "adiaflow/flows.hpp"
#include "adiaflow/surface.hpp"

namespace adiaflow {

double LinearOperator::cod_norm_cells(const Eigen::VectorXd& y) const {
  const int n_cells = rows() - n_end_left - n_end_right;
  double acc = 0.0;
  for (int i = 0; i < n_cells; ++i) acc += w_cod(i) * y(i) * y(i);
  return std::sqrt(acc);
}

namespace {

// Signed end-mode rows of a symmetric matrix: eigenvectors with positive
// eigenvalue for the left end, negative for the right. Near-zero eigenvalues
// mean the asymptotic system is degenerate.
Eigen::MatrixXd signed_mode_rows(const Eigen::MatrixXd& M, bool positive, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const double rad = es.eigenvalues().cwiseAbs().maxCoeff();
  std::vector<int> keep;
  for (int k = 0; k < M.rows(); ++k) {
    const double lam = es.eigenvalues()(k);
    if (std::abs(lam) < 1e-10 * rad)
      throw IllConditioned(std::string(what) + ": degenerate end spectrum");
    if ((positive && lam > 0.0) || (!positive && lam < 0.0)) keep.push_back(k);
  }
  Eigen::MatrixXd rows(static_cast<int>(keep.size()), M.rows());
  for (size_t r = 0; r < keep.size(); ++r)
    rows.row(static_cast<int>(r)) = es.eigenvectors().col(keep[r]).transpose();
  return rows;
}

Eigen::MatrixXd ambient_hessian(const ProblemSetup& p, const Eigen::VectorXd& q, double tau) {
  return p.F.hess(q) + tau * p.H.hess(q);
}

}  // namespace

LinearOperator assemble_base_operator(const ProblemSetup& p, BasePath& path) {
  ensure_path_caches(p, path);
  const int m = p.dim;
  const int k = m - 1;
  const int N = path.grid.N;

  LinearOperator op;
  op.kind = OperatorKind::base;
  op.grid = path.grid;
  op.dim = m;

  // End rows from the restricted Hessian in the end-node frames.
  auto end_matrix = [&](int node) {
    const SurfaceFrame& fr = path.frames[node];
    Eigen::MatrixXd W = ambient_hessian(p, fr.q, fr.chi);
    Eigen::MatrixXd M = fr.frame.transpose() * W * fr.frame;
    return Eigen::MatrixXd(0.5 * (M + M.transpose()));
  };
  Eigen::MatrixXd left_rows = signed_mode_rows(end_matrix(0), true, "assemble_base_operator");
  Eigen::MatrixXd right_rows = signed_mode_rows(end_matrix(N), false, "assemble_base_operator");
  op.n_end_left = static_cast<int>(left_rows.rows());
  op.n_end_right = static_cast<int>(right_rows.rows());

  const int n_rows = N * k + op.n_end_left + op.n_end_right;
  const int n_cols = (N + 1) * k;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(N) * 2 * k * k + static_cast<size_t>(m) * k);

  const double inv_ds = 1.0 / path.grid.ds;
  for (int j = 0; j < N; ++j) {
    const SurfaceFrame& mid = path.frames_mid[j];
    Eigen::MatrixXd W = ambient_hessian(p, mid.q, mid.chi);
    Eigen::MatrixXd PT = mid.frame.transpose();  // k x m
    Eigen::MatrixXd block_j =
        PT * (0.5 * W * path.frames[j].frame) - inv_ds * (PT * path.frames[j].frame);
    Eigen::MatrixXd block_j1 =
        PT * (0.5 * W * path.frames[j + 1].frame) + inv_ds * (PT * path.frames[j + 1].frame);
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) {
        trips.emplace_back(j * k + r, j * k + c, block_j(r, c));
        trips.emplace_back(j * k + r, (j + 1) * k + c, block_j1(r, c));
      }
  }
  int row = N * k;
  for (int r = 0; r < op.n_end_left; ++r, ++row)
    for (int c = 0; c < k; ++c) trips.emplace_back(row, c, left_rows(r, c));
  for (int r = 0; r < op.n_end_right; ++r, ++row)
    for (int c = 0; c < k; ++c) trips.emplace_back(row, N * k + c, right_rows(r, c));

  op.A.resize(n_rows, n_cols);
  op.A.setFromTriplets(trips.begin(), trips.end());
  op.A.makeCompressed();

  const Eigen::VectorXd w_node = node_weights(path.grid);
  op.w_dom.resize(n_cols);
  for (int j = 0; j <= N; ++j) op.w_dom.segment(j * k, k).setConstant(w_node(j));
  op.w_cod.resize(n_rows);
  op.w_cod.head(N * k).setConstant(path.grid.ds);
  op.w_cod.tail(op.n_end_left + op.n_end_right).setOnes();
  return op;
}

LinearOperator assemble_extended_operator(const ProblemSetup& p, BasePath& path, double eps) {
  if (!(eps > 0.0)) throw ConfigError("assemble_extended_operator: eps must be positive");
  ensure_path_caches(p, path);
  const int m = p.dim;
  const int b = m + 1;
  const int N = path.grid.N;

  LinearOperator op;
  op.kind = OperatorKind::extended;
  op.eps = eps;
  op.grid = path.grid;
  op.dim = m;

  // Symmetrized extended end Hessian [[W, g/eps], [g^T/eps, 0]]; its signed
  // eigenvectors give the asymptotic rows after rescaling the multiplier slot.
  auto end_rows = [&](int node, bool positive) {
    const SurfaceFrame& fr = path.frames[node];
    Eigen::MatrixXd M(b, b);
    M.topLeftCorner(m, m) = ambient_hessian(p, fr.q, fr.chi);
    M.topRightCorner(m, 1) = fr.grad_H / eps;
    M.bottomLeftCorner(1, m) = fr.grad_H.transpose() / eps;
    M(m, m) = 0.0;
    Eigen::MatrixXd rows = signed_mode_rows(M, positive, "assemble_extended_operator");
    rows.col(m) *= eps;
    return rows;
  };
  Eigen::MatrixXd left_rows = end_rows(0, true);
  Eigen::MatrixXd right_rows = end_rows(N, false);
  op.n_end_left = static_cast<int>(left_rows.rows());
  op.n_end_right = static_cast<int>(right_rows.rows());

  const int n_rows = N * b + op.n_end_left + op.n_end_right;
  const int n_cols = (N + 1) * b;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(N) * 2 * b * b + 2 * static_cast<size_t>(b) * b);

  const double inv_ds = 1.0 / path.grid.ds;
  const double inv_eps2 = 1.0 / (eps * eps);
  for (int j = 0; j < N; ++j) {
    const SurfaceFrame& mid = path.frames_mid[j];
    Eigen::MatrixXd W = ambient_hessian(p, mid.q, mid.chi);
    const Eigen::VectorXd& g = mid.grad_H;
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
  int row = N * b;
  for (int r = 0; r < op.n_end_left; ++r, ++row)
    for (int c = 0; c < b; ++c) trips.emplace_back(row, c, left_rows(r, c));
  for (int r = 0; r < op.n_end_right; ++r, ++row)
    for (int c = 0; c < b; ++c) trips.emplace_back(row, N * b + c, right_rows(r, c));

  op.A.resize(n_rows, n_cols);
  op.A.setFromTriplets(trips.begin(), trips.end());
  op.A.makeCompressed();

  const Eigen::VectorXd w_node = node_weights(path.grid);
  op.w_dom.resize(n_cols);
  for (int j = 0; j <= N; ++j) {
    op.w_dom.segment(j * b, m).setConstant(w_node(j));
    op.w_dom(j * b + m) = w_node(j) * eps * eps;
  }
  op.w_cod.resize(n_rows);
  for (int j = 0; j < N; ++j) {
    op.w_cod.segment(j * b, m).setConstant(path.grid.ds);
    op.w_cod(j * b + m) = path.grid.ds * eps * eps;
  }
  op.w_cod.tail(op.n_end_left + op.n_end_right).setOnes();
  return op;
}

namespace {

template <typename Get>
auto central_diff(const TimeGrid& grid, int j, Get&& value) -> decltype(value(0)) {
  if (j == 0) return (value(1) - value(0)) / grid.ds;
  if (j == grid.N) return (value(grid.N) - value(grid.N - 1)) / grid.ds;
  return (value(j + 1) - value(j - 1)) / (2.0 * grid.ds);
}

}  // namespace

TangentField apply_base_continuum(const ProblemSetup& p, BasePath& path, const TangentField& xi,
                                  bool adjoint, bool ambient_form) {
  ensure_path_caches(p, path);
  const int m = p.dim;
  TangentField out = zero_field(path.grid, m);
  const double sign = adjoint ? -1.0 : 1.0;
  for (int j = 0; j <= path.grid.N; ++j) {
    const SurfaceFrame& fr = path.frames[j];
    Eigen::VectorXd d = central_diff(path.grid, j, [&](int k) { return xi.X[k]; });
    Eigen::MatrixXd W = ambient_hessian(p, fr.q, fr.chi);
    if (ambient_form && adjoint) {
      Eigen::VectorXd t = central_diff(path.grid, j, [&](int k) { return path.q[k]; });
      t -= t.dot(fr.normal_u) * fr.normal_u;
      Eigen::VectorXd v = -d + W * xi.X[j] + fr.grad_chi.dot(xi.X[j]) * fr.grad_H +
                          2.0 * second_fundamental_form(p, fr.q, xi.X[j], t);
      out.X[j] = v;
    } else {
      Eigen::VectorXd v = sign * d + W * xi.X[j];
      out.X[j] = v - v.dot(fr.normal_u) * fr.normal_u;
    }
  }
  return out;
}

TangentField apply_extended_continuum(const ProblemSetup& p, BasePath& path,
                                      const TangentField& Z, double eps, bool adjoint) {
  ensure_path_caches(p, path);
  const int m = p.dim;
  TangentField out = zero_field(path.grid, m);
  const double sign = adjoint ? -1.0 : 1.0;
  const double inv_eps2 = 1.0 / (eps * eps);
  for (int j = 0; j <= path.grid.N; ++j) {
    const SurfaceFrame& fr = path.frames[j];
    Eigen::VectorXd dX = central_diff(path.grid, j, [&](int k) { return Z.X[k]; });
    const double dl = central_diff(path.grid, j, [&](int k) { return Z.ell[k]; });
    Eigen::MatrixXd W = ambient_hessian(p, fr.q, fr.chi);
    out.X[j] = sign * dX + W * Z.X[j] + Z.ell[j] * fr.grad_H;
    out.ell[j] = sign * dl + inv_eps2 * fr.grad_H.dot(Z.X[j]);
  }
  return out;
}

TangentField project_pi_eps(const ProblemSetup& p, BasePath& path, const TangentField& Z,
                            double eps, double alpha, double beta) {
  ensure_path_caches(p, path);
  const int m = p.dim;
  TangentField out = zero_field(path.grid, m);
  const double ea = std::pow(eps, alpha);
  const double eb = std::pow(eps, beta);
  for (int j = 0; j <= path.grid.N; ++j) {
    const SurfaceFrame& fr = path.frames[j];
    Eigen::VectorXd v = Z.X[j] - fr.normal_u.dot(Z.X[j]) * fr.normal_u;
    v += eb * Z.ell[j] * fr.grad_chi;
    if (fr.mu > 1e-14) {
      const double t = ea * fr.mu * fr.mu;
      Eigen::VectorXd ghat = fr.grad_chi / fr.mu;
      v -= (t / (1.0 + t)) * ghat.dot(v) * ghat;
    }
    out.X[j] = v;
  }
  return out;
}

TangentField embed_graph(const ProblemSetup& p, BasePath& path, const TangentField& xi) {
  ensure_path_caches(p, path);
  TangentField out = xi;
  for (int j = 0; j <= path.grid.N; ++j) out.ell[j] = path.frames[j].grad_chi.dot(xi.X[j]);
  return out;
}

FiberNorms fiber_norms(const SurfaceFrame& fr, double eps, double alpha) {
  const int k = static_cast<int>(fr.frame.cols());
  FiberNorms out;
  const double mu = fr.mu;
  const double t = std::pow(eps, alpha) * mu * mu;
  out.binv_closed = (k == 1 && mu > 1e-14) ? 1.0 / (1.0 + t) : 1.0;
  out.binv_p_closed = (mu > 1e-14) ? 1.0 / (1.0 + t) : 0.0;
  out.mixed_half = std::pow(eps, 0.5 * alpha) * mu / (1.0 + t);
  out.saturation = t / (1.0 + t);

  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(k, k);
  if (mu > 1e-14) {
    Eigen::VectorXd gh = fr.frame.transpose() * (fr.grad_chi / mu);
    P = gh * gh.transpose();
    B += t * P;
  }
  Eigen::MatrixXd Binv = B.inverse();
  out.binv_numeric = Binv.jacobiSvd().singularValues()(0);
  out.binv_p_numeric = Eigen::MatrixXd(Binv * P).jacobiSvd().singularValues()(0);
  return out;
}

FredholmReport fredholm_index_estimate(const LinearOperator& op, double rank_tol) {
  Eigen::MatrixXd Ad = Eigen::MatrixXd(op.A);
  Eigen::VectorXd sc = op.w_cod.cwiseSqrt();
  Eigen::VectorXd sd = op.w_dom.cwiseSqrt();
  Eigen::MatrixXd At = sc.asDiagonal() * Ad * sd.cwiseInverse().asDiagonal();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(At, Eigen::ComputeFullV);
  const Eigen::VectorXd& sig = svd.singularValues();
  FredholmReport rep;
  rep.sigma_max = sig.size() > 0 ? sig(0) : 0.0;
  if (rep.sigma_max <= 0.0) throw IllConditioned("fredholm_index_estimate: zero operator");

  const double thresh = rank_tol * rep.sigma_max;
  int r = 0;
  while (r < sig.size() && sig(r) >= thresh) ++r;
  rep.smallest_kept = r > 0 ? sig(r - 1) : 0.0;
  rep.largest_dropped = r < sig.size() ? sig(r) : 0.0;
  if (rep.largest_dropped > 0.0 && rep.smallest_kept / rep.largest_dropped < 10.0)
    throw IllConditioned("fredholm_index_estimate: rank threshold falls inside a cluster");

  rep.dim_ker = op.cols() - r;
  rep.dim_coker = op.rows() - r;
  rep.index = rep.dim_ker - rep.dim_coker;
  if (rep.dim_ker > 0) {
    // smallest right singular direction, unweighted coordinates
    Eigen::VectorXd v = svd.matrixV().col(op.cols() - 1);
    rep.kernel_vector = sd.cwiseInverse().asDiagonal() * v;
  }
  return rep;
}

}  // namespace adiaflow
