#include "adiaflow/tangent_field.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "adiaflow/errors.hpp"
#include "adiaflow/flows.hpp"

namespace adiaflow {

TangentField zero_field(const TimeGrid& grid, int dim) {
  TangentField Z;
  Z.grid = grid;
  Z.X.assign(grid.N + 1, Eigen::VectorXd::Zero(dim));
  Z.ell.assign(grid.N + 1, 0.0);
  return Z;
}

Eigen::VectorXd node_weights(const TimeGrid& grid) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(grid.N + 1, grid.ds);
  w(0) = 0.5 * grid.ds;
  w(grid.N) = 0.5 * grid.ds;
  return w;
}

double norm_02_eps(const TangentField& Z, double eps) {
  const Eigen::VectorXd w = node_weights(Z.grid);
  double acc = 0.0;
  for (int j = 0; j <= Z.grid.N; ++j)
    acc += w(j) * (Z.X[j].squaredNorm() + eps * eps * Z.ell[j] * Z.ell[j]);
  return std::sqrt(acc);
}

double norm_0inf_eps(const TangentField& Z, double eps) {
  double mx = 0.0, ml = 0.0;
  for (int j = 0; j <= Z.grid.N; ++j) {
    mx = std::max(mx, Z.X[j].norm());
    ml = std::max(ml, std::abs(Z.ell[j]));
  }
  return mx + eps * ml;
}

double norm_12_eps(const TangentField& Z, double eps) {
  const double n0 = norm_02_eps(Z, eps);
  double acc = 0.0;
  const double ds = Z.grid.ds;
  for (int j = 0; j < Z.grid.N; ++j) {
    const double dx2 = ((Z.X[j + 1] - Z.X[j]) / ds).squaredNorm();
    const double dl = (Z.ell[j + 1] - Z.ell[j]) / ds;
    acc += ds * (dx2 + eps * eps * dl * dl);
  }
  return std::sqrt(n0 * n0 + acc);
}

TangentField random_smooth_field(const TimeGrid& grid, int dim, Rng& rng, double amplitude,
                                 int modes) {
  TangentField Z = zero_field(grid, dim);
  std::vector<Eigen::VectorXd> vk(modes);
  std::vector<double> bk(modes);
  for (int k = 0; k < modes; ++k) {
    const double scale = amplitude / double((k + 1) * (k + 1));
    vk[k] = scale * rng.normal_vec(dim);
    bk[k] = scale * rng.normal();
  }
  const double pi = std::acos(-1.0);
  for (int j = 0; j <= grid.N; ++j) {
    const double t = (grid.s(j) + grid.T) / (2.0 * grid.T);
    for (int k = 0; k < modes; ++k) {
      const double basis = std::sin((k + 1) * pi * t);
      Z.X[j] += basis * vk[k];
      Z.ell[j] += basis * bk[k];
    }
  }
  return Z;
}

TangentField random_tangent_field(const ProblemSetup& p, BasePath& path, Rng& rng,
                                  double amplitude, int modes) {
  ensure_path_caches(p, path);
  TangentField Z = random_smooth_field(path.grid, p.dim, rng, amplitude, modes);
  for (int j = 0; j <= path.grid.N; ++j) {
    const Eigen::VectorXd& u = path.frames[j].normal_u;
    Z.X[j] -= u.dot(Z.X[j]) * u;
    Z.ell[j] = 0.0;
  }
  return Z;
}

Eigen::VectorXd flatten_extended(const TangentField& Z) {
  const int dim = static_cast<int>(Z.X[0].size());
  Eigen::VectorXd v((Z.grid.N + 1) * (dim + 1));
  for (int j = 0; j <= Z.grid.N; ++j) {
    v.segment(j * (dim + 1), dim) = Z.X[j];
    v(j * (dim + 1) + dim) = Z.ell[j];
  }
  return v;
}

TangentField unflatten_extended(const TimeGrid& grid, int dim, const Eigen::VectorXd& v) {
  if (v.size() != (grid.N + 1) * (dim + 1))
    throw ConfigError("unflatten_extended: size mismatch");
  TangentField Z = zero_field(grid, dim);
  for (int j = 0; j <= grid.N; ++j) {
    Z.X[j] = v.segment(j * (dim + 1), dim);
    Z.ell[j] = v(j * (dim + 1) + dim);
  }
  return Z;
}

Eigen::VectorXd frame_coordinates(const ProblemSetup& p, BasePath& path, const TangentField& Z,
                                  double tangency_tol) {
  ensure_path_caches(p, path);
  const int m = p.dim;
  Eigen::VectorXd c((path.grid.N + 1) * (m - 1));
  for (int j = 0; j <= path.grid.N; ++j) {
    const SurfaceFrame& fr = path.frames[j];
    const double nor = std::abs(fr.normal_u.dot(Z.X[j]));
    if (nor > tangency_tol * std::max(1.0, Z.X[j].norm()))
      throw NotTangent("frame_coordinates: node value has a normal component");
    c.segment(j * (m - 1), m - 1) = fr.frame.transpose() * Z.X[j];
  }
  return c;
}

TangentField from_frame_coordinates(const ProblemSetup& p, BasePath& path,
                                    const Eigen::VectorXd& coords) {
  ensure_path_caches(p, path);
  const int m = p.dim;
  if (coords.size() != (path.grid.N + 1) * (m - 1))
    throw ConfigError("from_frame_coordinates: size mismatch");
  TangentField Z = zero_field(path.grid, m);
  for (int j = 0; j <= path.grid.N; ++j)
    Z.X[j] = path.frames[j].frame * coords.segment(j * (m - 1), m - 1);
  return Z;
}

}  // namespace adiaflow
