#include "adiaflow/probes.hpp"

#include <cmath>
#include <functional>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "adiaflow/errors.hpp"
#include "adiaflow/flows.hpp"
#include "adiaflow/tangent_field.hpp"

namespace adiaflow {

namespace {

double l2w_vec(const TimeGrid& g, const std::vector<Eigen::VectorXd>& v) {
  const Eigen::VectorXd w = node_weights(g);
  double acc = 0.0;
  for (int j = 0; j <= g.N; ++j) acc += w(j) * v[j].squaredNorm();
  return std::sqrt(acc);
}

double l2w_scalar(const TimeGrid& g, const std::vector<double>& v) {
  const Eigen::VectorXd w = node_weights(g);
  double acc = 0.0;
  for (int j = 0; j <= g.N; ++j) acc += w(j) * v[j] * v[j];
  return std::sqrt(acc);
}

double cell_deriv_norm_vec(const TimeGrid& g, const std::vector<Eigen::VectorXd>& v) {
  double acc = 0.0;
  for (int j = 0; j < g.N; ++j) acc += ((v[j + 1] - v[j]) / g.ds).squaredNorm() * g.ds;
  return std::sqrt(acc);
}

double cell_deriv_norm_scalar(const TimeGrid& g, const std::vector<double>& v) {
  double acc = 0.0;
  for (int j = 0; j < g.N; ++j) {
    const double d = (v[j + 1] - v[j]) / g.ds;
    acc += d * d * g.ds;
  }
  return std::sqrt(acc);
}

double norm_02_eps_nodes(const TimeGrid& g, const TangentField& Z, double eps) {
  const Eigen::VectorXd w = node_weights(g);
  double acc = 0.0;
  for (int j = 0; j <= g.N; ++j)
    acc += w(j) * (Z.X[j].squaredNorm() + eps * eps * Z.ell[j] * Z.ell[j]);
  return std::sqrt(acc);
}

struct ProbeContext {
  const ProblemSetup& p;
  BasePath& path;
  double eps;
  double alpha, beta;
  Rng rng;
};

// constraint pairing dH X, multiplier, and derivative pieces of a field
struct Components {
  double dHX = 0.0, ell = 0.0, dX = 0.0, dell = 0.0;
};

Components field_components(const ProblemSetup& p, BasePath& path, const TangentField& Z) {
  ensure_path_caches(p, path);
  const TimeGrid& g = path.grid;
  std::vector<Eigen::VectorXd> dhx(g.N + 1);
  for (int j = 0; j <= g.N; ++j) {
    Eigen::VectorXd v(1);
    v << path.frames[j].grad_H.dot(Z.X[j]);
    dhx[j] = v;
  }
  Components c;
  c.dHX = l2w_vec(g, dhx);
  c.ell = l2w_scalar(g, Z.ell);
  c.dX = cell_deriv_norm_vec(g, Z.X);
  c.dell = cell_deriv_norm_scalar(g, Z.ell);
  return c;
}

double probe_ratio(const std::string& id, ProbeContext& ctx) {
  const ProblemSetup& p = ctx.p;
  BasePath& path = ctx.path;
  const double eps = ctx.eps;

  if (id == "sobolev") {
    TangentField Z = random_smooth_field(path.grid, p.dim, ctx.rng);
    return std::sqrt(eps) * norm_0inf_eps(Z, eps) / (3.0 * norm_12_eps(Z, eps));
  }
  if (id == "ambient" || id == "ambient_adjoint") {
    TangentField Z = random_smooth_field(path.grid, p.dim, ctx.rng);
    TangentField R = apply_extended_continuum(p, path, Z, eps, id == "ambient_adjoint");
    Components c = field_components(p, path, Z);
    const double lhs = c.dHX / eps + c.ell + c.dX + eps * c.dell;
    const double rhs = norm_02_eps_nodes(path.grid, R, eps) + l2w_vec(path.grid, Z.X);
    return lhs / rhs;
  }
  if (id == "range_12" || id == "range_pi" || id == "range_components") {
    TangentField W = random_smooth_field(path.grid, p.dim, ctx.rng);
    TangentField Zs = apply_extended_continuum(p, path, W, eps, true);
    TangentField DZs = apply_extended_continuum(p, path, Zs, eps, false);
    const double dn = norm_02_eps_nodes(path.grid, DZs, eps);
    if (id == "range_12")
      return (std::sqrt(eps) * norm_0inf_eps(Zs, eps) + norm_12_eps(Zs, eps)) / dn;
    if (id == "range_pi") {
      TangentField piD = project_pi_eps(p, path, DZs, eps, ctx.alpha, ctx.beta);
      return norm_12_eps(Zs, eps) / (eps * dn + l2w_vec(path.grid, piD.X));
    }
    Components c = field_components(p, path, Zs);
    const double lhs = c.dHX + eps * c.ell + eps * c.dX + eps * eps * c.dell;
    return lhs / (3.0 * eps * dn);
  }
  if (id == "difference") {
    TangentField Z = random_smooth_field(path.grid, p.dim, ctx.rng);
    TangentField piZ = project_pi_eps(p, path, Z, eps, ctx.alpha, ctx.beta);
    TangentField lhs1 = apply_base_continuum(p, path, piZ, true);
    TangentField adjZ = apply_extended_continuum(p, path, Z, eps, true);
    TangentField lhs2 = project_pi_eps(p, path, adjZ, eps, ctx.alpha, ctx.beta);
    std::vector<Eigen::VectorXd> diff(path.grid.N + 1);
    std::vector<Eigen::VectorXd> tanX(path.grid.N + 1);
    for (int j = 0; j <= path.grid.N; ++j) {
      diff[j] = lhs1.X[j] - lhs2.X[j];
      const Eigen::VectorXd& u = path.frames[j].normal_u;
      tanX[j] = Z.X[j] - u.dot(Z.X[j]) * u;
    }
    Components c = field_components(p, path, Z);
    const double rhs =
        eps * (c.dHX / eps + std::pow(eps, ctx.alpha - 1.0) * l2w_vec(path.grid, tanX) +
               eps * c.ell);
    return l2w_vec(path.grid, diff) / rhs;
  }
  if (id == "embedding") {
    TangentField Z = random_smooth_field(path.grid, p.dim, ctx.rng);
    TangentField piZ = project_pi_eps(p, path, Z, eps, ctx.alpha, ctx.beta);
    TangentField IZ = embed_graph(p, path, piZ);
    return norm_02_eps_nodes(path.grid, IZ, eps) / (2.0 * norm_02_eps_nodes(path.grid, Z, eps));
  }
  if (id == "pi_identity") {
    TangentField xi = random_tangent_field(p, path, ctx.rng);
    TangentField back = project_pi_eps(p, path, embed_graph(p, path, xi), eps, ctx.alpha,
                                       ctx.beta);
    double dev = 0.0;
    for (int j = 0; j <= path.grid.N; ++j)
      dev = std::max(dev, (back.X[j] - xi.X[j]).norm() / std::max(1.0, xi.X[j].norm()));
    return dev;
  }
  if (id == "b_inverse") {
    ensure_path_caches(p, path);
    double worst = 0.0;
    for (int j = 0; j <= path.grid.N; ++j) {
      FiberNorms fn = fiber_norms(path.frames[j], eps, ctx.alpha);
      worst = std::max({worst, fn.binv_numeric, fn.binv_p_numeric});
    }
    return worst;
  }
  throw ConfigError("run_probe: unknown inequality id '" + id + "'");
}

}  // namespace

std::vector<std::string> probe_ids() {
  return {"sobolev",   "ambient",    "ambient_adjoint", "range_12",    "range_pi",
          "range_components", "difference", "embedding",       "pi_identity", "b_inverse"};
}

ProbeResult run_probe(const ProblemSetup& p, BasePath& path, const std::string& id,
                      const std::vector<double>& eps_values, int n_fields, Rng& rng,
                      double alpha, double beta) {
  if (eps_values.empty()) throw ConfigError("run_probe: empty eps list");
  if (n_fields < 1) throw ConfigError("run_probe: need at least one field");
  ProbeResult res;
  res.inequality_id = id;
  res.eps_values = eps_values;
  res.fields_tested = n_fields;
  for (size_t e = 0; e < eps_values.size(); ++e) {
    double worst = 0.0;
    const int reps = (id == "b_inverse") ? 1 : n_fields;  // field-free probe
    for (int f = 0; f < reps; ++f) {
      ProbeContext ctx{p, path, eps_values[e], alpha, beta,
                       rng.fork(1000 * (e + 1) + f)};
      worst = std::max(worst, probe_ratio(id, ctx));
    }
    res.max_ratio.push_back(worst);
  }
  return res;
}

nlohmann::json probe_to_json(const ProbeResult& r) {
  return nlohmann::json{{"inequality_id", r.inequality_id},
                        {"eps_values", r.eps_values},
                        {"max_ratio_per_eps", r.max_ratio},
                        {"fields_tested", r.fields_tested}};
}

}  // namespace adiaflow
