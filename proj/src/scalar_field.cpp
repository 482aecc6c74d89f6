#include "adiaflow/scalar_field.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "adiaflow/rng.hpp"

namespace adiaflow {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string(what) + ": non-finite value");
}

double pow_int(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

}  // namespace

ScalarField ScalarField::polynomial(int dim, std::vector<Monomial> monomials) {
  if (dim <= 0) throw ConfigError("ScalarField: dim must be positive");
  for (const auto& m : monomials) {
    if (static_cast<int>(m.exps.size()) != dim)
      throw ConfigError("ScalarField: monomial exponent count does not match dim");
    for (int e : m.exps)
      if (e < 0) throw ConfigError("ScalarField: negative exponent");
  }
  ScalarField f;
  f.dim_ = dim;
  f.monomials_ = std::move(monomials);
  if (f.monomials_.empty()) f.monomials_.push_back({std::vector<int>(dim, 0), 0.0});
  return f;
}

ScalarField ScalarField::callback(int dim, Callback fn, GradCallback grad, double fd_step) {
  if (dim <= 0) throw ConfigError("ScalarField: dim must be positive");
  if (!fn) throw ConfigError("ScalarField: null callback");
  ScalarField f;
  f.dim_ = dim;
  f.callback_ = std::move(fn);
  f.grad_callback_ = std::move(grad);
  f.fd_step_ = fd_step;
  return f;
}

double ScalarField::eval(const Eigen::VectorXd& p) const {
  if (p.size() != dim_) throw ConfigError("ScalarField::eval: wrong dimension");
  double v = 0.0;
  if (is_polynomial()) {
    for (const auto& m : monomials_) {
      double t = m.coef;
      for (int i = 0; i < dim_; ++i) t *= pow_int(p[i], m.exps[i]);
      v += t;
    }
  } else {
    v = callback_(p);
  }
  require_finite(v, "ScalarField::eval");
  return v;
}

Eigen::VectorXd ScalarField::grad(const Eigen::VectorXd& p) const {
  if (p.size() != dim_) throw ConfigError("ScalarField::grad: wrong dimension");
  if (is_polynomial()) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
    for (const auto& m : monomials_) {
      for (int i = 0; i < dim_; ++i) {
        if (m.exps[i] == 0) continue;
        double t = m.coef * m.exps[i] * pow_int(p[i], m.exps[i] - 1);
        for (int k = 0; k < dim_; ++k)
          if (k != i) t *= pow_int(p[k], m.exps[k]);
        g[i] += t;
      }
    }
    require_finite(g.sum(), "ScalarField::grad");
    return g;
  }
  if (grad_callback_) {
    Eigen::VectorXd g = grad_callback_(p);
    if (g.size() != dim_) throw NumericalError("ScalarField::grad: callback returned wrong size");
    return g;
  }
  return fd_grad(p, fd_step_);
}

Eigen::MatrixXd ScalarField::hess(const Eigen::VectorXd& p) const {
  if (p.size() != dim_) throw ConfigError("ScalarField::hess: wrong dimension");
  if (is_polynomial()) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const auto& m : monomials_) {
      for (int i = 0; i < dim_; ++i) {
        if (m.exps[i] == 0) continue;
        // diagonal term d^2/dx_i^2
        if (m.exps[i] >= 2) {
          double t = m.coef * m.exps[i] * (m.exps[i] - 1) * pow_int(p[i], m.exps[i] - 2);
          for (int k = 0; k < dim_; ++k)
            if (k != i) t *= pow_int(p[k], m.exps[k]);
          h(i, i) += t;
        }
        // mixed terms, filled symmetrically from one product so h == h^T exactly
        for (int j = i + 1; j < dim_; ++j) {
          if (m.exps[j] == 0) continue;
          double t = m.coef * m.exps[i] * m.exps[j] * pow_int(p[i], m.exps[i] - 1) *
                     pow_int(p[j], m.exps[j] - 1);
          for (int k = 0; k < dim_; ++k)
            if (k != i && k != j) t *= pow_int(p[k], m.exps[k]);
          h(i, j) += t;
          h(j, i) += t;
        }
      }
    }
    return h;
  }
  // Second derivatives need a wider stencil step than gradients before roundoff
  // takes over: error ~ h^2 + eps_mach/h^2, optimal near eps^(1/4).
  double h2 = std::max(fd_step_, std::pow(std::numeric_limits<double>::epsilon(), 0.25));
  return fd_hess(p, h2);
}

Eigen::VectorXd ScalarField::fd_grad(const Eigen::VectorXd& p, double h) const {
  Eigen::VectorXd g(dim_);
  Eigen::VectorXd q = p;
  for (int i = 0; i < dim_; ++i) {
    q[i] = p[i] + h;
    double fp = eval(q);
    q[i] = p[i] - h;
    double fm = eval(q);
    q[i] = p[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd ScalarField::fd_hess(const Eigen::VectorXd& p, double h) const {
  Eigen::MatrixXd m(dim_, dim_);
  double f0 = eval(p);
  Eigen::VectorXd q = p;
  for (int i = 0; i < dim_; ++i) {
    q[i] = p[i] + h;
    double fp = eval(q);
    q[i] = p[i] - h;
    double fm = eval(q);
    q[i] = p[i];
    m(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
  }
  for (int i = 0; i < dim_; ++i) {
    for (int j = i + 1; j < dim_; ++j) {
      q[i] = p[i] + h;
      q[j] = p[j] + h;
      double fpp = eval(q);
      q[j] = p[j] - h;
      double fpm = eval(q);
      q[i] = p[i] - h;
      double fmm = eval(q);
      q[j] = p[j] + h;
      double fmp = eval(q);
      q[i] = p[i];
      q[j] = p[j];
      double v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

DerivativeCheckReport ScalarField::derivative_check(int n_points, double tol,
                                                    std::uint64_t seed, double lo,
                                                    double hi) const {
  DerivativeCheckReport rep;
  rep.n_points = n_points;
  Rng rng(seed);
  double h = is_polynomial() ? fd_step_ : fd_step_;
  double h2 = std::max(h, std::pow(std::numeric_limits<double>::epsilon(), 0.25));
  for (int k = 0; k < n_points; ++k) {
    Eigen::VectorXd p(dim_);
    for (int i = 0; i < dim_; ++i) p[i] = rng.uniform(lo, hi);
    double gd = (grad(p) - fd_grad(p, h)).lpNorm<Eigen::Infinity>();
    double hd = (hess(p) - fd_hess(p, h2)).lpNorm<Eigen::Infinity>();
    double dev = std::max(gd, hd);
    if (dev > std::max(rep.max_grad_dev, rep.max_hess_dev)) rep.worst_point = p;
    rep.max_grad_dev = std::max(rep.max_grad_dev, gd);
    rep.max_hess_dev = std::max(rep.max_hess_dev, hd);
  }
  if (rep.worst_point.size() == 0) rep.worst_point = Eigen::VectorXd::Zero(dim_);
  rep.passed = rep.max_grad_dev <= tol && rep.max_hess_dev <= tol;
  if (!rep.passed) {
    throw CheckFailed("derivative_check: analytic vs finite differences deviate by " +
                          std::to_string(std::max(rep.max_grad_dev, rep.max_hess_dev)),
                      rep.worst_point, std::max(rep.max_grad_dev, rep.max_hess_dev));
  }
  return rep;
}

ScalarField ScalarField::from_json(const nlohmann::json& j) {
  if (!j.contains("dim") || !j.contains("monomials"))
    throw ConfigError("ScalarField::from_json: need dim and monomials");
  int dim = j.at("dim").get<int>();
  std::vector<Monomial> ms;
  for (const auto& jm : j.at("monomials")) {
    Monomial m;
    m.exps = jm.at("exps").get<std::vector<int>>();
    m.coef = jm.at("coef").get<double>();
    ms.push_back(std::move(m));
  }
  return polynomial(dim, std::move(ms));
}

nlohmann::json ScalarField::to_json() const {
  if (!is_polynomial())
    throw ConfigError("ScalarField::to_json: callback fields are not serializable");
  nlohmann::json j;
  j["dim"] = dim_;
  j["monomials"] = nlohmann::json::array();
  for (const auto& m : monomials_) {
    j["monomials"].push_back({{"exps", m.exps}, {"coef", m.coef}});
  }
  return j;
}

}  // namespace adiaflow
