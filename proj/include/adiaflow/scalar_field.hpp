#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "adiaflow/errors.hpp"

namespace adiaflow {

struct Monomial {
  std::vector<int> exps;  // one exponent per coordinate, all >= 0
  double coef = 0.0;
};

struct DerivativeCheckReport {
  int n_points = 0;
  double max_grad_dev = 0.0;
  double max_hess_dev = 0.0;
  Eigen::VectorXd worst_point;
  bool passed = false;
};

// Immutable scalar field on R^m with exact derivatives for polynomials and
// finite-difference derivatives for callback fields. Thread safe after
// construction.
class ScalarField {
 public:
  using Callback = std::function<double(const Eigen::VectorXd&)>;
  using GradCallback = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  ScalarField() = default;  // empty field; usable only after assignment

  static ScalarField polynomial(int dim, std::vector<Monomial> monomials);
  // Optional analytic gradient; when absent, grad/hess come from central
  // differences. Callback fields are for exploration only, not for the
  // acceptance problems.
  static ScalarField callback(int dim, Callback f, GradCallback grad = nullptr,
                              double fd_step = 1e-6);

  int dim() const { return dim_; }
  bool is_polynomial() const { return !monomials_.empty() || callback_ == nullptr; }
  double fd_step() const { return fd_step_; }
  const std::vector<Monomial>& monomials() const { return monomials_; }

  double eval(const Eigen::VectorXd& p) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& p) const;
  Eigen::MatrixXd hess(const Eigen::VectorXd& p) const;

  // Compares analytic against finite-difference derivatives at random points in
  // [lo,hi]^m. Throws CheckFailed (with the worst point attached) if the
  // deviation exceeds tol.
  DerivativeCheckReport derivative_check(int n_points, double tol, std::uint64_t seed,
                                         double lo = -1.5, double hi = 1.5) const;

  static ScalarField from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;  // polynomial fields only

 private:
  Eigen::VectorXd fd_grad(const Eigen::VectorXd& p, double h) const;
  Eigen::MatrixXd fd_hess(const Eigen::VectorXd& p, double h) const;

  int dim_ = 0;
  std::vector<Monomial> monomials_;
  Callback callback_;
  GradCallback grad_callback_;
  double fd_step_ = 1e-6;
};

}  // namespace adiaflow
