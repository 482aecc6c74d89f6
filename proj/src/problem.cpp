#include "adiaflow/problem.hpp"

namespace adiaflow {

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace

ProblemSetup make_circle() {
  ProblemSetup p;
  p.name = "circle";
  p.dim = 2;
  p.F = ScalarField::polynomial(2, {{{0, 1}, 1.0}, {{2, 0}, 0.1}});
  p.H = ScalarField::polynomial(2, {{{2, 0}, 1.0}, {{0, 2}, 1.0}, {{0, 0}, -1.0}});
  p.kappa = 0.5;
  // slow rate at the top is 0.8; a T=12 window ends at 1.857 e^{-9.6} = 1.26e-4
  p.boundary_tol = 2e-4;
  p.box_lo = vec2(-1.6, -1.6);
  p.box_hi = vec2(1.6, 1.6);
  return p;
}

ProblemSetup make_circle_unperturbed() {
  ProblemSetup p = make_circle();
  p.name = "circle-unperturbed";
  p.F = ScalarField::polynomial(2, {{{0, 1}, 1.0}});
  p.boundary_tol = 1e-4;
  return p;
}

ProblemSetup make_ellipse() {
  ProblemSetup p;
  p.name = "ellipse";
  p.dim = 2;
  p.F = ScalarField::polynomial(2, {{{0, 1}, 1.0}});
  p.H = ScalarField::polynomial(2, {{{2, 0}, 0.25}, {{0, 2}, 1.0}, {{0, 0}, -1.0}});
  p.kappa = 0.5;
  // tangential rates at the poles are +-1/4; a T=12 window ends at
  // 1.890 e^{-3} = 0.094 from the pair
  p.boundary_tol = 0.12;
  p.box_lo = vec2(-2.7, -1.6);
  p.box_hi = vec2(2.7, 1.6);
  return p;
}

ProblemSetup make_sphere() {
  ProblemSetup p;
  p.name = "sphere";
  p.dim = 3;
  p.F = ScalarField::polynomial(3, {{{0, 0, 1}, 1.0}});
  p.H = ScalarField::polynomial(
      3, {{{2, 0, 0}, 1.0}, {{0, 2, 0}, 1.0}, {{0, 0, 2}, 1.0}, {{0, 0, 0}, -1.0}});
  p.kappa = 0.5;
  p.box_lo = vec3(-1.6, -1.6, -1.6);
  p.box_hi = vec3(1.6, 1.6, 1.6);
  return p;
}

std::vector<BuiltinInfo> builtin_problems() {
  return {
      {"circle", 2, 2, "height plus 0.1 x^2 on the unit circle; index pair (1,0)"},
      {"ellipse", 2, 2, "height on x^2/4 + y^2 = 1; slow rates +-1/4 at the poles"},
      {"sphere", 3, 2, "height on the unit sphere; index difference 2, correction suites only"},
  };
}

std::optional<ProblemSetup> make_builtin(const std::string& name) {
  if (name == "circle") return make_circle();
  if (name == "ellipse") return make_ellipse();
  if (name == "sphere") return make_sphere();
  if (name == "circle-unperturbed") return make_circle_unperturbed();
  return std::nullopt;
}

}  // namespace adiaflow
