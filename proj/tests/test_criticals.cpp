#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "adiaflow/criticals.hpp"
#include "adiaflow/errors.hpp"
#include "adiaflow/problem.hpp"
#include "adiaflow/surface.hpp"

using namespace adiaflow;

namespace {

Eigen::VectorXd v2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("criticals");

TEST_CASE("circle critical set") {
  ProblemSetup p = make_circle();
  auto crits = find_critical_points(p);
  REQUIRE(crits.size() == 2);
  // sorted by descending f: top first
  CHECK((crits[0].x - v2(0.0, 1.0)).norm() <= 1e-9);
  CHECK((crits[1].x - v2(0.0, -1.0)).norm() <= 1e-9);
  CHECK(crits[0].tau == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(crits[1].tau == doctest::Approx(0.5).epsilon(1e-10));
  for (const auto& c : crits) {
    CHECK(grad_f_sigma(p, c.x).norm() <= 1e-10);
    CHECK(c.nondegenerate);
    verify_crit_correspondence(p, c);
  }
  CHECK(crits[0].index_f == 1);
  CHECK(crits[0].index_FH == 2);
  CHECK(crits[1].index_f == 0);
  CHECK(crits[1].index_FH == 1);
  // restricted Hessians: -0.8 at the top, +1.2 at the bottom
  CHECK(crits[0].hess_eigs_f[0] == doctest::Approx(-0.8).epsilon(1e-9));
  CHECK(crits[1].hess_eigs_f[0] == doctest::Approx(1.2).epsilon(1e-9));
}

TEST_CASE("unperturbed circle Hessians") {
  ProblemSetup p = make_circle_unperturbed();
  Eigen::MatrixXd top = hessian_f(p, v2(0.0, 1.0));
  CHECK(top(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  Eigen::MatrixXd bot = hessian_f(p, v2(0.0, -1.0));
  CHECK(bot(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  // extended Hessian at ((0,1), -1/2): Hess F vanishes for a linear objective,
  // so the block is -Id bordered by grad H = (0,2)
  Eigen::MatrixXd hFH = hessian_FH(p, v2(0.0, 1.0), -0.5);
  CHECK(hFH(0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(hFH(1, 1) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(hFH(1, 2) == doctest::Approx(2.0).epsilon(1e-14));
  auto [idx, nondeg] = morse_index(hFH);
  CHECK(idx == 2);
  CHECK(nondeg);
  auto crits = find_critical_points(p);
  REQUIRE(crits.size() == 2);
  CHECK(crits[0].index_FH == 2);
  CHECK(crits[1].index_FH == 1);
}

TEST_CASE("degenerate control: objective constant on the surface") {
  // F = x^2 + y^2 restricts to a constant on the circle; every surface point is
  // critical with restricted Hessian 0, and the report must flag degeneracy.
  ProblemSetup p = make_circle_unperturbed();
  p.F = ScalarField::polynomial(2, {{{2, 0}, 1.0}, {{0, 2}, 1.0}});
  Eigen::VectorXd q = retract_to_sigma(p, v2(0.6, 0.8001)).q;
  CHECK(grad_f_sigma(p, q).norm() <= 1e-10);
  Eigen::MatrixXd hf = hessian_f(p, q);
  auto [idx, nondeg] = morse_index(hf);
  CHECK(idx == 0);
  CHECK_FALSE(nondeg);
}

TEST_CASE("perturbed circle extended spectra") {
  ProblemSetup p = make_circle();
  // [[-0.8,0,0],[0,-1,2],[0,2,0]]: eigenvalues {-0.8, (-1+-sqrt(17))/2}
  Eigen::MatrixXd h = hessian_FH(p, v2(0.0, 1.0), -0.5);
  auto [idx, nondeg] = morse_index(h);
  CHECK(idx == 2);
  CHECK(nondeg);
  double lo = (-1.0 - std::sqrt(17.0)) / 2.0;
  double hi = (-1.0 + std::sqrt(17.0)) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  CHECK(es.eigenvalues()[0] == doctest::Approx(lo).epsilon(1e-12));
  CHECK(es.eigenvalues()[1] == doctest::Approx(-0.8).epsilon(1e-12));
  CHECK(es.eigenvalues()[2] == doctest::Approx(hi).epsilon(1e-12));
}

TEST_CASE("hessian_FH agrees with finite differences of the extended gradient") {
  ProblemSetup p = make_circle();
  Eigen::VectorXd x = v2(0.0, 1.0);
  double tau = -0.5;
  Eigen::MatrixXd h = hessian_FH(p, x, tau);
  // FD of (grad F + tau grad H, H) in (x, tau)
  const double eps = 1e-6;
  Eigen::MatrixXd fd(3, 3);
  auto extended_grad = [&](const Eigen::VectorXd& xx, double tt) {
    Eigen::VectorXd g(3);
    g.head(2) = p.F.grad(xx) + tt * p.H.grad(xx);
    g[2] = p.H.eval(xx);
    return g;
  };
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    double tp = tau, tm = tau;
    if (j < 2) {
      xp[j] += eps;
      xm[j] -= eps;
    } else {
      tp += eps;
      tm -= eps;
    }
    fd.col(j) = (extended_grad(xp, tp) - extended_grad(xm, tm)) / (2.0 * eps);
  }
  CHECK((h - fd).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("morse_index oracle cases") {
  Eigen::MatrixXd offdiag(2, 2);
  offdiag << 0.0, 2.0, 2.0, 0.0;
  auto [i1, n1] = morse_index(offdiag);
  CHECK(i1 == 1);
  CHECK(n1);

  Eigen::MatrixXd withzero = Eigen::MatrixXd::Zero(3, 3);
  withzero(1, 2) = 2.0;
  withzero(2, 1) = 2.0;
  auto [i2, n2] = morse_index(withzero);
  CHECK(i2 == 1);
  CHECK_FALSE(n2);
}

TEST_CASE("hessian_f refuses non-critical points") {
  ProblemSetup p = make_circle();
  Eigen::VectorXd q = retract_to_sigma(p, v2(0.7, 0.7)).q;
  CHECK_THROWS_AS(hessian_f(p, q), NotCritical);
}

TEST_CASE("ellipse critical set") {
  ProblemSetup p = make_ellipse();
  auto crits = find_critical_points(p);
  REQUIRE(crits.size() == 2);
  CHECK((crits[0].x - v2(0.0, 1.0)).norm() <= 1e-9);
  CHECK((crits[1].x - v2(0.0, -1.0)).norm() <= 1e-9);
  CHECK(crits[0].hess_eigs_f[0] == doctest::Approx(-0.25).epsilon(1e-9));
  CHECK(crits[1].hess_eigs_f[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(crits[0].index_FH == 2);
  CHECK(crits[1].index_FH == 1);
  for (const auto& c : crits) verify_crit_correspondence(p, c);
}

TEST_CASE("sphere critical set") {
  ProblemSetup p = make_sphere();
  auto crits = find_critical_points(p);
  REQUIRE(crits.size() == 2);
  Eigen::VectorXd north(3), south(3);
  north << 0.0, 0.0, 1.0;
  south << 0.0, 0.0, -1.0;
  CHECK((crits[0].x - north).norm() <= 1e-9);
  CHECK((crits[1].x - south).norm() <= 1e-9);
  CHECK(crits[0].index_f == 2);
  CHECK(crits[0].index_FH == 3);
  CHECK(crits[1].index_f == 0);
  CHECK(crits[1].index_FH == 1);
  // restricted Hessian at the north pole is -Id on the tangent plane
  CHECK(crits[0].hess_eigs_f[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(crits[0].hess_eigs_f[1] == doctest::Approx(-1.0).epsilon(1e-9));
  for (const auto& c : crits) verify_crit_correspondence(p, c);
}

TEST_CASE("json report") {
  ProblemSetup p = make_circle();
  auto crits = find_critical_points(p);
  auto j = critical_point_to_json(crits[0]);
  CHECK(j["index_f"] == 1);
  CHECK(j["index_FH"] == 2);
  CHECK(j["x"].size() == 2);
  CHECK(j["hess_eigs_FH"].size() == 3);
}

TEST_SUITE_END();
