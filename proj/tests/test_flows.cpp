#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <Eigen/Dense>

#include "adiaflow/criticals.hpp"
#include "adiaflow/flows.hpp"
#include "adiaflow/surface.hpp"

using namespace adiaflow;

namespace {

struct ConnectingData {
  ProblemSetup p;
  CriticalPoint top, bottom;
};

ConnectingData connect_data(ProblemSetup p) {
  auto crits = find_critical_points(p);
  REQUIRE(crits.size() == 2);
  REQUIRE(crits[0].f_value > crits[1].f_value);
  return {std::move(p), crits[0], crits[1]};
}

}  // namespace

TEST_SUITE("flows") {

TEST_CASE("closed-form connecting orbit on the pure-height circle") {
  auto d = connect_data(make_circle_unperturbed());
  TimeGrid grid = TimeGrid::make(12.0, 1200);
  BasePath path = integrate_base_flow(d.p, d.top, d.bottom, grid);

  // q(s) = (sin phi, cos phi) with phi = 2 atan(e^s), value-anchored at s = 0.
  double max_dev = 0.0;
  for (int j = 0; j <= grid.N; ++j) {
    const double phi = 2.0 * std::atan(std::exp(grid.s(j)));
    Eigen::Vector2d exact(std::sin(phi), std::cos(phi));
    max_dev = std::max(max_dev, (path.q[j] - exact).norm());
  }
  CHECK(max_dev <= 1e-7);
  CHECK((path.q.front() - d.top.x).norm() <= 1e-4);
  CHECK((path.q.back() - d.bottom.x).norm() <= 1e-4);
  CHECK(std::abs(path.q[grid.N / 2](0) - 1.0) <= 1e-9);
  CHECK(std::abs(path.q[grid.N / 2](1)) <= 1e-6);

  ensure_path_caches(d.p, path);
  CHECK(path.frames.size() == size_t(grid.N + 1));
  CHECK(path.q_mid.size() == size_t(grid.N));
  for (int j = 0; j < grid.N; j += 97)
    CHECK(std::abs(d.p.H.eval(path.q_mid[j])) <= 1e-10);
}

TEST_CASE("energy identity and grid refinement on the circle") {
  auto d = connect_data(make_circle());
  const double c_star = d.top.f_value - d.bottom.f_value;
  CHECK(c_star == doctest::Approx(2.0).epsilon(1e-12));

  TimeGrid g1 = TimeGrid::make(12.0, 1200);
  BasePath p1 = integrate_base_flow(d.p, d.top, d.bottom, g1);
  EnergyBreakdown e1 = base_energy(d.p, p1);
  CHECK(energy_identity_residual(e1, d.top.f_value, d.bottom.f_value) <= 1e-3);
  CHECK(std::abs(e1.tail_left) <= 1e-7);   // decay rate 0.8 leaves ~1e-9 outside
  CHECK(std::abs(e1.tail_right) <= 1e-7);

  TimeGrid g2 = TimeGrid::make(12.0, 2400);
  BasePath p2 = integrate_base_flow(d.p, d.top, d.bottom, g2);
  EnergyBreakdown e2 = base_energy(d.p, p2);
  const double err1 = energy_identity_residual(e1, d.top.f_value, d.bottom.f_value);
  const double err2 = energy_identity_residual(e2, d.top.f_value, d.bottom.f_value);
  CHECK(err2 > 0.0);
  CHECK(err1 / err2 >= 3.5);  // second-order quadrature
}

TEST_CASE("ellipse energy relies on the window tails") {
  auto d = connect_data(make_ellipse());
  TimeGrid g1 = TimeGrid::make(12.0, 1200);
  BasePath p1 = integrate_base_flow(d.p, d.top, d.bottom, g1);
  EnergyBreakdown e1 = base_energy(d.p, p1);
  const double err1 = energy_identity_residual(e1, d.top.f_value, d.bottom.f_value);
  CHECK(err1 <= 1e-3);
  // rate 1/4: the window misses a visible chunk that the tails put back
  CHECK(e1.tail_left + e1.tail_right >= 1e-5);
  CHECK(std::abs(e1.quadrature - 2.0) > err1);

  TimeGrid g2 = TimeGrid::make(12.0, 2400);
  BasePath p2 = integrate_base_flow(d.p, d.top, d.bottom, g2);
  const double err2 = energy_identity_residual(base_energy(d.p, p2), d.top.f_value,
                                               d.bottom.f_value);
  CHECK(err2 > 0.0);
  CHECK(err1 / err2 >= 3.5);
}

TEST_CASE("sphere pole-to-pole flow") {
  auto d = connect_data(make_sphere());
  TimeGrid grid = TimeGrid::make(12.0, 1200);
  BasePath path = integrate_base_flow(d.p, d.top, d.bottom, grid);
  CHECK((path.q.front() - d.top.x).norm() <= 1e-4);
  CHECK((path.q.back() - d.bottom.x).norm() <= 1e-4);
  for (int j = 0; j <= grid.N; j += 53)
    CHECK(std::abs(d.p.H.eval(path.q[j])) <= 1e-10);
  EnergyBreakdown e = base_energy(d.p, path);
  CHECK(energy_identity_residual(e, d.top.f_value, d.bottom.f_value) <= 1e-3);
}

TEST_CASE("unstable branch selects the two half-circles") {
  auto d = connect_data(make_circle());
  TimeGrid grid = TimeGrid::make(12.0, 600);
  BasePath right = integrate_base_flow(d.p, d.top, d.bottom, grid, 1e-5, +1);
  BasePath left = integrate_base_flow(d.p, d.top, d.bottom, grid, 1e-5, -1);
  auto min_dist = [&](const BasePath& path, double x0) {
    double best = 1e30;
    for (const auto& q : path.q) best = std::min(best, (q - Eigen::Vector2d(x0, 0.0)).norm());
    return best;
  };
  CHECK(min_dist(right, 1.0) <= 0.05);
  CHECK(min_dist(left, -1.0) <= 0.05);
  CHECK(min_dist(right, -1.0) >= 1.0);
  CHECK(min_dist(left, 1.0) >= 1.0);
}

TEST_CASE("section values along the lifted connecting orbit") {
  auto d = connect_data(make_circle_unperturbed());
  TimeGrid grid = TimeGrid::make(12.0, 1200);
  BasePath path = integrate_base_flow(d.p, d.top, d.bottom, grid);
  SectionSample base_sec = base_section_values(d.p, path);
  CHECK(base_sec.max_first_norm <= 1e-3);  // grid derivative error only

  AmbientPath lifted = embed_base_path(d.p, path);
  SectionSample eps_sec = eps_section_values(d.p, lifted, 0.3);
  CHECK(eps_sec.max_first_norm <= 1e-3);
  // the multiplier equation does not vanish on the graph: its peak is the
  // equator value of d chi / ds = sin^2(phi) / 2
  CHECK(eps_sec.second[grid.N / 2] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(eps_sec.max_second_abs <= 0.5 + 1e-3);
  CHECK(eps_sec.max_second_abs >= 0.5 - 1e-3);
}

TEST_CASE("collocation extended flow at moderate deformation") {
  auto d = connect_data(make_circle());
  TimeGrid grid = TimeGrid::make(12.0, 1200);
  BasePath base = integrate_base_flow(d.p, d.top, d.bottom, grid);
  for (double eps : {1.0, 0.5, 0.2}) {
    CAPTURE(eps);
    EpsFlowReport rep = integrate_eps_flow(d.p, d.top, d.bottom, eps, grid,
                                           EpsFlowMode::collocation, &base);
    CHECK(rep.final_residual <= 1e-9);
    CHECK(rep.newton_iterations <= 25);
    CHECK((rep.path.u.front() - d.top.x).norm() <= d.p.boundary_tol);
    CHECK((rep.path.u.back() - d.bottom.x).norm() <= d.p.boundary_tol);
    CHECK(std::abs(rep.path.tau.front() - d.top.tau) <= 1e-3);
    CHECK(std::abs(rep.path.tau.back() - d.bottom.tau) <= 1e-3);
    for (int j = 0; j <= grid.N; j += 31)
      CHECK(std::abs(d.p.H.eval(rep.path.u[j])) <= d.p.kappa);
    EnergyBreakdown e = eps_energy(d.p, rep.path, eps);
    CHECK(energy_identity_residual(e, d.top.f_value, d.bottom.f_value) <= 1e-2);
    SectionSample sec = eps_section_values(d.p, rep.path, eps);
    CHECK(sec.max_first_norm <= 1e-2);
    CHECK(sec.max_second_abs <= 5e-2);
  }
}

TEST_CASE("collocation extended flow on the sphere") {
  auto d = connect_data(make_sphere());
  TimeGrid grid = TimeGrid::make(12.0, 1200);
  EpsFlowReport rep = integrate_eps_flow(d.p, d.top, d.bottom, 0.5, grid);
  CHECK(rep.final_residual <= 1e-9);
  EnergyBreakdown e = eps_energy(d.p, rep.path, 0.5);
  CHECK(energy_identity_residual(e, d.top.f_value, d.bottom.f_value) <= 1e-2);
}

TEST_CASE("sequential integration fails honestly on the stiff window") {
  auto d = connect_data(make_circle());
  TimeGrid grid = TimeGrid::make(12.0, 1200);
  BasePath base = integrate_base_flow(d.p, d.top, d.bottom, grid);
  CHECK_THROWS_AS(integrate_eps_flow(d.p, d.top, d.bottom, 0.05, grid, EpsFlowMode::rk4, &base),
                  StiffnessFailure);
  CHECK_THROWS_AS(integrate_eps_flow(d.p, d.top, d.bottom, 0.5, grid,
                                     EpsFlowMode::implicit_stepping, &base),
                  StiffnessFailure);
}

TEST_CASE("argument validation") {
  auto d = connect_data(make_circle());
  CHECK_THROWS_AS(TimeGrid::make(12.0, 8), ConfigError);
  CHECK_THROWS_AS(TimeGrid::make(-1.0, 100), ConfigError);
  TimeGrid grid = TimeGrid::make(12.0, 600);
  CHECK_THROWS_AS(integrate_base_flow(d.p, d.bottom, d.top, grid), NoConnection);
  CHECK_THROWS_AS(integrate_base_flow(d.p, d.top, d.top, grid), NoConnection);
  CHECK_THROWS_AS(integrate_eps_flow(d.p, d.top, d.bottom, 0.0, grid), ConfigError);
  CHECK_THROWS_AS(integrate_eps_flow(d.p, d.top, d.bottom, 1.5, grid), ConfigError);
  BasePath base = integrate_base_flow(d.p, d.top, d.bottom, grid);
  TimeGrid other = TimeGrid::make(12.0, 1200);
  CHECK_THROWS_AS(integrate_eps_flow(d.p, d.top, d.bottom, 0.5, other,
                                     EpsFlowMode::collocation, &base),
                  ConfigError);
}

TEST_CASE("csv writers") {
  auto d = connect_data(make_circle());
  TimeGrid grid = TimeGrid::make(12.0, 600);
  BasePath path = integrate_base_flow(d.p, d.top, d.bottom, grid);
  const std::string base_file = "test_flows_base.csv";
  write_base_path_csv(d.p, path, base_file);
  std::ifstream in(base_file);
  REQUIRE(in.good());
  int lines = 0;
  std::string line, header;
  while (std::getline(in, line)) {
    if (lines == 0) header = line;
    ++lines;
  }
  CHECK(lines == grid.N + 2);
  CHECK(header == "s,q0,q1,H,f");
  in.close();
  std::remove(base_file.c_str());

  AmbientPath lifted = embed_base_path(d.p, path);
  const std::string amb_file = "test_flows_ambient.csv";
  write_ambient_path_csv(d.p, lifted, 0.5, amb_file);
  std::ifstream in2(amb_file);
  REQUIRE(in2.good());
  lines = 0;
  while (std::getline(in2, line)) ++lines;
  CHECK(lines == grid.N + 2);
  in2.close();
  std::remove(amb_file.c_str());
}

}  // TEST_SUITE
