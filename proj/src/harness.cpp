#include "adiaflow/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include <Eigen/Dense>

#include "adiaflow/criticals.hpp"
#include "adiaflow/errors.hpp"
#include "adiaflow/flows.hpp"
#include "adiaflow/linops.hpp"
#include "adiaflow/newton.hpp"
#include "adiaflow/probes.hpp"
#include "adiaflow/rng.hpp"
#include "adiaflow/surface.hpp"
#include "adiaflow/tangent_field.hpp"

namespace fs = std::filesystem;

namespace adiaflow {

const std::vector<std::string>& all_suites() {
  static const std::vector<std::string> names = {"geometry", "criticals", "flows", "operators",
                                                 "newton",   "scaling",   "uniqueness"};
  return names;
}

int harness_thread_cap() {
  if (const char* env = std::getenv("ADIAFLOW_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

std::string fmt_eps(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", eps);
  return buf;
}

// Index-parallel loop with a shared work queue; exceptions are captured and
// the first one rethrown after all workers join.
template <typename Fn>
void parallel_indexed(int n, Fn&& fn) {
  const int threads = std::min(harness_thread_cap(), n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errs(n);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          errs[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw SuiteFailure(what);
}

// Lazily computed artifacts shared between suites.
struct SharedState {
  const ExperimentConfig& cfg;
  std::vector<CriticalPoint> crits;
  BasePath path;
  bool have_crits = false;
  bool have_path = false;

  const std::vector<CriticalPoint>& criticals() {
    if (!have_crits) {
      crits = find_critical_points(cfg.problem);
      have_crits = true;
    }
    return crits;
  }

  BasePath& base_path() {
    if (!have_path) {
      const auto& cs = criticals();
      if (cs.size() < 2)
        throw NoConnection("experiment: fewer than two critical points, no connecting problem");
      TimeGrid grid = TimeGrid::make(cfg.grid.T, cfg.grid.N);
      path = integrate_base_flow(cfg.problem, cs.front(), cs.back(), grid);
      ensure_path_caches(cfg.problem, path);
      have_path = true;
    }
    return path;
  }
};

nlohmann::json geometry_suite(const ExperimentConfig& cfg, SharedState&) {
  const ProblemSetup& p = cfg.problem;
  Rng master(cfg.seed);
  Rng rng = master.fork(1);
  const int n_samples = 128;
  auto samples = sample_sigma(p, rng, n_samples);
  require(static_cast<int>(samples.size()) == n_samples, "geometry: sampling came up short");

  double max_h = 0.0, max_orth = 0.0, max_tan = 0.0, max_chi_fd = 0.0;
  for (const auto& q : samples) {
    max_h = std::max(max_h, std::abs(p.H.eval(q)));
    SurfaceFrame fr = build_frame(p, q);
    const int k = static_cast<int>(fr.frame.cols());
    Eigen::MatrixXd gram = fr.frame.transpose() * fr.frame;
    max_orth = std::max(max_orth, (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff());
    max_tan = std::max(max_tan, (fr.frame.transpose() * fr.normal_u).cwiseAbs().maxCoeff());
  }
  for (int i = 0; i < 16; ++i) {
    const Eigen::VectorXd& q = samples[i % samples.size()];
    Eigen::VectorXd dir = rng.normal_vec(p.dim).normalized();
    const double h = 1e-6 * (1.0 + q.norm());
    const double fd = (chi_value(p, q + h * dir) - chi_value(p, q - h * dir)) / (2.0 * h);
    Eigen::VectorXd grad = chi_ambient_grad(p, q);
    max_chi_fd = std::max(max_chi_fd, std::abs(fd - grad.dot(dir)) / (1.0 + grad.norm()));
  }
  const double mh = m_H_estimate(p);

  require(max_h <= 1e-10, "geometry: sampled points drifted off the level set");
  require(max_orth <= 1e-12, "geometry: frame orthonormality defect");
  require(max_tan <= 1e-12, "geometry: frame tangency defect");
  require(max_chi_fd <= 1e-4, "geometry: multiplier gradient mismatch against finite differences");
  require(mh >= p.m_H_floor, "geometry: gradient of H fell below the configured floor");
  return {{"n_samples", n_samples},
          {"m_H_estimate", mh},
          {"max_abs_H", max_h},
          {"max_frame_orthonormality_defect", max_orth},
          {"max_frame_tangency_defect", max_tan},
          {"max_chi_grad_fd_error", max_chi_fd}};
}

nlohmann::json criticals_suite(const ExperimentConfig& cfg, SharedState& state) {
  const auto& crits = state.criticals();
  require(crits.size() >= 2, "criticals: expected at least two critical points");
  nlohmann::json arr = nlohmann::json::array();
  for (size_t i = 0; i < crits.size(); ++i) {
    const auto& c = crits[i];
    require(c.nondegenerate, "criticals: degenerate critical point found");
    require(c.index_FH == c.index_f + 1, "criticals: extended index is not shifted by one");
    verify_crit_correspondence(cfg.problem, c);
    if (i + 1 < crits.size())
      require(c.f_value >= crits[i + 1].f_value - 1e-12, "criticals: values not sorted");
    arr.push_back(critical_point_to_json(c));
  }
  return {{"count", crits.size()}, {"critical_points", arr}};
}

nlohmann::json flows_suite(const ExperimentConfig& cfg, SharedState& state) {
  const ProblemSetup& p = cfg.problem;
  BasePath& path = state.base_path();
  const auto& crits = state.criticals();
  const CriticalPoint& top = crits.front();
  const CriticalPoint& bottom = crits.back();

  EnergyBreakdown e0 = base_energy(p, path);
  const double dev0 = energy_identity_residual(e0, path.f_minus, path.f_plus);
  require(dev0 <= 1e-2, "flows: base energy identity violated");
  SectionSample sec0 = base_section_values(p, path);
  write_base_path_csv(p, path, cfg.output_dir + "/paths/base_path.csv");

  const int n = static_cast<int>(cfg.eps_list.size());
  std::vector<EpsFlowReport> reports(n);
  std::vector<double> devs(n);
  parallel_indexed(n, [&](int i) {
    const double eps = cfg.eps_list[i];
    reports[i] = integrate_eps_flow(p, top, bottom, eps, path.grid,
                                    EpsFlowMode::collocation, &path);
    devs[i] = energy_identity_residual(eps_energy(p, reports[i].path, eps), path.f_minus,
                                       path.f_plus);
  });
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    const double eps = cfg.eps_list[i];
    require(reports[i].final_residual <= 1e-9, "flows: collocation residual too large");
    require(devs[i] <= 1e-2, "flows: deformed energy identity violated");
    write_ambient_path_csv(p, reports[i].path, eps,
                           cfg.output_dir + "/paths/eps_path_" + fmt_eps(eps) + ".csv");
    rows.push_back({{"eps", eps},
                    {"energy_deviation", devs[i]},
                    {"newton_iterations", reports[i].newton_iterations},
                    {"final_residual", reports[i].final_residual}});
  }
  const std::vector<double> from(top.x.data(), top.x.data() + top.x.size());
  const std::vector<double> to(bottom.x.data(), bottom.x.data() + bottom.x.size());
  return {{"connection", {{"from", from}, {"to", to}}},
          {"c_star", path.f_minus - path.f_plus},
          {"base_energy", e0.value},
          {"base_energy_deviation", dev0},
          {"base_section_max", sec0.max_first_norm},
          {"eps_runs", rows}};
}

nlohmann::json operators_suite(const ExperimentConfig& cfg, SharedState& state) {
  const ProblemSetup& p = cfg.problem;
  BasePath& path = state.base_path();
  const auto& crits = state.criticals();
  const int expected_index = crits.front().index_f - crits.back().index_f;
  Rng master(cfg.seed);
  Rng rng = master.fork(4);

  auto adjoint_defect = [](const LinearOperator& op, Rng& r) {
    double worst = 0.0;
    for (int t = 0; t < 8; ++t) {
      Eigen::VectorXd x = r.normal_vec(op.cols());
      Eigen::VectorXd y = r.normal_vec(op.rows());
      const double lhs = op.apply(x).dot(op.w_cod.asDiagonal() * y);
      const double rhs = x.dot(op.w_dom.asDiagonal() * op.apply_adjoint(y));
      worst = std::max(worst, std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1.0));
    }
    return worst;
  };

  auto flow_correlation = [&](const std::vector<Eigen::VectorXd>& kx) {
    const Eigen::VectorXd wn = node_weights(path.grid);
    double num = 0.0, na = 0.0, nb = 0.0;
    for (int j = 0; j <= path.grid.N; ++j) {
      Eigen::VectorXd t = (j == 0)              ? (path.q[1] - path.q[0]) / path.grid.ds
                          : (j == path.grid.N)  ? (path.q[j] - path.q[j - 1]) / path.grid.ds
                                                : (path.q[j + 1] - path.q[j - 1]) /
                                                      (2.0 * path.grid.ds);
      num += wn(j) * kx[j].dot(t);
      na += wn(j) * kx[j].squaredNorm();
      nb += wn(j) * t.squaredNorm();
    }
    return std::abs(num) / std::sqrt(na * nb);
  };

  // base operator
  LinearOperator D0 = assemble_base_operator(p, path);
  const double adj0 = adjoint_defect(D0, rng);
  require(adj0 <= 1e-12, "operators: base adjoint identity violated");
  FredholmReport f0 = fredholm_index_estimate(D0);
  require(f0.dim_coker == 0, "operators: base operator has a cokernel");
  require(f0.index == expected_index, "operators: base index does not match the critical data");
  std::vector<Eigen::VectorXd> k0(path.grid.N + 1);
  {
    const int k = p.dim - 1;
    for (int j = 0; j <= path.grid.N; ++j)
      k0[j] = path.frames[j].frame * f0.kernel_vector.segment(j * k, k);
  }
  const double corr0 = flow_correlation(k0);
  require(corr0 >= 0.999, "operators: base kernel does not track the flow direction");

  // extended operators per eps
  const int n = static_cast<int>(cfg.eps_list.size());
  std::vector<double> adjs(n), corrs(n);
  std::vector<FredholmReport> freds(n);
  parallel_indexed(n, [&](int i) {
    Rng sub = master.fork(400 + i);
    LinearOperator De = assemble_extended_operator(p, path, cfg.eps_list[i]);
    adjs[i] = adjoint_defect(De, sub);
    freds[i] = fredholm_index_estimate(De);
    if (freds[i].dim_ker > 0) {
      TangentField kz = unflatten_extended(path.grid, p.dim, freds[i].kernel_vector);
      corrs[i] = flow_correlation(kz.X);
    }
  });
  nlohmann::json eps_rows = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    require(adjs[i] <= 1e-12, "operators: extended adjoint identity violated");
    require(freds[i].dim_coker == 0, "operators: extended operator has a cokernel");
    require(freds[i].index == expected_index, "operators: extended index mismatch");
    eps_rows.push_back({{"eps", cfg.eps_list[i]},
                        {"adjoint_defect", adjs[i]},
                        {"dim_ker", freds[i].dim_ker},
                        {"dim_coker", freds[i].dim_coker},
                        {"index", freds[i].index},
                        {"kernel_flow_correlation", corrs[i]}});
  }

  // uniform-constant probes
  const auto& ids = probe_ids();
  const int np = static_cast<int>(ids.size());
  std::vector<ProbeResult> probes(np);
  parallel_indexed(np, [&](int i) {
    Rng sub = master.fork(500 + i);
    const int n_fields = ids[i] == "b_inverse" ? 1 : 24;
    probes[i] = run_probe(p, path, ids[i], cfg.eps_list, n_fields, sub, cfg.alpha, cfg.beta);
  });
  nlohmann::json probe_rows = nlohmann::json::array();
  for (int i = 0; i < np; ++i) {
    const ProbeResult& pr = probes[i];
    std::ofstream out(cfg.output_dir + "/probes/" + ids[i] + ".json");
    out << probe_to_json(pr).dump(2) << '\n';
    for (double r : pr.max_ratio)
      require(std::isfinite(r) && r >= 0.0, "operators: probe ratio not finite");
    if (ids[i] == "sobolev")
      for (double r : pr.max_ratio) require(r <= 1.0, "operators: domination constant violated");
    if (ids[i] == "pi_identity")
      for (double r : pr.max_ratio)
        require(r <= 1e-12, "operators: graph projection identity violated");
    if (ids[i] == "b_inverse")
      for (double r : pr.max_ratio)
        require(r <= 1.0 + 1e-12, "operators: fiber inverse exceeded the unit bound");
    if (ids[i] == "embedding") {
      const double cap = (cfg.alpha == 2.0 && cfg.beta == 2.0) ? 0.5 : 1.0;
      for (double r : pr.max_ratio)
        require(r <= cap + 1e-9, "operators: embedding bound violated");
    }
    const bool growth_family = ids[i] == "ambient" || ids[i] == "ambient_adjoint" ||
                               ids[i] == "range_12" || ids[i] == "range_pi" ||
                               ids[i] == "range_components" || ids[i] == "difference";
    if (growth_family && pr.max_ratio.size() >= 3) {
      std::vector<double> sorted = pr.max_ratio;
      std::sort(sorted.begin(), sorted.end());
      const double median = sorted[sorted.size() / 2];
      require(pr.max_ratio.back() <= 1.5 * std::max(median, 1e-6),
              "operators: probe ratio grows along the eps sweep (" + ids[i] + ")");
    }
    probe_rows.push_back({{"inequality_id", ids[i]}, {"max_ratio_per_eps", pr.max_ratio}});
  }

  return {{"expected_index", expected_index},
          {"base",
           {{"adjoint_defect", adj0},
            {"dim_ker", f0.dim_ker},
            {"dim_coker", f0.dim_coker},
            {"index", f0.index},
            {"kernel_flow_correlation", corr0}}},
          {"extended", eps_rows},
          {"probes", probe_rows}};
}

nlohmann::json newton_suite(const ExperimentConfig& cfg, SharedState& state) {
  const ProblemSetup& p = cfg.problem;
  BasePath& path = state.base_path();
  const int n = static_cast<int>(cfg.eps_list.size());
  std::vector<NewtonReport> reports(n);
  std::vector<AmbientPath> ambients(n);
  std::vector<double> energies(n);
  parallel_indexed(n, [&](int i) {
    const double eps = cfg.eps_list[i];
    reports[i] = newton_iterate(p, path, eps);
    AmbientPath amb;
    amb.grid = path.grid;
    amb.u.resize(path.grid.N + 1);
    amb.tau.resize(path.grid.N + 1);
    for (int j = 0; j <= path.grid.N; ++j) {
      amb.u[j] = path.q[j] + reports[i].Z_final.X[j];
      amb.tau[j] = path.frames[j].chi + reports[i].Z_final.ell[j];
    }
    amb.x_minus = path.x_minus;
    amb.x_plus = path.x_plus;
    amb.tau_minus = chi_value(p, path.x_minus);
    amb.tau_plus = chi_value(p, path.x_plus);
    energies[i] = eps_energy(p, amb, eps).value;
    ambients[i] = std::move(amb);
  });

  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    const double eps = cfg.eps_list[i];
    const NewtonReport& rep = reports[i];
    require(rep.converged, "newton: iteration did not converge at eps " + fmt_eps(eps));
    require(rep.residual_final <= 1e-10, "newton: final residual above tolerance");
    require(!rep.surjective_suspect, "newton: Gram factorization needed jitter");
    if (eps <= 0.2) {
      require(rep.iterations.size() <= 10, "newton: too many iterations in the adiabatic regime");
      for (size_t k = 1; k < rep.iterations.size(); ++k)
        require(rep.iterations[k].contraction_factor <= 0.6,
                "newton: contraction factor above 0.6 in the adiabatic regime");
    }
    write_ambient_path_csv(p, ambients[i], eps,
                           cfg.output_dir + "/paths/newton_path_" + fmt_eps(eps) + ".csv");
    nlohmann::json row = newton_report_to_json(rep);
    row.erase("iterations");  // keep the summary compact; full trace in norms
    row["iterations_count"] = reports[i].iterations.size();
    row["eps_energy"] = energies[i];
    rows.push_back(row);
  }
  return {{"runs", rows}};
}

nlohmann::json scaling_suite(const ExperimentConfig& cfg, SharedState& state) {
  ScalingStudy st = scaling_study(cfg.problem, state.base_path(), cfg.eps_list);
  require(!st.degenerate, "scaling: corrections vanished, exponents undefined");
  write_scaling_csv(st, cfg.output_dir + "/scaling.csv");
  require(st.slope_Z_12eps >= 1.8, "scaling: correction norm slope below 1.8");
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : st.rows)
    rows.push_back({{"eps", row.eps},
                    {"norm_Z_12eps", row.norm_Z_12eps},
                    {"norm_X_inf", row.norm_X_inf},
                    {"norm_ell_inf", row.norm_ell_inf},
                    {"iterations", row.iterations},
                    {"residual", row.residual}});
  return {{"slope_Z_12eps", st.slope_Z_12eps},
          {"slope_X_inf", st.slope_X_inf},
          {"slope_ell_inf", st.slope_ell_inf},
          {"max_ratio_X_over_eps32", st.max_ratio_X},
          {"max_ratio_ell_over_eps12", st.max_ratio_ell},
          {"rows", rows}};
}

nlohmann::json uniqueness_suite(const ExperimentConfig& cfg, SharedState& state) {
  Rng master(cfg.seed);
  Rng rng = master.fork(7);
  const double eps = cfg.eps_list.back();
  UniquenessReport rep = uniqueness_probe(cfg.problem, state.base_path(), eps, 20, 0.05, rng);
  require(rep.all_returned, "uniqueness: a perturbation escaped the zero");
  return {{"eps", rep.eps},
          {"delta0", rep.delta0},
          {"n_perturbations", rep.n_perturbations},
          {"max_distance_12eps", rep.max_distance_12eps}};
}

}  // namespace

ExperimentConfig load_config(const nlohmann::json& js) {
  if (!js.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig cfg;

  if (!js.contains("problem")) throw ConfigError("config: missing 'problem'");
  const auto& pr = js.at("problem");
  if (pr.is_string()) {
    auto built = make_builtin(pr.get<std::string>());
    if (!built) throw ConfigError("config: unknown builtin problem '" + pr.get<std::string>() + "'");
    cfg.problem = std::move(*built);
  } else if (pr.is_object()) {
    ProblemSetup p;
    p.name = pr.value("name", std::string("inline"));
    if (!pr.contains("dim") || !pr.contains("F") || !pr.contains("H"))
      throw ConfigError("config: inline problem needs 'dim', 'F' and 'H'");
    p.dim = pr.at("dim").get<int>();
    if (p.dim < 2) throw ConfigError("config: inline problem dimension must be at least 2");
    p.F = ScalarField::from_json(pr.at("F"));
    p.H = ScalarField::from_json(pr.at("H"));
    p.kappa = pr.value("kappa", 0.5);
    p.m_H_floor = pr.value("m_H_floor", 1e-6);
    p.boundary_tol = pr.value("boundary_tol", 1e-4);
    const double half = pr.value("box_halfwidth", 3.0);
    p.box_lo = Eigen::VectorXd::Constant(p.dim, -half);
    p.box_hi = Eigen::VectorXd::Constant(p.dim, half);
    if (pr.contains("box_lo")) {
      auto lo = pr.at("box_lo").get<std::vector<double>>();
      auto hi = pr.at("box_hi").get<std::vector<double>>();
      if (static_cast<int>(lo.size()) != p.dim || static_cast<int>(hi.size()) != p.dim)
        throw ConfigError("config: box bounds must have length dim");
      p.box_lo = Eigen::Map<Eigen::VectorXd>(lo.data(), p.dim);
      p.box_hi = Eigen::Map<Eigen::VectorXd>(hi.data(), p.dim);
    }
    cfg.problem = std::move(p);
  } else {
    throw ConfigError("config: 'problem' must be a builtin name or an inline object");
  }

  if (js.contains("grid")) {
    cfg.grid.T = js.at("grid").value("T", 12.0);
    cfg.grid.N = js.at("grid").value("N", 1200);
  }
  TimeGrid::make(cfg.grid.T, cfg.grid.N);  // validates, throws ConfigError

  if (!js.contains("eps_list")) throw ConfigError("config: missing 'eps_list'");
  cfg.eps_list = js.at("eps_list").get<std::vector<double>>();
  if (cfg.eps_list.empty()) throw ConfigError("config: eps_list must be nonempty");
  for (double e : cfg.eps_list)
    if (!(e > 0.0) || e > 1.0) throw ConfigError("config: eps values must lie in (0, 1]");
  for (size_t i = 1; i < cfg.eps_list.size(); ++i)
    if (!(cfg.eps_list[i] < cfg.eps_list[i - 1]))
      throw ConfigError("config: eps_list must be strictly descending");

  cfg.alpha = js.value("alpha", 2.0);
  cfg.beta = js.value("beta", 2.0);
  cfg.experimental = js.value("experimental", false);
  if (cfg.alpha < 1.0 || cfg.alpha > 2.0)
    throw ConfigError("config: alpha must lie in [1, 2]");
  if (cfg.beta != 2.0 && !cfg.experimental)
    throw ConfigError("config: beta != 2 requires the experimental flag");

  if (js.contains("suites")) {
    auto req = js.at("suites").get<std::vector<std::string>>();
    for (const auto& s : req)
      if (std::find(all_suites().begin(), all_suites().end(), s) == all_suites().end())
        throw ConfigError("config: unknown suite '" + s + "'");
    for (const auto& s : all_suites())
      if (std::find(req.begin(), req.end(), s) != req.end()) cfg.suites.push_back(s);
  } else {
    cfg.suites = all_suites();
  }

  if (std::find(cfg.suites.begin(), cfg.suites.end(), "scaling") != cfg.suites.end()) {
    if (cfg.eps_list.size() < 2)
      throw ConfigError("config: scaling suite needs at least two eps values");
    const double span = cfg.eps_list.front() / cfg.eps_list.back();
    if (span < 10.0 * (1.0 - 1e-12))
      throw ConfigError("config: scaling suite needs eps_list to span a decade");
  }

  cfg.seed = js.value("seed", 12345);
  cfg.output_dir = js.value("output_dir", std::string("adiaflow_out"));
  if (cfg.output_dir.empty()) throw ConfigError("config: output_dir must be nonempty");
  return cfg;
}

ExperimentConfig load_config_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw ConfigError("config: cannot open " + filename);
  nlohmann::json js;
  try {
    in >> js;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: JSON parse failure: ") + e.what());
  }
  return load_config(js);
}

int run_experiment(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  fs::create_directories(cfg.output_dir + "/paths");
  fs::create_directories(cfg.output_dir + "/probes");

  nlohmann::json summary;
  summary["schema_version"] = 1;
  summary["problem"] = cfg.problem.name;
  summary["dim"] = cfg.problem.dim;
  summary["grid"] = {{"T", cfg.grid.T}, {"N", cfg.grid.N}};
  summary["eps_list"] = cfg.eps_list;
  summary["alpha"] = cfg.alpha;
  summary["beta"] = cfg.beta;
  summary["seed"] = cfg.seed;
  summary["requested_suites"] = cfg.suites;

  SharedState state{cfg};
  bool all_pass = true;
  nlohmann::json suites_out;
  for (const auto& name : cfg.suites) {
    const auto t0 = std::chrono::steady_clock::now();
    nlohmann::json entry;
    try {
      nlohmann::json measured;
      if (name == "geometry") measured = geometry_suite(cfg, state);
      else if (name == "criticals") measured = criticals_suite(cfg, state);
      else if (name == "flows") measured = flows_suite(cfg, state);
      else if (name == "operators") measured = operators_suite(cfg, state);
      else if (name == "newton") measured = newton_suite(cfg, state);
      else if (name == "scaling") measured = scaling_suite(cfg, state);
      else if (name == "uniqueness") measured = uniqueness_suite(cfg, state);
      entry["pass"] = true;
      entry["measured"] = measured;
    } catch (const std::exception& e) {
      entry["pass"] = false;
      entry["error"] = e.what();
      all_pass = false;
    }
    entry["seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    suites_out[name] = entry;
  }
  summary["suites"] = suites_out;
  summary["pass"] = all_pass;

  std::ofstream out(cfg.output_dir + "/summary.json");
  if (!out) throw ConfigError("run_experiment: cannot write summary under " + cfg.output_dir);
  out << summary.dump(2) << '\n';
  return all_pass ? 0 : 1;
}

nlohmann::json list_problems_json() {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& info : builtin_problems()) {
    auto p = make_builtin(info.name);
    arr.push_back({{"name", info.name},
                   {"dim", info.dim},
                   {"crit_count", info.crit_count},
                   {"notes", info.notes},
                   {"F", p->F.to_json()},
                   {"H", p->H.to_json()}});
  }
  return arr;
}

std::string list_problems_text() {
  std::string out;
  for (const auto& info : builtin_problems()) {
    out += info.name + " (dim " + std::to_string(info.dim) +
           ", critical points: " + std::to_string(info.crit_count) + "): " + info.notes + "\n";
  }
  return out;
}

}  // namespace adiaflow
