#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "eik/analysis.hpp"
#include "eik/checks.hpp"
#include "eik/config.hpp"
#include "eik/families.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

eik::MetricField metric_from_config(const eik::ExperimentConfig& cfg) {
  std::string kind = cfg.get_string("metric.kind", "euclidean");
  int dim = cfg.get_int("metric.dim", 2);
  if (kind == "euclidean") return eik::make_euclidean(dim);
  if (kind == "conformal")
    return eik::make_conformal_constant(dim, cfg.get_double("metric.c", 1.0));
  if (kind == "induced") {
    double mu = cfg.get_double("metric.mu", 1.0);
    double lambda = cfg.get_double("metric.lambda", 0.0);
    eik::RadialPotential pot = mu == 0.0
                                   ? eik::constant_potential(cfg.get_double("metric.v0", -0.5), lambda)
                                   : eik::power_law_potential(mu, cfg.get_double("metric.c", 1.0),
                                                              lambda);
    return eik::build_induced_metric(pot);
  }
  if (kind == "spiral") {
    eik::SpiralConfig sc = eik::spiral_sine_config(
        cfg.get_double("metric.eps", 0.05), cfg.get_double("metric.phase", 0.0),
        cfg.get_int("metric.harmonics", 1), cfg.get_double("metric.amplitude", 1.0));
    return eik::build_spiral_metric(sc);
  }
  if (kind == "perturbed") {
    eik::ExperimentConfig base_cfg = cfg;
    base_cfg.set("metric.kind", cfg.get_string("metric.base", "induced"));
    auto base = std::make_shared<eik::MetricField>(metric_from_config(base_cfg));
    std::string shape = cfg.get_string("metric.shape", "tail");
    std::shared_ptr<eik::MetricField> delta;
    if (shape == "tail") {
      delta = std::make_shared<eik::MetricField>(eik::make_tail_perturbation(base->dim));
    } else if (shape == "bump") {
      eik::Vec c = cfg.has("metric.center") ? cfg.get_vec("metric.center")
                                            : eik::Vec(eik::Vec::Zero(base->dim));
      delta = std::make_shared<eik::MetricField>(
          eik::make_bump_perturbation(base->dim, c, cfg.get_double("metric.radius", 3.0)));
    } else {
      throw eik::ConfigError("unknown perturbation shape: " + shape);
    }
    return eik::make_perturbed(base, delta, cfg.get_double("metric.eps", 0.05));
  }
  throw eik::ConfigError("unknown metric kind: " + kind);
}

void write_json(const fs::path& out_dir, const json& report) {
  fs::create_directories(out_dir);
  std::ofstream f(out_dir / "report.json");
  f << report.dump(2) << "\n";
}

std::ofstream open_grid(const fs::path& out_dir, const std::string& name) {
  fs::create_directories(out_dir / "grids");
  std::ofstream f(out_dir / "grids" / name);
  f.precision(17);
  return f;
}

int task_distance(const eik::ExperimentConfig& cfg, const fs::path& out, json& report) {
  eik::MetricField G = metric_from_config(cfg);
  eik::Vec x = cfg.get_vec("task.x");
  if (x.size() != G.dim) throw eik::ConfigError("task.x dimension mismatch");
  eik::GeodesicSolution sol = eik::minimize_energy(G, x, cfg.get_double("task.tol", 1e-9));
  report["S"] = sol.distance;
  report["residual"] = sol.residual;
  report["iterations"] = sol.iterations;
  report["converged"] = sol.converged;
  std::vector<double> grad(sol.grad_distance.data(),
                           sol.grad_distance.data() + sol.grad_distance.size());
  report["grad_S"] = grad;
  auto f = open_grid(out, "path.csv");
  f << "s";
  for (int k = 0; k < G.dim; ++k) f << ",kappa" << k;
  f << "\n";
  int n = sol.kappa.intervals();
  for (int j = 0; j <= n; ++j) {
    f << static_cast<double>(j) / n;
    for (int k = 0; k < G.dim; ++k) f << "," << sol.kappa.nodes(k, j);
    f << "\n";
  }
  return 0;
}

int task_geodesic(const eik::ExperimentConfig& cfg, const fs::path& out, json& report) {
  eik::MetricField G = metric_from_config(cfg);
  eik::ShootingResult traj;
  if (cfg.has("task.x")) {
    traj = eik::shoot_to_target(G, cfg.get_vec("task.x"), cfg.get_double("task.tol", 1e-8),
                                cfg.get_int("task.steps", 1000));
  } else if (cfg.has("task.v")) {
    traj = eik::integrate_geodesic(G, cfg.get_vec("task.v"), cfg.get_int("task.steps", 1000));
  } else {
    throw eik::ConfigError("task=geodesic needs task.x or task.v");
  }
  report["converged"] = traj.converged;
  report["conservation_defect"] = traj.conservation_defect;
  std::vector<double> v(traj.v.data(), traj.v.data() + traj.v.size());
  report["v"] = v;
  auto f = open_grid(out, "trajectory.csv");
  f << "s";
  for (int k = 0; k < G.dim; ++k) f << ",y" << k;
  for (int k = 0; k < G.dim; ++k) f << ",v" << k;
  f << "\n";
  for (size_t i = 0; i < traj.s.size(); ++i) {
    f << traj.s[i];
    for (int k = 0; k < G.dim; ++k) f << "," << traj.pos[i][k];
    for (int k = 0; k < G.dim; ++k) f << "," << traj.vel[i][k];
    f << "\n";
  }
  return traj.converged ? 0 : 1;
}

int task_sweep(const eik::ExperimentConfig& cfg, const fs::path& out, json& report, int workers,
               unsigned long long seed) {
  eik::MetricField G = metric_from_config(cfg);
  std::vector<double> eps = cfg.get_list("task.eps");
  if (eps.empty()) eps = {0.1, 0.03, 0.01};
  std::string shape = cfg.get_string("task.shape", "tail");
  eik::MetricField delta;
  if (shape == "tail") {
    delta = eik::make_tail_perturbation(G.dim);
  } else if (shape == "bump") {
    eik::Vec c = cfg.has("task.center") ? cfg.get_vec("task.center")
                                        : eik::Vec(eik::Vec::Zero(G.dim));
    delta = eik::make_bump_perturbation(G.dim, c, cfg.get_double("task.radius", 3.0));
  } else {
    throw eik::ConfigError("unknown sweep shape: " + shape);
  }
  std::vector<double> radii = cfg.get_list("task.radii");
  if (radii.empty()) radii = {2, 4, 8, 20, 50};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0, 1);
  std::vector<eik::Vec> lattice;
  for (double r : radii) {
    eik::Vec d(G.dim);
    for (int k = 0; k < G.dim; ++k) d[k] = gauss(rng);
    lattice.push_back(r * d.normalized());
  }
  eik::StabilityReport rep = eik::perturbation_sweep(G, delta, eps, lattice, {}, workers);
  report["slope_s"] = rep.slope_s;
  report["slope_ds"] = rep.slope_ds;
  report["slope_d2s"] = rep.slope_d2s;
  report["ratio_spread_s"] = rep.ratio_spread_s;
  report["failures"] = rep.failures;
  auto f = open_grid(out, "sweep.csv");
  f << "eps,sup_s,sup_ds,sup_d2s\n";
  for (size_t i = 0; i < rep.eps_values.size(); ++i)
    f << rep.eps_values[i] << "," << rep.sup_s[i] << "," << rep.sup_ds[i] << ","
      << rep.sup_d2s[i] << "\n";
  return rep.failures == 0 ? 0 : 1;
}

int task_verify(const eik::ExperimentConfig& cfg, const fs::path& out, json& report, int workers,
                unsigned long long seed) {
  eik::CheckOptions copts;
  copts.workers = workers;
  copts.seed = seed;
  copts.quick = cfg.get_int("task.quick", 0) != 0;
  std::vector<std::string> names;
  std::string sel = cfg.get_string("task.checks", "");
  if (sel.empty()) {
    names = eik::check_names();
  } else {
    std::istringstream ss(sel);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
      while (!tok.empty() && tok.back() == ' ') tok.pop_back();
      if (!tok.empty()) names.push_back(tok);
    }
  }
  bool all_pass = true;
  json checks = json::array();
  for (const std::string& name : names) {
    eik::CheckResult r = eik::run_check(name, copts);
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    checks.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    if (!r.passed) all_pass = false;
  }
  report["checks"] = checks;
  report["all_passed"] = all_pass;
  if (!all_pass) {
    for (const auto& c : checks)
      if (!c["passed"].get<bool>()) std::cerr << "check failed: " << c["name"] << "\n";
  }
  return all_pass ? 0 : 1;
}

int task_example(const eik::ExperimentConfig& cfg, const fs::path& out, json& report) {
  double mu = cfg.get_double("task.mu", 1.0);
  double lambda = cfg.get_double("task.lambda", 0.0);
  eik::RadialPotential pot =
      mu == 0.0 ? eik::constant_potential(cfg.get_double("task.v0", -0.5), lambda)
                : eik::power_law_potential(mu, 1.0, lambda);
  eik::InducedMetricTable table(pot);
  auto f = open_grid(out, "induced.csv");
  f << "r,rho,f,df,d2f\n";
  int n = cfg.get_int("task.samples", 200);
  for (int i = 0; i < n; ++i) {
    double r = 1e-2 * std::pow(1e5, static_cast<double>(i) / (n - 1));
    double rho = table.rho_of_r(r);
    double fv, dfv, d2fv;
    table.f_eval(rho, fv, dfv, d2fv);
    f << r << "," << rho << "," << fv << "," << dfv << "," << d2fv << "\n";
  }
  eik::MetricField G = eik::build_induced_metric(pot);
  eik::MembershipReport mem = eik::verify_membership_O(pot, G);
  report["max_decomposition_defect"] = mem.max_decomposition_defect;
  report["cbar"] = mem.cbar;
  report["cbar_expected"] = mem.cbar_expected;
  report["a_est"] = mem.a_est;
  report["b_est"] = mem.b_est;
  report["uniform_in_lambda"] = mem.uniform_in_lambda;
  report["in_O"] = mem.in_O;
  return mem.in_O ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eikonal distance and geodesic experiment runner"};
  std::string config_path, task_override, out_dir = "out";
  int workers = 0;
  unsigned long long seed = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "config file path");
  app.add_option("--task", task_override, "task name override");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker thread count");
  app.add_option("--seed", seed, "64-bit RNG seed")->each([&](const std::string&) {
    seed_set = true;
  });
  CLI11_PARSE(app, argc, argv);

  eik::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = eik::ExperimentConfig::parse_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  std::string task = task_override.empty() ? cfg.get_string("task.name", "") : task_override;
  if (task.empty()) {
    std::cerr << "config error: no task given (task.name or --task)\n";
    return 2;
  }
  if (!seed_set) seed = cfg.get_u64("task.seed", 1);

  json report;
  report["task"] = task;
  report["seed"] = seed;
  int rc = 0;
  try {
    if (task == "distance")
      rc = task_distance(cfg, out_dir, report);
    else if (task == "geodesic")
      rc = task_geodesic(cfg, out_dir, report);
    else if (task == "sweep")
      rc = task_sweep(cfg, out_dir, report, workers, seed);
    else if (task == "verify")
      rc = task_verify(cfg, out_dir, report, workers, seed);
    else if (task == "example")
      rc = task_example(cfg, out_dir, report);
    else {
      std::cerr << "config error: unknown task: " << task << "\n";
      return 2;
    }
  } catch (const eik::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    report["error"] = e.what();
    write_json(out_dir, report);
    return 1;
  }
  write_json(out_dir, report);
  return rc;
}
