#include "eik/checks.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include "eik/analysis.hpp"
#include "eik/families.hpp"

namespace eik {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

Vec rand_dir(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0, 1);
  Vec v(d);
  do {
    for (int i = 0; i < d; ++i) v[i] = gauss(rng);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

double rand_log_radius(double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  return lo * std::pow(hi / lo, u(rng));
}

std::pair<double, double> measured_ab(const MetricField& G, double r_lo = 1e-2,
                                      double r_hi = 1e3) {
  return ellipticity_estimate(G, log_radial_lattice(G.dim, 32, 12, r_lo, r_hi, 5));
}

struct MetricSet {
  MetricField euclid2 = make_euclidean(2);
  MetricField euclid3 = make_euclidean(3);
  RadialPotential pot_mu1 = power_law_potential(1.0);
  RadialPotential pot_mu0 = constant_potential(-0.5);
  MetricField induced_mu1;
  MetricField induced_mu0;
  MetricField spiral;
  std::shared_ptr<MetricField> induced_mu1_ptr;
  std::shared_ptr<MetricField> bump, tail;

  MetricSet() {
    induced_mu1 = build_induced_metric(pot_mu1);
    induced_mu0 = build_induced_metric(pot_mu0);
    spiral = build_spiral_metric(spiral_sine_config(0.05));
    induced_mu1_ptr = std::make_shared<MetricField>(induced_mu1);
    Vec c(2);
    c << 4.0, 1.0;
    bump = std::make_shared<MetricField>(make_bump_perturbation(2, c, 3.0));
    tail = std::make_shared<MetricField>(make_tail_perturbation(2));
  }
};

const MetricSet& metrics() {
  static MetricSet m;
  return m;
}

// ---------------------------------------------------------------------------

CheckResult check_euclidean_exactness(const CheckOptions& opts) {
  CheckResult res;
  res.name = "euclidean-exactness";
  int per_dim = opts.quick ? 10 : 50;
  double worst_S = 0, worst_k = 0;
  for (int d : {2, 3}) {
    const MetricField& G = d == 2 ? metrics().euclid2 : metrics().euclid3;
    std::mt19937_64 rng(opts.seed + d);
    std::vector<Vec> pts;
    for (int i = 0; i < per_dim; ++i)
      pts.push_back(rand_log_radius(0.5, 20.0, rng) * rand_dir(d, rng));
    std::vector<double> eS(pts.size()), eK(pts.size());
    parallel_for(static_cast<int>(pts.size()), opts.workers, [&](int i) {
      GeodesicSolution sol = minimize_energy(G, pts[i]);
      eS[i] = std::abs(sol.distance - pts[i].norm()) / pts[i].norm();
      eK[i] = sol.kappa.norm();
    });
    for (size_t i = 0; i < pts.size(); ++i) {
      worst_S = std::max(worst_S, eS[i]);
      worst_k = std::max(worst_k, eK[i]);
    }
  }
  res.passed = worst_S <= 1e-8 && worst_k <= 1e-8;
  res.detail = "max rel |S-|x||=" + fmt(worst_S) + ", max |kappa|_H1=" + fmt(worst_k);
  return res;
}

CheckResult check_radial_oracle(const CheckOptions& opts) {
  CheckResult res;
  res.name = "radial-oracle";
  const RadialPotential& pot = metrics().pot_mu1;
  const MetricField& G = metrics().induced_mu1;
  InducedMetricTable table(pot);
  int n = opts.quick ? 6 : 20;
  std::mt19937_64 rng(opts.seed + 17);
  std::vector<double> radii, err(n);
  for (int i = 0; i < n; ++i) radii.push_back(0.1 * std::pow(1e4, static_cast<double>(i) / (n - 1)));
  std::vector<Vec> dirs;
  for (int i = 0; i < n; ++i) dirs.push_back(rand_dir(2, rng));
  parallel_for(n, opts.workers, [&](int i) {
    double oracle = radial_eikonal_oracle(pot, radii[i]);
    Vec x = table.rho_of_r(radii[i]) * dirs[i];
    GeodesicSolution sol = minimize_energy(G, x);
    err[i] = std::abs(sol.distance - oracle) / oracle;
  });
  double worst = *std::max_element(err.begin(), err.end());
  res.passed = worst <= 1e-4;
  res.detail = "max rel error vs oracle=" + fmt(worst) + " over " + std::to_string(n) + " radii";
  return res;
}

CheckResult check_eikonal_residual(const CheckOptions& opts) {
  CheckResult res;
  res.name = "eikonal-residual";
  std::vector<const MetricField*> ms = {&metrics().euclid2, &metrics().induced_mu1,
                                        &metrics().induced_mu0, &metrics().spiral};
  int per = opts.quick ? 5 : 50;
  double worst = 0;
  std::mt19937_64 rng(opts.seed + 23);
  for (const MetricField* G : ms) {
    std::vector<Vec> pts;
    for (int i = 0; i < per; ++i)
      pts.push_back(rand_log_radius(1.0, 100.0, rng) * rand_dir(G->dim, rng));
    std::vector<double> r = eikonal_residual_scan(*G, pts, {}, opts.workers);
    worst = std::max(worst, *std::max_element(r.begin(), r.end()));
  }
  res.passed = worst <= 1e-3;
  res.detail = "max |grad S G^-1 grad S - 1|=" + fmt(worst);
  return res;
}

CheckResult check_conservation(const CheckOptions& opts) {
  CheckResult res;
  res.name = "conservation";
  std::vector<const MetricField*> ms = {&metrics().euclid2, &metrics().induced_mu1,
                                        &metrics().induced_mu0, &metrics().spiral};
  int per = opts.quick ? 3 : 10;
  std::mt19937_64 rng(opts.seed + 31);
  double worst = 0;
  for (const MetricField* G : ms) {
    for (int i = 0; i < per; ++i) {
      Vec v = rand_log_radius(0.5, 10.0, rng) * rand_dir(G->dim, rng);
      ShootingResult from_zero = integrate_geodesic(*G, v, 1000);
      worst = std::max(worst, from_zero.conservation_defect);
      Vec x0 = rand_log_radius(1.0, 20.0, rng) * rand_dir(G->dim, rng);
      ShootingResult from_x0 = integrate_geodesic(*G, v, 1000, &x0);
      worst = std::max(worst, from_x0.conservation_defect);
    }
  }
  res.passed = worst <= 1e-8;
  res.detail = "max relative speed drift=" + fmt(worst) + " at 1000 RK4 steps";
  return res;
}

CheckResult check_minimizer_bounds(const CheckOptions& opts) {
  CheckResult res;
  res.name = "minimizer-bounds";
  MetricField bumped = make_perturbed(metrics().induced_mu1_ptr, metrics().bump, 0.05);
  std::vector<const MetricField*> ms = {&metrics().induced_mu1, &metrics().spiral, &bumped};
  int per = opts.quick ? 3 : 8;
  std::mt19937_64 rng(opts.seed + 37);
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const MetricField* G : ms) {
    auto ab = measured_ab(*G);
    double lo = ab.first / ab.second, hi = ab.second / ab.first;
    for (int i = 0; i < per; ++i) {
      Vec x = rand_log_radius(1.0, 30.0, rng) * rand_dir(G->dim, rng);
      GeodesicSolution sol = minimize_energy(*G, x);
      double x2 = x.squaredNorm();
      int n = sol.kappa.intervals();
      for (int k = 1; k <= n; ++k) {
        Vec ydot = x + sol.kappa.slope(k);
        double sp = ydot.squaredNorm();
        worst_margin = std::min(worst_margin, sp / (lo * x2) - 1);
        worst_margin = std::min(worst_margin, 1 - sp / (hi * x2 * 1.0));
        double s = static_cast<double>(k) / n;
        Vec y = s * x + sol.kappa.nodes.col(k);
        double p2 = y.squaredNorm();
        worst_margin = std::min(worst_margin, p2 / (lo * s * s * x2) - 1);
        worst_margin = std::min(worst_margin, 1 - p2 / (hi * s * s * x2));
      }
    }
  }
  res.passed = worst_margin >= -0.01;
  res.detail = "worst sandwich margin=" + fmt(worst_margin) + " (slack 0.01)";
  return res;
}

CheckResult check_hessian_coercivity(const CheckOptions& opts) {
  CheckResult res;
  res.name = "hessian-coercivity";
  Vec x0(2);
  x0 << 3.0, 4.0;
  GeodesicSolution base = minimize_energy(metrics().euclid2, x0);
  double lam_euclid = hessian_smallest_eigenvalue(metrics().euclid2, base);
  bool euclid_ok = std::abs(lam_euclid - 2.0) <= 1e-6;

  MetricField bumped = make_perturbed(metrics().induced_mu1_ptr, metrics().bump, 0.05);
  MetricField tailed = make_perturbed(metrics().induced_mu1_ptr, metrics().tail, 0.05);
  std::vector<const MetricField*> ms = {&metrics().induced_mu1, &metrics().induced_mu0, &bumped,
                                        &tailed};
  int per = opts.quick ? 2 : 6;
  std::mt19937_64 rng(opts.seed + 41);
  double worst_gap = std::numeric_limits<double>::infinity();
  for (const MetricField* G : ms) {
    auto ab = measured_ab(*G);
    std::vector<Vec> pts;
    for (int i = 0; i < per; ++i)
      pts.push_back(rand_log_radius(1.0, 50.0, rng) * rand_dir(G->dim, rng));
    std::vector<double> lam(pts.size());
    parallel_for(static_cast<int>(pts.size()), opts.workers, [&](int i) {
      GeodesicSolution sol = minimize_energy(*G, pts[i]);
      lam[i] = hessian_smallest_eigenvalue(*G, sol);
    });
    for (double l : lam) worst_gap = std::min(worst_gap, l - ab.first);
  }
  res.passed = euclid_ok && worst_gap >= 0;
  res.detail = "euclid lambda_min=" + fmt(lam_euclid) +
               ", min (lambda_min - a_est)=" + fmt(worst_gap);
  return res;
}

CheckResult check_observables(const CheckOptions& opts) {
  CheckResult res;
  res.name = "observables";
  const MetricField& G = metrics().induced_mu1;
  std::mt19937_64 rng(opts.seed + 43);
  int trajectories = opts.quick ? 3 : 12;
  const int steps = 1000;
  double min_inc = 0;
  bool bounds_ok = true;
  int used = 0;
  for (int i = 0; i < trajectories + 8 && used < trajectories; ++i) {
    Vec x0 = rand_log_radius(0.5, 5.0, rng) * rand_dir(2, rng);
    Vec v = rand_log_radius(2.0, 8.0, rng) * rand_dir(2, rng);
    ShootingResult traj = integrate_geodesic(G, v, steps, &x0);
    ObservableTrace tr = observable_trace(G, traj);
    if (tr.zero_hit || tr.pos_norm.empty()) continue;
    if (*std::min_element(tr.pos_norm.begin(), tr.pos_norm.end()) < 1e-3) continue;
    MonotonicityReport rep = monotonicity_check(tr, 0.0);
    bounds_ok = bounds_ok && rep.bounds_ok;
    min_inc = std::min(min_inc, rep.min_increment);
    ++used;
  }
  bool mono_ok = min_inc >= -10.0 / steps;

  // static inequalities on random states
  auto ab = measured_ab(G);
  int samples = opts.quick ? 1000 : 10000;
  int violations = 0;
  for (int i = 0; i < samples; ++i) {
    Vec y = rand_log_radius(0.1, 100.0, rng) * rand_dir(2, rng);
    Vec v = rand_dir(2, rng);
    Mat g = G.value(y);
    double vg = std::sqrt(v.dot(g * v));
    double A = v.dot(y) / (y.norm() * vg);
    double B = v.dot(y) / y.norm();  // |v| = 1
    double lhs1 = ab.second * (1 - B * B) - (1 - A * A);
    double lhs2 = (1 - A * A) / ab.first - (1 - B * B);
    if (A * A > 1 + 1e-12 || B * B > 1 + 1e-12 || lhs1 < -1e-9 || lhs2 < -1e-9) ++violations;
  }
  res.passed = bounds_ok && mono_ok && violations == 0;
  res.detail = "min A increment=" + fmt(min_inc) + ", static violations=" +
               std::to_string(violations) + "/" + std::to_string(samples);
  return res;
}

CheckResult check_perturbation_rates(const CheckOptions& opts) {
  CheckResult res;
  res.name = "perturbation-rates";
  const MetricField& G = metrics().induced_mu1;
  std::vector<double> eps_list = {0.1, 0.03, 0.01};
  std::vector<Vec> lattice;
  std::mt19937_64 rng(opts.seed + 47);
  for (double r : {2.0, 4.0, 8.0, 20.0, 50.0}) lattice.push_back(r * rand_dir(2, rng));
  {
    Vec near_bump(2);
    near_bump << 3.5, 0.8;
    lattice.push_back(near_bump);
  }
  if (opts.quick) lattice.resize(2);

  bool ok = true;
  std::string det;
  for (const auto& shape : {std::pair<std::string, const MetricField*>{"bump", metrics().bump.get()},
                            {"tail", metrics().tail.get()}}) {
    StabilityReport rep =
        perturbation_sweep(G, *shape.second, eps_list, lattice, {}, opts.workers);
    bool shape_ok = rep.failures == 0 && rep.slope_s >= 0.9 && rep.slope_ds >= 0.45 &&
                    rep.slope_d2s >= 0.45 && rep.ratio_spread_s <= 3.0;
    ok = ok && shape_ok;
    det += shape.first + ": slopes " + fmt(rep.slope_s) + "/" + fmt(rep.slope_ds) + "/" +
           fmt(rep.slope_d2s) + " spread " + fmt(rep.ratio_spread_s) + " failures " +
           std::to_string(rep.failures) + "; ";
  }
  res.passed = ok;
  res.detail = det;
  return res;
}

CheckResult check_gradient_identity(const CheckOptions& opts) {
  CheckResult res;
  res.name = "gradient-identity";
  std::vector<const MetricField*> ms = {&metrics().euclid2, &metrics().induced_mu1,
                                        &metrics().spiral};
  int per = opts.quick ? 5 : 50;
  std::mt19937_64 rng(opts.seed + 53);
  double worst = 0;
  for (const MetricField* G : ms) {
    std::vector<Vec> pts;
    for (int i = 0; i < per; ++i)
      pts.push_back(rand_log_radius(1.0, 60.0, rng) * rand_dir(G->dim, rng));
    std::vector<double> err(pts.size());
    parallel_for(static_cast<int>(pts.size()), opts.workers, [&](int i) {
      const Vec& x = pts[i];
      GeodesicSolution sol = minimize_energy(*G, x);
      double h = 1e-3 * x.norm();
      Vec fd(G->dim);
      SolverOptions o;
      o.compute_gradient = false;
      for (int k = 0; k < G->dim; ++k) {
        Vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        fd[k] = (minimize_energy(*G, xp, DiscretePath(), o).distance -
                 minimize_energy(*G, xm, DiscretePath(), o).distance) /
                (2 * h);
      }
      err[i] = (sol.grad_distance - fd).norm() / fd.norm();
    });
    worst = std::max(worst, *std::max_element(err.begin(), err.end()));
  }
  res.passed = worst <= 1e-3;
  res.detail = "max rel grad mismatch=" + fmt(worst);
  return res;
}

CheckResult check_derivative_scaling(const CheckOptions& opts) {
  CheckResult res;
  res.name = "derivative-scaling";
  const MetricField& G = metrics().induced_mu1;
  std::vector<double> radii;
  int nr = opts.quick ? 3 : 7;
  for (int i = 0; i < nr; ++i) radii.push_back(std::pow(1e3, static_cast<double>(i) / (nr - 1)));
  std::vector<Vec> dirs;
  Vec d1(2), d2(2);
  d1 << 1.0, 0.0;
  d2 << 0.446, 0.895;
  dirs = {d1, d2};
  ScalingReport rep = derivative_scaling_sweep(G, radii, dirs, 3, {}, opts.workers);
  bool ok = true;
  std::string det;
  for (int order = 1; order <= 3; ++order) {
    ok = ok && rep.spread_S[order] <= 10.0 && rep.spread_S2[order] <= 10.0;
    det += "|a|=" + std::to_string(order) + ": " + fmt(rep.spread_S[order]) + "/" +
           fmt(rep.spread_S2[order]) + " ";
  }
  res.passed = ok;
  res.detail = "spreads S/S2 " + det;
  return res;
}

CheckResult check_hardy_bounds(const CheckOptions& opts) {
  CheckResult res;
  res.name = "hardy-bounds";
  const int N = 256;
  int paths = opts.quick ? 50 : 1000;
  std::mt19937_64 rng(opts.seed + 59);
  double worst = 0;
  for (int i = 0; i < paths; ++i) {
    DiscretePath h = random_path(2, N, rng);
    for (double p : {2.0, 4.0}) {
      HardyCheck hc = hardy_inequality_check(h, p);
      worst = std::max(worst, hc.ratio);
    }
  }
  bool forward_ok = worst <= 1 + 2.0 / N;

  // T-identity residual halves (at least) when N is quadrupled
  auto t_residual = [&rng](int n) {
    std::normal_distribution<double> gauss(0, 1);
    const double pi = 3.14159265358979323846;
    double worst_res = 0;
    std::vector<double> coef(6);
    for (int rep = 0; rep < 5; ++rep) {
      Mat f(2, n);
      for (int d = 0; d < 2; ++d) {
        for (auto& c : coef) c = gauss(rng);
        for (int i = 0; i < n; ++i) {
          double s = (i + 0.5) / n;
          double v = 0;
          for (size_t m = 0; m < coef.size(); ++m) v += coef[m] * std::cos((m + 1) * pi * s);
          f(d, i) = v;
        }
      }
      DiscretePath h = hardy_apply_T(f);
      // L1 norm; the pointwise defect concentrates at the left endpoint
      double acc = 0;
      for (int i = 1; i <= n; ++i) {
        double s = h.midpoint_s(i);
        Vec hm = 0.5 * (h.nodes.col(i) + h.nodes.col(i - 1));
        acc += (h.slope(i) - hm / s - Vec(f.col(i - 1))).norm() / n;
      }
      worst_res = std::max(worst_res, acc);
    }
    return worst_res;
  };
  double r_coarse = t_residual(N);
  double r_fine = t_residual(4 * N);
  bool identity_ok = r_fine <= 0.5 * r_coarse && r_coarse < 1.0;
  res.passed = forward_ok && identity_ok;
  res.detail = "max Hardy ratio=" + fmt(worst) + " (cap " + fmt(1 + 2.0 / N) +
               "), T-identity res " + fmt(r_coarse) + " -> " + fmt(r_fine);
  return res;
}

CheckResult check_spiral_dynamics(const CheckOptions& opts) {
  CheckResult res;
  res.name = "spiral-dynamics";
  SpiralConfig plain = spiral_sine_config(0.05);
  auto fixed = spiral_fixed_points(plain);
  double theta_sink = 0;
  bool have_sink = false;
  for (const auto& fp : fixed)
    if (fp.f_second < 0) {
      theta_sink = fp.theta;
      have_sink = true;
    }
  double drift = 1e300;
  bool exact_ok = false;
  if (have_sink) {
    SpiralLaunchReport exact = spiral_exact_launch(plain, theta_sink, 2.0);
    drift = exact.max_phase_drift;
    exact_ok = !exact.truncated && drift <= 1e-3;
  }

  // steep multi-well profile so generic launches contract onto a sink by r=1e3
  SpiralConfig steep = spiral_sine_config(0.05, 0.0, 32, 0.078);
  std::vector<double> angles;
  int launches = opts.quick ? 3 : 10;
  for (int i = 0; i < launches; ++i) angles.push_back(2 * 3.14159265358979323846 * i / launches + 0.05);
  auto reports = spiral_attractor_check(steep, angles, 1e3);
  double worst_dev = 0;
  bool all_ok = true;
  for (const auto& r : reports) {
    worst_dev = std::max(worst_dev, r.deviation);
    all_ok = all_ok && !r.truncated && r.deviation <= 0.01;
  }
  res.passed = exact_ok && all_ok;
  res.detail = "exact-spiral drift=" + fmt(drift) + ", worst sink deviation=" + fmt(worst_dev);
  return res;
}

CheckResult check_cross_method(const CheckOptions& opts) {
  CheckResult res;
  res.name = "cross-method";
  std::vector<const MetricField*> ms = {&metrics().euclid2, &metrics().induced_mu1,
                                        &metrics().spiral};
  int total = opts.quick ? 6 : 50;
  int per = (total + 2) / 3;
  std::mt19937_64 rng(opts.seed + 61);
  const int N = 256;
  double worst = 0;
  std::atomic<bool> any_fail(false);
  for (const MetricField* G : ms) {
    std::vector<Vec> pts;
    for (int i = 0; i < per; ++i)
      pts.push_back(rand_log_radius(1.0, 20.0, rng) * rand_dir(G->dim, rng));
    std::vector<double> err(pts.size(), 0);
    parallel_for(static_cast<int>(pts.size()), opts.workers, [&](int i) {
      const Vec& x = pts[i];
      SolverOptions o;
      o.compute_gradient = false;
      GeodesicSolution sol = minimize_energy(*G, x, DiscretePath(), o);
      ShootingResult shot = shoot_to_target(*G, x, 1e-8, N);
      if (!shot.converged) {
        any_fail = true;
        return;
      }
      double e = 0;
      for (int j = 0; j <= N; ++j) {
        Vec y_min = static_cast<double>(j) / N * x + sol.kappa.nodes.col(j);
        e = std::max(e, (shot.pos[j] - y_min).norm());
      }
      err[i] = e / x.norm();
    });
    for (double e : err) worst = std::max(worst, e);
  }
  res.passed = !any_fail && worst <= 1e-3;
  res.detail = "max trajectory gap=" + fmt(worst) + " rel to |x|" +
               (any_fail ? " (shooting failures)" : "");
  return res;
}

using CheckFn = CheckResult (*)(const CheckOptions&);

const std::vector<std::pair<std::string, CheckFn>>& registry() {
  static const std::vector<std::pair<std::string, CheckFn>> r = {
      {"euclidean-exactness", check_euclidean_exactness},
      {"radial-oracle", check_radial_oracle},
      {"eikonal-residual", check_eikonal_residual},
      {"conservation", check_conservation},
      {"minimizer-bounds", check_minimizer_bounds},
      {"hessian-coercivity", check_hessian_coercivity},
      {"observables", check_observables},
      {"perturbation-rates", check_perturbation_rates},
      {"gradient-identity", check_gradient_identity},
      {"derivative-scaling", check_derivative_scaling},
      {"hardy-bounds", check_hardy_bounds},
      {"spiral-dynamics", check_spiral_dynamics},
      {"cross-method", check_cross_method},
  };
  return r;
}

}  // namespace

std::vector<std::string> check_names() {
  std::vector<std::string> out;
  for (const auto& e : registry()) out.push_back(e.first);
  return out;
}

CheckResult run_check(const std::string& name, const CheckOptions& opts) {
  for (const auto& e : registry())
    if (e.first == name) return e.second(opts);
  throw std::invalid_argument("unknown check: " + name);
}

std::vector<CheckResult> run_all_checks(const CheckOptions& opts) {
  std::vector<CheckResult> out;
  for (const auto& e : registry()) out.push_back(e.second(opts));
  return out;
}

}  // namespace eik
