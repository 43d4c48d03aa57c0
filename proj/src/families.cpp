#include "eik/families.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eik/solver.hpp"

namespace eik {

namespace {

const double kPi = 3.14159265358979323846;

// 5-point Gauss-Legendre on [lo, hi]
double gauss5(const std::function<double(double)>& f, double lo, double hi) {
  static const double xs[5] = {-0.906179845938664, -0.538469310105683, 0.0,
                               0.538469310105683, 0.906179845938664};
  static const double ws[5] = {0.236926885056189, 0.478628670499366, 0.568888888888889,
                               0.478628670499366, 0.236926885056189};
  double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  double acc = 0;
  for (int i = 0; i < 5; ++i) acc += ws[i] * f(c + h * xs[i]);
  return acc * h;
}

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  double m = 0.5 * (lo + hi);
  double lm = 0.5 * (lo + m), rm = 0.5 * (m + hi);
  double flm = f(lm), frm = f(rm);
  double left = (m - lo) / 6 * (fa + 4 * flm + fm);
  double right = (hi - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol)
    return left + right + (left + right - whole) / 15;
  return adaptive_simpson(f, lo, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, hi, fm, frm, fb, right, tol / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (hi <= lo) return 0;
  double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
  double whole = (hi - lo) / 6 * (fa + 4 * fm + fb);
  return adaptive_simpson(f, lo, hi, fa, fm, fb, whole, tol, 48);
}

}  // namespace

bool RadialPotential::invariants_hold(double r_max, int samples, double slack) const {
  for (int i = 0; i <= samples; ++i) {
    double r = r_max * i / samples;
    double v = V(r);
    if (v >= lambda + slack && !(lambda == 0 && r == 0 && v == 0)) return false;  // K > 0
    if (K(r) <= 0) return false;
    double br = std::sqrt(1 + r * r);
    double env = std::pow(br, -mu);
    if (-v < a_V * env - slack || -v > A_V * env + slack) return false;
    // virial: r K'/K >= sigma - 2
    if (r > 0 && r * dK(r) / K(r) < sigma - 2 - 1e-9) return false;
  }
  return true;
}

RadialPotential power_law_potential(double mu, double c, double lambda) {
  if (c <= 0) throw std::invalid_argument("power_law_potential: c must be positive");
  if (mu >= 2) throw std::invalid_argument("power_law_potential: mu must be below 2");
  RadialPotential p;
  p.mu = mu;
  p.sigma = 2 - std::max(mu, 0.0);
  p.a_V = p.A_V = c;
  p.lambda = lambda;
  p.V = [c, mu](double r) { return -c * std::pow(1 + r * r, -mu / 2); };
  p.dV = [c, mu](double r) { return c * mu * r * std::pow(1 + r * r, -mu / 2 - 1); };
  p.d2V = [c, mu](double r) {
    double b2 = 1 + r * r;
    return c * mu * std::pow(b2, -mu / 2 - 1) * (1 - (mu + 2) * r * r / b2);
  };
  return p;
}

RadialPotential constant_potential(double v0, double lambda) {
  if (v0 >= 0) throw std::invalid_argument("constant_potential: v0 must be negative");
  RadialPotential p;
  p.mu = 0;
  p.sigma = 2;
  p.a_V = p.A_V = -v0;
  p.lambda = lambda;
  p.V = [v0](double) { return v0; };
  p.dV = [](double) { return 0.0; };
  p.d2V = [](double) { return 0.0; };
  return p;
}

InducedMetricTable::InducedMetricTable(const RadialPotential& pot, int resolution, double r_lo,
                                       double r_hi)
    : pot_(pot) {
  auto sqrtK = [this](double r) { return std::sqrt(pot_.K(r)); };
  sqrtK0_ = sqrtK(0);
  r_.reserve(resolution + 2);
  rho_.reserve(resolution + 2);
  r_.push_back(0);
  rho_.push_back(0);
  double acc = gauss5(sqrtK, 0, r_lo);
  r_.push_back(r_lo);
  rho_.push_back(acc);
  for (int i = 1; i <= resolution; ++i) {
    double r_prev = r_.back();
    double r_next = r_lo * std::pow(r_hi / r_lo, static_cast<double>(i) / resolution);
    acc += gauss5(sqrtK, r_prev, r_next);
    r_.push_back(r_next);
    rho_.push_back(acc);
  }
}

double InducedMetricTable::rho_of_r(double r) const {
  auto sqrtK = [this](double t) { return std::sqrt(pot_.K(t)); };
  if (r <= 0) return 0;
  auto it = std::upper_bound(r_.begin(), r_.end(), r);
  size_t i = it - r_.begin();
  if (i == 0) return gauss5(sqrtK, 0, r);
  size_t j = i - 1;
  return rho_[j] + gauss5(sqrtK, r_[j], r);
}

double InducedMetricTable::r_of_rho(double rho) const {
  if (rho <= 0) return 0;
  double lo, hi, r;
  if (rho <= rho_.back()) {
    auto it = std::upper_bound(rho_.begin(), rho_.end(), rho);
    size_t j = std::min<size_t>(it - rho_.begin(), rho_.size() - 1);
    lo = r_[j - 1];
    hi = r_[j];
    double t = (rho - rho_[j - 1]) / std::max(1e-300, rho_[j] - rho_[j - 1]);
    r = lo + t * (hi - lo);
  } else {
    lo = r_.back();
    hi = lo;
    while (rho_of_r(hi) < rho) {
      lo = hi;
      hi *= 2;
      if (hi > 1e12) throw std::runtime_error("r_of_rho: target out of range");
    }
    r = 0.5 * (lo + hi);
  }
  for (int i = 0; i < 8; ++i) {
    double g = rho_of_r(r) - rho;
    double step = g / std::sqrt(pot_.K(r));
    r -= step;
    if (r < lo || r > hi) r = 0.5 * (lo + hi);
    if (std::abs(step) <= 1e-13 * (1 + r)) break;
  }
  return r;
}

void InducedMetricTable::f_eval(double rho, double& f, double& df, double& d2f) const {
  double K0 = pot_.K(0);
  if (rho < 1e-5) {
    double c1 = pot_.dK(0) / (4 * std::pow(K0, 1.5));
    if (rho < 0.9e-5) {
      // second derivative frozen at the matching threshold
      double fl, dl, d2l;
      f_eval(1e-5, fl, dl, d2l);
      f = 1 + c1 * rho;
      df = c1;
      d2f = d2l;
      return;
    }
  }
  double r = r_of_rho(rho);
  double K = pot_.K(r), dK = pot_.dK(r), d2K = pot_.d2K(r);
  double sK = std::sqrt(K);
  f = sK * r / rho;
  double A = 1 + r * dK / (2 * K);
  df = (A - f) / rho;
  double dA_r = dK / (2 * K) + r * d2K / (2 * K) - r * dK * dK / (2 * K * K);
  double dA_rho = dA_r / sK;
  d2f = (dA_rho - 2 * df) / rho;
}

MetricField build_induced_metric(const RadialPotential& pot, int resolution) {
  auto table = std::make_shared<InducedMetricTable>(pot, resolution);
  auto u_eval = [table](double rho, double& u, double& du, double& d2u) {
    double f, df, d2f;
    table->f_eval(rho, f, df, d2f);
    u = f * f;
    du = 2 * f * df;
    d2u = 2 * (df * df + f * d2f);
  };
  // scan f to estimate the ellipticity interval
  double fmin = 1, fmax = 1;
  for (int i = 0; i <= 200; ++i) {
    double rho = table->rho_min() * std::pow(table->rho_max() / table->rho_min(), i / 200.0);
    double f, df, d2f;
    table->f_eval(rho, f, df, d2f);
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
  }
  MetricField G =
      make_radial_transverse(2, u_eval, fmin * fmin, fmax * fmax, "potential-induced");
  G.order = pot.order;
  return G;
}

MembershipReport verify_membership_O(const RadialPotential& pot, const MetricField& metric,
                                     double r_lo, double r_hi, int n_samples) {
  MembershipReport rep;
  std::vector<Vec> samples;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(0, 2 * kPi);
  for (int i = 0; i < n_samples; ++i) {
    double r = r_lo * std::pow(r_hi / r_lo, static_cast<double>(i) / (n_samples - 1));
    double t = ang(rng);
    Vec x(2);
    x << r * std::cos(t), r * std::sin(t);
    samples.push_back(x);
    rep.max_decomposition_defect =
        std::max(rep.max_decomposition_defect, orthogonal_decomposition_defect(metric, x));
  }
  ConvexityReport conv = convexity_margin(metric, samples);
  rep.cbar = conv.cbar;

  InducedMetricTable table(pot, 4000);
  double fsup = 1;
  for (int i = 0; i <= 200; ++i) {
    double rho = table.rho_min() * std::pow(table.rho_max() / table.rho_min(), i / 200.0);
    double f, df, d2f;
    table.f_eval(rho, f, df, d2f);
    fsup = std::max(fsup, f);
  }
  rep.cbar_expected = (pot.sigma / 2) / fsup;

  // declared lambda-uniform ellipticity window
  double a_decl = 0.99 * std::pow((2 - std::max(pot.mu, 0.0)) / 2, 2);
  double b_decl = 1.01;
  rep.lambda_grid = {0.0, 0.5, 2.0, 10.0};
  if (std::find(rep.lambda_grid.begin(), rep.lambda_grid.end(), pot.lambda) ==
      rep.lambda_grid.end())
    rep.lambda_grid.push_back(pot.lambda);
  rep.uniform_in_lambda = true;
  for (double lam : rep.lambda_grid) {
    RadialPotential p = pot;
    p.lambda = lam;
    MetricField Gl = build_induced_metric(p, 4000);
    auto ab = ellipticity_estimate(Gl, samples);
    rep.a_est.push_back(ab.first);
    rep.b_est.push_back(ab.second);
    if (ab.first < a_decl || ab.second > b_decl) rep.uniform_in_lambda = false;
  }
  rep.in_O = rep.max_decomposition_defect < 1e-9 && rep.cbar >= rep.cbar_expected - 1e-6;
  return rep;
}

double radial_eikonal_oracle(const RadialPotential& pot, double r, double tol) {
  return integrate([&pot](double t) { return std::sqrt(pot.K(t)); }, 0, r, tol);
}

SpiralConfig spiral_sine_config(double eps, double phase, int harmonics, double amplitude) {
  SpiralConfig cfg;
  cfg.eps = eps;
  double A = amplitude, k = harmonics, ph = phase;
  cfg.f = [A, k, ph](double t) { return A * std::sin(k * t + ph); };
  cfg.df = [A, k, ph](double t) { return A * k * std::cos(k * t + ph); };
  cfg.d2f = [A, k, ph](double t) { return -A * k * k * std::sin(k * t + ph); };
  return cfg;
}

namespace {

// C^3 smoothstep on [1, 2]
void cutoff(double r, double& chi, double& dchi, double& d2chi) {
  if (r <= 1) {
    chi = dchi = d2chi = 0;
    return;
  }
  if (r >= 2) {
    chi = 1;
    dchi = d2chi = 0;
    return;
  }
  double t = r - 1;
  chi = ((( -20 * t + 70) * t - 84) * t + 35) * t * t * t * t;
  dchi = (((-140 * t + 420) * t - 420) * t + 140) * t * t * t;
  d2chi = (((-840 * t + 2100) * t - 1680) * t + 420) * t * t;
}

}  // namespace

MetricField build_spiral_metric(const SpiralConfig& cfg) {
  double eps = cfg.eps;
  auto f = cfg.f;
  auto df = cfg.df;
  auto d2f = cfg.d2f;

  // phi(x) = 2 eps f(theta - eps ln r) chi(r); G = e^phi I
  auto phi_parts = [eps, f, df, d2f](const Vec& x, double& phi, Vec& dphi, Mat& d2phi) {
    double r2 = x.squaredNorm();
    double r = std::sqrt(r2);
    double chi, dchi, d2chi;
    cutoff(r, chi, dchi, d2chi);
    if (chi == 0 && dchi == 0) {
      phi = 0;
      dphi = Vec::Zero(2);
      d2phi = Mat::Zero(2, 2);
      return;
    }
    double theta = std::atan2(x[1], x[0]);
    double psi = theta - eps * std::log(r);
    double F = f(psi), dF = df(psi), d2F = d2f(psi);
    Vec n = x / r;
    Vec gt(2);  // grad theta
    gt << -x[1] / r2, x[0] / r2;
    Vec u1 = gt - eps * n / r;  // grad psi
    Mat Ht(2, 2);               // hess theta
    Ht << 2 * x[0] * x[1], x[1] * x[1] - x[0] * x[0], x[1] * x[1] - x[0] * x[0],
        -2 * x[0] * x[1];
    Ht /= r2 * r2;
    Mat Hl = (r2 * Mat::Identity(2, 2) - 2 * x * x.transpose()) / (r2 * r2);  // hess ln r
    Mat Hpsi = Ht - eps * Hl;
    Mat Pi = (Mat::Identity(2, 2) - n * n.transpose()) / r;

    phi = 2 * eps * F * chi;
    dphi = 2 * eps * (dF * chi * u1 + F * dchi * n);
    d2phi = 2 * eps *
            (d2F * chi * u1 * u1.transpose() + dF * chi * Hpsi +
             dF * dchi * (u1 * n.transpose() + n * u1.transpose()) +
             F * d2chi * n * n.transpose() + F * dchi * Pi);
  };

  MetricField G;
  G.dim = 2;
  G.kind = "spiral";
  double fsup = 0;
  for (int i = 0; i <= 256; ++i) fsup = std::max(fsup, std::abs(f(2 * kPi * i / 256.0)));
  G.a = std::exp(-2 * eps * fsup);
  G.b = std::exp(2 * eps * fsup);
  G.value = [phi_parts](const Vec& x) -> Mat {
    double phi;
    Vec dp;
    Mat d2p;
    phi_parts(x, phi, dp, d2p);
    return Mat(std::exp(phi) * Mat::Identity(2, 2));
  };
  G.grad = [phi_parts](const Vec& x) {
    double phi;
    Vec dp;
    Mat d2p;
    phi_parts(x, phi, dp, d2p);
    double e = std::exp(phi);
    std::vector<Mat> out(2);
    for (int k = 0; k < 2; ++k) out[k] = e * dp[k] * Mat::Identity(2, 2);
    return out;
  };
  G.hess = [phi_parts](const Vec& x) {
    double phi;
    Vec dp;
    Mat d2p;
    phi_parts(x, phi, dp, d2p);
    double e = std::exp(phi);
    std::vector<std::vector<Mat>> out(2, std::vector<Mat>(2));
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l)
        out[k][l] = e * (dp[k] * dp[l] + d2p(k, l)) * Mat::Identity(2, 2);
    return out;
  };
  return G;
}

std::vector<SpiralFixedPoint> spiral_fixed_points(const SpiralConfig& cfg, double tol) {
  double target = 1.0 / (1 + cfg.eps * cfg.eps);
  auto g = [&](double t) { return cfg.df(t) - target; };
  std::vector<SpiralFixedPoint> out;
  const int n = 4096;
  for (int i = 0; i < n; ++i) {
    double lo = -kPi + 2 * kPi * i / n;
    double hi = -kPi + 2 * kPi * (i + 1) / n;
    double glo = g(lo), ghi = g(hi);
    if (glo * ghi > 0) continue;
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
      double mid = 0.5 * (lo + hi);
      if (g(lo) * g(mid) <= 0)
        hi = mid;
      else
        lo = mid;
    }
    SpiralFixedPoint fp;
    fp.theta = 0.5 * (lo + hi);
    fp.f_second = cfg.d2f(fp.theta);
    out.push_back(fp);
  }
  return out;
}

namespace {

double wrap_angle(double t) {
  t = std::fmod(t + kPi, 2 * kPi);
  if (t < 0) t += 2 * kPi;
  return t - kPi;
}

// unwrapped polar angle along a trajectory
std::vector<double> unwrap_theta(const std::vector<Vec>& pos) {
  std::vector<double> th(pos.size());
  th[0] = std::atan2(pos[0][1], pos[0][0]);
  for (size_t i = 1; i < pos.size(); ++i) {
    double raw = std::atan2(pos[i][1], pos[i][0]);
    double prev = th[i - 1];
    double delta = wrap_angle(raw - wrap_angle(prev));
    th[i] = prev + delta;
  }
  return th;
}

}  // namespace

std::vector<SpiralLaunchReport> spiral_attractor_check(const SpiralConfig& cfg,
                                                       const std::vector<double>& launch_angles,
                                                       double r_stop) {
  MetricField G = build_spiral_metric(cfg);
  auto fixed = spiral_fixed_points(cfg);
  std::vector<double> sinks;
  for (const auto& fp : fixed)
    if (fp.f_second < 0) sinks.push_back(fp.theta);

  std::vector<SpiralLaunchReport> out;
  const double r0 = 3.0;
  for (double alpha : launch_angles) {
    Vec x0(2), v0(2);
    x0 << r0 * std::cos(alpha), r0 * std::sin(alpha);
    v0 = x0 / r0;  // radial launch
    ShootingResult traj = trace_geodesic_to_radius(G, x0, v0, r_stop, 2e-3, 1e8);
    SpiralLaunchReport rep;
    rep.launch_angle = alpha;
    rep.truncated = !traj.converged;
    auto th = unwrap_theta(traj.pos);
    double rf = traj.pos.back().norm();
    rep.final_r = rf;
    rep.final_phase = th.back() - cfg.eps * std::log(rf);
    double best = 1e300;
    for (double s : sinks) {
      double d = std::abs(wrap_angle(rep.final_phase - s));
      if (d < best) {
        best = d;
        rep.nearest_sink = s;
      }
    }
    rep.deviation = best;
    out.push_back(rep);
  }
  return out;
}

SpiralLaunchReport spiral_exact_launch(const SpiralConfig& cfg, double theta0, double r_decades) {
  MetricField G = build_spiral_metric(cfg);
  double r0 = std::max(4.0, std::exp(-theta0 / cfg.eps));
  double th_start = theta0 + cfg.eps * std::log(r0);
  Vec x0(2), v0(2);
  x0 << r0 * std::cos(th_start), r0 * std::sin(th_start);
  // tangent of theta(r) = theta0 + eps ln r
  double c = std::cos(th_start), s = std::sin(th_start);
  v0 << c - cfg.eps * s, s + cfg.eps * c;
  v0.normalize();
  double r_stop = r0 * std::pow(10.0, r_decades);
  ShootingResult traj = trace_geodesic_to_radius(G, x0, v0, r_stop, 1e-3, 1e9);

  SpiralLaunchReport rep;
  rep.launch_angle = th_start;
  rep.truncated = !traj.converged;
  auto th = unwrap_theta(traj.pos);
  double rf = traj.pos.back().norm();
  rep.final_r = rf;
  rep.final_phase = th.back() - cfg.eps * std::log(rf);
  rep.nearest_sink = theta0;
  rep.deviation = std::abs(wrap_angle(rep.final_phase - theta0));
  for (size_t i = 0; i < th.size(); ++i) {
    double phase = th[i] - cfg.eps * std::log(traj.pos[i].norm());
    rep.max_phase_drift = std::max(rep.max_phase_drift, std::abs(phase - theta0));
  }
  return rep;
}

}  // namespace eik
