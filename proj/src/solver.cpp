#include "eik/solver.hpp"

#include <cmath>
#include <stdexcept>

namespace eik {

namespace {

std::vector<Vec> flatten_interior(const DiscretePath& g) {
  int n = g.intervals(), d = g.dim();
  std::vector<Vec> out(n - 1);
  for (int j = 1; j <= n - 1; ++j) out[j - 1] = g.nodes.col(j);
  return out;
}

void add_stiffness(BlockTridiagonal& H, double rho, int d, int n) {
  Mat I = Mat::Identity(d, d);
  for (auto& m : H.diag) m += rho * 2.0 * n * I;
  for (auto& m : H.upper) m -= rho * n * I;
  for (auto& m : H.lower) m -= rho * n * I;
}

}  // namespace

GeodesicSolution minimize_energy(const MetricField& G, const Vec& x, const DiscretePath& init,
                                 const SolverOptions& opts) {
  const int n = opts.n_intervals;
  const int d = G.dim;
  DiscretePath kappa = init;
  if (kappa.nodes.size() == 0) kappa = DiscretePath(d, n);
  if (kappa.intervals() != n || kappa.dim() != d)
    throw std::invalid_argument("minimize_energy: initial path shape mismatch");
  kappa.enforce_boundary();

  GeodesicSolution sol;
  sol.x = x;
  double E = energy(G, x, kappa);
  double scale = std::max(1.0, x.squaredNorm());

  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    DiscretePath grad = energy_gradient(G, x, kappa);
    double res = dual_norm(grad);
    if (res <= opts.tol * scale) {
      sol.converged = true;
      sol.residual = res;
      break;
    }

    // Newton direction with stiffness regularization fallback
    BlockTridiagonal H = energy_hessian(G, x, kappa);
    Vec gflat((n - 1) * d);
    for (int j = 1; j <= n - 1; ++j) gflat.segment((j - 1) * d, d) = grad.nodes.col(j);

    Vec z;
    double rho = 0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      BlockTridiagonal Hr = H;
      if (rho > 0) add_stiffness(Hr, rho, d, n);
      std::vector<Vec> rhs = flatten_interior(grad);
      bool ok = Hr.solve(rhs);
      if (ok) {
        Vec cand((n - 1) * d);
        for (int j = 0; j < n - 1; ++j) cand.segment(j * d, d) = rhs[j];
        if (cand.allFinite() && gflat.dot(cand) > 0) {
          z = cand;
          break;
        }
      }
      rho = rho == 0 ? 1e-4 * scale : 10 * rho;
    }
    if (z.size() == 0) z = stiffness_solve(gflat, d, n);  // steepest descent in H^1

    double slope = gflat.dot(z);
    double t = 1.0;
    DiscretePath trial = kappa;
    double Enew = E;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (int j = 1; j <= n - 1; ++j)
        trial.nodes.col(j) = kappa.nodes.col(j) - t * z.segment((j - 1) * d, d);
      Enew = energy(G, x, trial);
      // the roundoff allowance keeps the search from stalling when the
      // predicted decrease is below the representable granularity of E
      if (std::isfinite(Enew) && Enew <= E - 1e-4 * t * slope + 1e-14 * std::max(1.0, E)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      sol.residual = res;
      break;
    }
    kappa = trial;
    E = Enew;
  }
  sol.iterations = it;
  if (!sol.converged)
    throw std::runtime_error("minimize_energy: no convergence after " +
                             std::to_string(sol.iterations) + " iterations");
  sol.kappa = kappa;
  sol.distance = std::sqrt(std::max(0.0, E));
  if (opts.compute_gradient) sol.grad_distance = gradient_of_distance(G, sol);
  return sol;
}

GeodesicSolution minimize_energy(const MetricField& G, const Vec& x, double tol) {
  SolverOptions opts;
  opts.tol = tol;
  return minimize_energy(G, x, DiscretePath(), opts);
}

Vec geodesic_ode_rhs(const MetricField& G, const Vec& gamma, const Vec& gamma_dot) {
  int d = static_cast<int>(gamma.size());
  Mat g = G.value(gamma);
  auto dG = G.grad(gamma);
  Vec w(d);
  Mat conv = Mat::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    w[k] = gamma_dot.dot(dG[k] * gamma_dot);
    conv += gamma_dot[k] * dG[k];
  }
  return g.ldlt().solve(Vec(0.5 * w - conv * gamma_dot));
}

namespace {

void rk4_step(const MetricField& G, Vec& y, Vec& v, double h) {
  Vec k1v = geodesic_ode_rhs(G, y, v);
  Vec k1y = v;
  Vec k2v = geodesic_ode_rhs(G, y + 0.5 * h * k1y, v + 0.5 * h * k1v);
  Vec k2y = v + 0.5 * h * k1v;
  Vec k3v = geodesic_ode_rhs(G, y + 0.5 * h * k2y, v + 0.5 * h * k2v);
  Vec k3y = v + 0.5 * h * k2v;
  Vec k4v = geodesic_ode_rhs(G, y + h * k3y, v + h * k3v);
  Vec k4y = v + h * k3v;
  y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
  v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
}

}  // namespace

ShootingResult integrate_geodesic(const MetricField& G, const Vec& v0, int steps, const Vec* x0,
                                  double T) {
  ShootingResult out;
  out.v = v0;
  Vec y = x0 ? *x0 : Vec(Vec::Zero(v0.size()));
  Vec v = v0;
  double c0 = v.dot(G.value(y) * v);
  double defect = 0;
  out.s.push_back(0);
  out.pos.push_back(y);
  out.vel.push_back(v);
  double h = T / steps;
  for (int i = 1; i <= steps; ++i) {
    rk4_step(G, y, v, h);
    out.s.push_back(i * h);
    out.pos.push_back(y);
    out.vel.push_back(v);
    double c = v.dot(G.value(y) * v);
    defect = std::max(defect, std::abs(c - c0) / std::max(1e-300, std::abs(c0)));
  }
  out.conservation_defect = defect;
  out.converged = y.allFinite() && v.allFinite();
  return out;
}

ShootingResult trace_geodesic_to_radius(const MetricField& G, const Vec& x0, const Vec& v0,
                                        double r_stop, double rel_step, double s_cap) {
  ShootingResult out;
  out.v = v0;
  Vec y = x0, v = v0;
  double c0 = v.dot(G.value(y) * v);
  double defect = 0, s = 0;
  out.s.push_back(0);
  out.pos.push_back(y);
  out.vel.push_back(v);
  while (y.norm() < r_stop) {
    double h = rel_step * std::max(1e-3, y.norm()) / std::max(1e-12, v.norm());
    if (s + h > s_cap) break;
    rk4_step(G, y, v, h);
    s += h;
    out.s.push_back(s);
    out.pos.push_back(y);
    out.vel.push_back(v);
    double c = v.dot(G.value(y) * v);
    defect = std::max(defect, std::abs(c - c0) / std::max(1e-300, std::abs(c0)));
    if (!y.allFinite() || !v.allFinite()) break;
  }
  out.conservation_defect = defect;
  out.converged = y.allFinite() && v.allFinite() && y.norm() >= r_stop;
  return out;
}

ShootingResult shoot_to_target(const MetricField& G, const Vec& x, double tol, int steps,
                               int max_iterations) {
  int d = static_cast<int>(x.size());
  Vec v = x;
  ShootingResult traj;
  double scale = std::max(1.0, x.norm());
  for (int it = 0; it < max_iterations; ++it) {
    traj = integrate_geodesic(G, v, steps);
    Vec F = traj.pos.back() - x;
    traj.iterations = it + 1;
    if (F.norm() <= tol * scale) {
      traj.converged = true;
      return traj;
    }
    Mat J(d, d);
    double h = 1e-6 * std::max(1.0, v.norm());
    for (int k = 0; k < d; ++k) {
      Vec vp = v;
      vp[k] += h;
      ShootingResult tp = integrate_geodesic(G, vp, steps);
      J.col(k) = (tp.pos.back() - (x + F)) / h;
    }
    Vec dv = J.fullPivLu().solve(F);
    if (!dv.allFinite()) break;
    // damped update, halving until the endpoint miss shrinks
    double t = 1.0;
    for (int ls = 0; ls < 30; ++ls) {
      ShootingResult cand = integrate_geodesic(G, Vec(v - t * dv), steps);
      if (cand.pos.back().allFinite() && (cand.pos.back() - x).norm() < F.norm()) {
        v -= t * dv;
        break;
      }
      t *= 0.5;
      if (ls == 29) return traj;  // stuck; caller inspects converged flag
    }
  }
  traj.converged = false;
  return traj;
}

Vec gradient_of_distance(const MetricField& G, const GeodesicSolution& sol) {
  int n = sol.kappa.intervals();
  Vec sigN = sol.kappa.slope(n);
  Vec sigN1 = sol.kappa.slope(n - 1);
  Vec kdot1 = 0.5 * (3 * sigN - sigN1);
  return G.value(sol.x) * (sol.x + kdot1) / sol.distance;
}

double hessian_smallest_eigenvalue(const MetricField& G, const GeodesicSolution& sol,
                                   int /*iterations*/) {
  int n = sol.kappa.intervals();
  int d = sol.kappa.dim();
  BlockTridiagonal H = energy_hessian(G, sol.x, sol.kappa);
  Mat Hd = H.dense(d);
  Mat Ld = Mat::Zero((n - 1) * d, (n - 1) * d);
  for (int j = 0; j < n - 1; ++j) {
    Ld.block(j * d, j * d, d, d) = 2.0 * n * Mat::Identity(d, d);
    if (j + 1 < n - 1) {
      Ld.block(j * d, (j + 1) * d, d, d) = -static_cast<double>(n) * Mat::Identity(d, d);
      Ld.block((j + 1) * d, j * d, d, d) = -static_cast<double>(n) * Mat::Identity(d, d);
    }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(Mat(0.5 * (Hd + Hd.transpose())), Ld);
  return ges.eigenvalues().minCoeff();
}

}  // namespace eik
