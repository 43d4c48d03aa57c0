#pragma once

#include <optional>

#include "eik/path.hpp"

namespace eik {

struct GeodesicSolution {
  Vec x;
  DiscretePath kappa;
  double distance = 0;      // S(x) = sqrt(energy)
  Vec grad_distance;        // nabla S(x)
  double residual = 0;      // H^1-dual norm of the energy gradient at kappa
  double hessian_lambda_min = 0;  // filled by hessian_smallest_eigenvalue when requested
  bool hessian_indefinite = false;
  bool converged = false;
  int iterations = 0;
};

struct ShootingResult {
  Vec v;                     // initial velocity
  std::vector<double> s;     // sample times
  std::vector<Vec> pos;      // gamma(s)
  std::vector<Vec> vel;      // gamma'(s)
  double conservation_defect = 0;  // relative drift of gamma' G gamma'
  bool converged = false;
  int iterations = 0;
};

struct SolverOptions {
  double tol = 1e-9;
  int max_iterations = 200;
  int n_intervals = 256;
  bool compute_gradient = true;
};

// Damped Newton minimization of the path energy; S(x) = sqrt(E) at the
// minimizer.  Throws on non-convergence past the iteration cap.
GeodesicSolution minimize_energy(const MetricField& G, const Vec& x, const DiscretePath& init,
                                 const SolverOptions& opts = {});
GeodesicSolution minimize_energy(const MetricField& G, const Vec& x, double tol = 1e-9);

// gamma'' per the geodesic equation for G.
Vec geodesic_ode_rhs(const MetricField& G, const Vec& gamma, const Vec& gamma_dot);

// Classical RK4 on [0, T] from gamma(0) = x0, gamma'(0) = v.
ShootingResult integrate_geodesic(const MetricField& G, const Vec& v, int steps = 1000,
                                  const Vec* x0 = nullptr, double T = 1.0);

// Long-range geodesic tracing with radius-proportional steps, for the
// spiral-attractor experiments.  Stops once |gamma| >= r_stop.
ShootingResult trace_geodesic_to_radius(const MetricField& G, const Vec& x0, const Vec& v,
                                        double r_stop, double rel_step = 2e-3,
                                        double s_cap = 1e9);

// Quasi-Newton on v -> gamma_v(1) - x with finite-difference Jacobian.
ShootingResult shoot_to_target(const MetricField& G, const Vec& x, double tol = 1e-8,
                               int steps = 1000, int max_iterations = 60);

// nabla S(x) = S^{-1} G(x) (x + kappa'(1)) with kappa'(1) by Richardson
// extrapolation of the last two subinterval slopes.
Vec gradient_of_distance(const MetricField& G, const GeodesicSolution& sol);

// Smallest eigenvalue of the discrete Hessian in the H^1 inner product,
// by inverse power iteration on the pencil (H, L).
double hessian_smallest_eigenvalue(const MetricField& G, const GeodesicSolution& sol,
                                   int iterations = 200);

}  // namespace eik
