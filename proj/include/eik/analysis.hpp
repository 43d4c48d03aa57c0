#pragma once

#include "eik/solver.hpp"

namespace eik {

struct ObservableTrace {
  std::vector<double> s;
  std::vector<double> A;        // (gamma'.gamma^)/|gamma'|_G
  std::vector<double> B;        // gamma'^ . gamma^
  std::vector<double> pos_norm, vel_norm, vel_norm_G;
  bool zero_hit = false;        // gamma(s) = 0 at some s > 0
};

// A and B are evaluated with the given (unperturbed) base metric even when
// the trajectory was integrated for a perturbed one.
ObservableTrace observable_trace(const MetricField& G_base, const ShootingResult& traj);

struct MonotonicityReport {
  double min_increment = 0;        // min over k of A_{k+1} - A_k
  double min_inequality_margin = 0;  // min of A' - cbar (|g'|_G/|g|)(1 - A^2)
  bool bounds_ok = false;          // A^2, B^2 <= 1 everywhere
};

MonotonicityReport monotonicity_check(const ObservableTrace& trace, double cbar);

// s(x) = S(x)/|x| - 1 from a converged solution.
double s_function(const MetricField& G, const Vec& x, const SolverOptions& opts = {});

struct StabilityReport {
  std::vector<double> eps_values;
  std::vector<double> sup_s;        // sup |s|
  std::vector<double> sup_ds;       // sup |x| |d s|
  std::vector<double> sup_d2s;      // sup |x|^2 |d2 s|
  double slope_s = 0, slope_ds = 0, slope_d2s = 0;  // log-log slopes vs eps
  double ratio_spread_s = 0;        // max/min of sup|s|/eps across the sweep
  int failures = 0;
};

StabilityReport perturbation_sweep(const MetricField& G, const MetricField& delta,
                                   const std::vector<double>& eps_list,
                                   const std::vector<Vec>& x_lattice,
                                   const SolverOptions& opts = {}, int workers = 0);

struct ScalingRow {
  int order = 0;
  double radius = 0;
  double value_S = 0;      // max over directions of <x>^{|a|-1} |d^a S|
  double value_S2 = 0;     // max over directions of <x>^{|a|-2} |d^a S^2|
  bool flagged = false;    // finite-difference noise exceeded signal
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  // ratio of max to min tabulated value across radii per order (1-based index)
  std::vector<double> spread_S, spread_S2;
  std::vector<double> kappa_deriv_norm;  // ||d_xj kappa||_{H1} per radius (first order)
};

ScalingReport derivative_scaling_sweep(const MetricField& G, const std::vector<double>& radii,
                                       const std::vector<Vec>& directions, int max_order = 3,
                                       const SolverOptions& opts = {}, int workers = 0);

// |nabla S G^{-1} nabla S - 1| per lattice point.
std::vector<double> eikonal_residual_scan(const MetricField& G, const std::vector<Vec>& x_lattice,
                                          const SolverOptions& opts = {}, int workers = 0);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Parallel map helper used by the lattice scans.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace eik
