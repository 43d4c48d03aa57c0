#pragma once

#include "eik/metric.hpp"

namespace eik {

/// Radial potential V(r) < 0 with decay exponent mu (mu in (0,2): decaying,
/// mu <= 0: non-decaying), virial constant sigma in (0,2], envelope
/// constants 0 < a_V <= A_V and energy lambda >= 0.
struct RadialPotential {
  std::function<double(double)> V;       // V(r)
  std::function<double(double)> dV;      // V'(r)
  std::function<double(double)> d2V;     // V''(r)
  double mu = 1.0;
  double sigma = 1.0;
  double a_V = 1.0;
  double A_V = 1.0;
  double lambda = 0.0;
  int order = 3;

  double K(double r) const { return 2.0 * (lambda - V(r)); }
  double dK(double r) const { return -2.0 * dV(r); }
  double d2K(double r) const { return -2.0 * d2V(r); }

  // Checks the envelope and virial inequalities on a sampled range.
  bool invariants_hold(double r_max = 1e4, int samples = 2000, double slack = 1e-9) const;
};

// V(r) = -c <r>^{-mu}; sigma = 2 - max(mu, 0) for these profiles.
RadialPotential power_law_potential(double mu, double c = 1.0, double lambda = 0.0);
RadialPotential constant_potential(double v0 = -0.5, double lambda = 0.0);

/// Tabulated change of variables rho(r) = int_0^r sqrt(K) with inverse and
/// the transverse conformal factor f(rho).
class InducedMetricTable {
 public:
  InducedMetricTable(const RadialPotential& pot, int resolution = 10000,
                     double r_lo = 1e-3, double r_hi = 1e5);

  double rho_of_r(double r) const;
  double r_of_rho(double rho) const;  // bisection + Newton to 1e-12 relative
  // f and its first two rho-derivatives.
  void f_eval(double rho, double& f, double& df, double& d2f) const;

  double rho_min() const { return rho_[1]; }
  double rho_max() const { return rho_.back(); }
  const RadialPotential& potential() const { return pot_; }

 private:
  RadialPotential pot_;
  std::vector<double> r_, rho_;
  double sqrtK0_;
};

struct MembershipReport {
  double max_decomposition_defect = 0;
  double cbar = 0;
  double cbar_expected = 0;  // (sigma/2)/sup f
  std::vector<double> lambda_grid;
  std::vector<double> a_est, b_est;  // per lambda
  bool uniform_in_lambda = false;    // all per-lambda estimates within declared [a,b]
  bool in_O = false;
};

// G(y) = P + f^2(|y|) P_perp of kind potential-induced; G(0) = I.
MetricField build_induced_metric(const RadialPotential& pot, int resolution = 10000);

MembershipReport verify_membership_O(const RadialPotential& pot, const MetricField& metric,
                                     double r_lo = 1e-2, double r_hi = 1e3, int n_samples = 48);

// S(r) = int_0^r sqrt(2(lambda - V)) d tau by adaptive quadrature, abs tol 1e-10.
double radial_eikonal_oracle(const RadialPotential& pot, double r, double tol = 1e-10);

/// 2-pi-periodic angular profile with parameter eps; the conformal factor is
/// G = e^{2 eps f(theta - eps ln r) chi(r)} I with chi a quintic smoothstep
/// on [1, 2].
struct SpiralConfig {
  std::function<double(double)> f;    // profile, max f' >= 1
  std::function<double(double)> df;
  std::function<double(double)> d2f;
  double eps = 0.05;
  int order = 3;
};

SpiralConfig spiral_sine_config(double eps = 0.05, double phase = 0.0, int harmonics = 1,
                                double amplitude = 1.0);

MetricField build_spiral_metric(const SpiralConfig& cfg);

// Roots of f'(theta) = (1+eps^2)^{-1} in [-pi, pi), with stability sign f''.
struct SpiralFixedPoint {
  double theta = 0;
  double f_second = 0;  // f''(theta); < 0 marks a sink
};
std::vector<SpiralFixedPoint> spiral_fixed_points(const SpiralConfig& cfg, double tol = 1e-12);

struct SpiralLaunchReport {
  double launch_angle = 0;
  double final_r = 0;
  double final_phase = 0;          // theta - eps ln r at the end
  double nearest_sink = 0;         // nearest sink phase (mod 2 pi)
  double deviation = 0;            // |final_phase - nearest_sink| (mod 2 pi)
  double max_phase_drift = 0;      // for exact-spiral launches: sup |phase - phase(0)|
  bool truncated = false;
};

// Integrates geodesics outward and measures the drift of theta - eps ln r.
std::vector<SpiralLaunchReport> spiral_attractor_check(const SpiralConfig& cfg,
                                                       const std::vector<double>& launch_angles,
                                                       double r_stop = 1e3);

// Exact-spiral launch from (r0, 0) with velocity (C, eps C); r0 = e^{-theta0/eps}.
SpiralLaunchReport spiral_exact_launch(const SpiralConfig& cfg, double theta0, double r_decades = 2.0);

}  // namespace eik
