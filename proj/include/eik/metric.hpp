#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "eik/types.hpp"

namespace eik {

/// A symmetric positive matrix field G(x) on R^d whose derivatives decay
/// like <x>^{-|alpha|}, uniformly elliptic between the declared constants
/// a and b.  Built-in kinds carry closed-form first and second derivative
/// evaluators; user-supplied fields may rely on the finite-difference
/// fallbacks installed by finalize().
struct MetricField {
  int dim = 2;
  int order = 3;  // smoothness order l >= 2
  double a = 1.0;
  double b = 1.0;
  std::string kind = "euclidean";  // euclidean | analytic | potential-induced | spiral | perturbed

  std::function<Mat(const Vec&)> value;
  std::function<std::vector<Mat>(const Vec&)> grad;                // grad(x)[k] = d_k G
  std::function<std::vector<std::vector<Mat>>(const Vec&)> hess;   // hess(x)[k][l] = d_k d_l G

  // Retained for kind == "perturbed" so ||G~ - G||_l can be measured exactly.
  std::shared_ptr<const MetricField> base;
  std::shared_ptr<const MetricField> delta;
  double eps = 0.0;

  // Installs finite-difference grad/hess when closed forms are absent.
  void finalize();

  Mat operator()(const Vec& x) const { return value(x); }
};

struct ConvexityReport {
  std::vector<Vec> samples;
  std::vector<double> margins;  // smallest eigenvalue of P_perp(G + x.dG/2)P_perp rel. P_perp G P_perp
  double cbar = 0.0;            // infimum over samples
  bool in_class = false;        // margin >= threshold at all samples
};

struct SeminormReport {
  int max_order = 0;
  std::vector<double> per_order;  // sup over lattice and i,j of <x>^{|a|} |d^a g_ij|, by |a|
  double estimate = 0.0;          // max over orders
};

// --- operations -------------------------------------------------------------

Mat eval_metric(const MetricField& G, const Vec& x);

// (a_est, b_est): extreme eigenvalues of G over the samples.
std::pair<double, double> ellipticity_estimate(const MetricField& G, const std::vector<Vec>& samples);

// Operator norm of G(x) - P - P_perp G(x) P_perp; zero iff the orthogonal
// decomposition holds at x.
double orthogonal_decomposition_defect(const MetricField& G, const Vec& x);

ConvexityReport convexity_margin(const MetricField& G, const std::vector<Vec>& samples,
                                 int directions_per_point = 32, double threshold = 1e-6,
                                 unsigned long long seed = 1);

// Sampled estimate of sup <x>^{|a|} |d^a (g~_ij - g_ij)| up to the common order.
SeminormReport perturbation_distance(const MetricField& G_tilde, const MetricField& G,
                                     const std::vector<Vec>& lattice);

// Sampled estimate of ||G||_l itself.
SeminormReport seminorm_estimate(const MetricField& G, const std::vector<Vec>& lattice,
                                 int max_order);

// Default log-radial lattice: radii log-spaced in [r_lo, r_hi] x directions.
std::vector<Vec> log_radial_lattice(int dim, int n_radii = 64, int n_dirs = 32,
                                    double r_lo = 1e-2, double r_hi = 1e4,
                                    unsigned long long seed = 7);

// Projections onto x^ and its orthogonal complement.
Mat radial_projector(const Vec& x);

// --- built-in analytic kinds ------------------------------------------------

MetricField make_euclidean(int dim);
MetricField make_conformal_constant(int dim, double c);

// G = P + u(|x|) P_perp for scalar transverse profile u with derivatives;
// shared by the potential-induced construction and analytic test fields.
MetricField make_radial_transverse(int dim, std::function<void(double, double&, double&, double&)> u_eval,
                                   double a, double b, const std::string& kind = "analytic");

// Compactly supported anisotropic bump perturbation, sampled seminorm 1.
MetricField make_bump_perturbation(int dim, const Vec& center, double radius, int l = 3);
// Slowly decaying radial tail perturbation, sampled seminorm 1.
MetricField make_tail_perturbation(int dim, int l = 3);

MetricField make_perturbed(std::shared_ptr<const MetricField> base,
                           std::shared_ptr<const MetricField> delta, double eps);

}  // namespace eik
