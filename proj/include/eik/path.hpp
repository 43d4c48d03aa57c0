#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "eik/metric.hpp"
#include "eik/types.hpp"

namespace eik {

/// Piecewise-linear H^1_0 path on the uniform grid s_i = i/N with zero
/// endpoints.  Columns of `nodes` are the values kappa_i in R^d.
struct DiscretePath {
  Mat nodes;  // d x (N+1)

  DiscretePath() = default;
  DiscretePath(int dim, int n_intervals) : nodes(Mat::Zero(dim, n_intervals + 1)) {}

  int dim() const { return static_cast<int>(nodes.rows()); }
  int intervals() const { return static_cast<int>(nodes.cols()) - 1; }

  // Constant slope on subinterval i (1-based, i = 1..N).
  Vec slope(int i) const { return (nodes.col(i) - nodes.col(i - 1)) * intervals(); }
  double midpoint_s(int i) const { return (i - 0.5) / intervals(); }

  void enforce_boundary();
  bool finite() const;

  // H^1_0 inner product int_0^1 h1'.h2' ds (exact for piecewise-linear).
  static double inner(const DiscretePath& h1, const DiscretePath& h2);
  double norm() const { return std::sqrt(inner(*this, *this)); }
};

DiscretePath sample_path(int dim, int n_intervals, const std::function<Vec(double)>& f);
DiscretePath random_path(int dim, int n_intervals, std::mt19937_64& rng, int n_modes = 8);

// --- energy functional ------------------------------------------------------

// Midpoint-rule value of int y' G(y) y' ds with y(s) = s x + kappa(s).
double energy(const MetricField& G, const Vec& x, const DiscretePath& kappa);

// Discrete gradient of the energy with respect to the interior nodes.
// Returned as nodal cotangent values (same layout as a path, endpoints zero).
DiscretePath energy_gradient(const MetricField& G, const Vec& x, const DiscretePath& kappa);

// Value of <d2_kappa E(x,kappa) h1, h2>.
double hessian_quadratic_form(const MetricField& G, const Vec& x, const DiscretePath& kappa,
                              const DiscretePath& h1, const DiscretePath& h2);

/// Block-tridiagonal discrete Hessian over the interior nodes.  diag[j] is
/// the d x d block coupling node j+1 with itself, upper[j] couples node j+1
/// with node j+2.
struct BlockTridiagonal {
  std::vector<Mat> diag;
  std::vector<Mat> upper;
  std::vector<Mat> lower;

  int blocks() const { return static_cast<int>(diag.size()); }
  // Solves A z = rhs in place; returns false on a singular pivot.
  bool solve(std::vector<Vec>& rhs) const;
  Vec apply(const Vec& v, int d) const;
  Mat dense(int d) const;
};

BlockTridiagonal energy_hessian(const MetricField& G, const Vec& x, const DiscretePath& kappa);

// H^1_0 stiffness action and solve (per component tridiagonal Laplacian).
Vec stiffness_apply(const Vec& v, int d, int n_intervals);
Vec stiffness_solve(const Vec& rhs, int d, int n_intervals);

// H^1-dual norm of a nodal cotangent vector.
double dual_norm(const DiscretePath& cotangent);

// --- H^p norms and Hardy operators -----------------------------------------

// (sum_i |h'|^p / N)^{1/p}, p in (1, inf).
double hp_norm(const DiscretePath& h, double p);

enum class HardyKind { S, T, R };

// f holds midpoint samples (d x N).  S returns midpoint samples; T and R
// return paths vanishing at both endpoints.
Mat hardy_apply_S(const Mat& f);
DiscretePath hardy_apply_T(const Mat& f);
DiscretePath hardy_apply_R(const Mat& f);

struct HardyCheck {
  double lhs = 0;       // ||h(.)/s||_p
  double rhs = 0;       // A_p ||h||_{H^p}
  double ratio = 0;     // lhs/rhs, 0 for the zero path
  double reverse_lhs = 0;  // ||h||_{H^p}
  double reverse_rhs = 0;  // B_p ||h' - h/s||_p, B_p = A_q + 1
  double reverse_ratio = 0;
};

HardyCheck hardy_inequality_check(const DiscretePath& h, double p);

// Weighted pairing [h,g] = int 2 s^2 (h/s)' G(y(s)) (g/s)' ds along y = s x + kappa.
double weighted_pairing(const MetricField& G, const Vec& x, const DiscretePath& kappa,
                        const DiscretePath& h, const DiscretePath& g);

}  // namespace eik
