#include "eik/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace eik {

namespace {

std::string point_str(const Vec& x) {
  std::ostringstream os;
  os << "(" << x.transpose() << ")";
  return os.str();
}

double fd_step(const Vec& x) { return 1e-4 * std::max(1.0, x.norm()); }

}  // namespace

void MetricField::finalize() {
  if (!value) throw std::invalid_argument("MetricField: missing value evaluator");
  if (!grad) {
    auto v = value;
    int d = dim;
    grad = [v, d](const Vec& x) {
      double h = fd_step(x);
      std::vector<Mat> dG(d);
      for (int k = 0; k < d; ++k) {
        Vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        dG[k] = (v(xp) - v(xm)) / (2 * h);
      }
      return dG;
    };
  }
  if (!hess) {
    auto g = grad;
    int d = dim;
    hess = [g, d](const Vec& x) {
      double h = fd_step(x);
      std::vector<std::vector<Mat>> d2G(d, std::vector<Mat>(d));
      for (int l = 0; l < d; ++l) {
        Vec xp = x, xm = x;
        xp[l] += h;
        xm[l] -= h;
        auto gp = g(xp), gm = g(xm);
        for (int k = 0; k < d; ++k) d2G[k][l] = (gp[k] - gm[k]) / (2 * h);
      }
      // symmetrize the mixed partials
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < k; ++l) {
          Mat m = 0.5 * (d2G[k][l] + d2G[l][k]);
          d2G[k][l] = m;
          d2G[l][k] = m;
        }
      return d2G;
    };
  }
}

Mat eval_metric(const MetricField& G, const Vec& x) {
  if (!x.allFinite()) throw std::invalid_argument("eval_metric: non-finite point " + point_str(x));
  Mat g = G.value(x);
  if (!g.allFinite())
    throw std::runtime_error("eval_metric: non-finite entries at " + point_str(x));
  return g;
}

std::pair<double, double> ellipticity_estimate(const MetricField& G,
                                               const std::vector<Vec>& samples) {
  if (samples.empty()) throw std::invalid_argument("ellipticity_estimate: empty sample set");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Vec& x : samples) {
    Eigen::SelfAdjointEigenSolver<Mat> es(eval_metric(G, x));
    double emin = es.eigenvalues().minCoeff();
    double emax = es.eigenvalues().maxCoeff();
    if (emin <= 0)
      throw std::runtime_error("ellipticity_estimate: non-SPD sample at " + point_str(x));
    lo = std::min(lo, emin);
    hi = std::max(hi, emax);
  }
  return {lo, hi};
}

Mat radial_projector(const Vec& x) {
  double r = x.norm();
  if (r == 0) throw std::invalid_argument("radial_projector: x = 0");
  Vec n = x / r;
  return n * n.transpose();
}

double orthogonal_decomposition_defect(const MetricField& G, const Vec& x) {
  if (x.norm() == 0)
    throw std::invalid_argument("orthogonal_decomposition_defect: x = 0");
  Mat g = eval_metric(G, x);
  Mat P = radial_projector(x);
  Mat Pp = Mat::Identity(G.dim, G.dim) - P;
  Mat defect = g - P - Pp * g * Pp;
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (defect + defect.transpose())));
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

ConvexityReport convexity_margin(const MetricField& G, const std::vector<Vec>& samples,
                                 int directions_per_point, double threshold,
                                 unsigned long long seed) {
  ConvexityReport rep;
  rep.cbar = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0, 1);
  const int d = G.dim;
  for (const Vec& x : samples) {
    if (x.norm() == 0) throw std::invalid_argument("convexity_margin: sample at origin");
    if (orthogonal_decomposition_defect(G, x) > 1e-8)
      throw std::runtime_error("convexity_margin: decomposition defect above tolerance at " +
                               point_str(x));
    Mat g = eval_metric(G, x);
    auto dG = G.grad(x);
    Mat xdG = Mat::Zero(d, d);
    for (int k = 0; k < d; ++k) xdG += x[k] * dG[k];
    Mat M = g + 0.5 * xdG;

    // orthonormal basis of the complement of x^
    Vec n = x.normalized();
    Eigen::HouseholderQR<Mat> qr(n);
    Mat Q = qr.householderQ();
    Mat B = Q.rightCols(d - 1);

    Mat Mr = B.transpose() * M * B;
    Mat Gr = B.transpose() * g * B;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(0.5 * (Mr + Mr.transpose()), Gr);
    double margin = ges.eigenvalues().minCoeff();

    for (int t = 0; t < directions_per_point; ++t) {
      Vec w(d - 1);
      for (int i = 0; i < d - 1; ++i) w[i] = gauss(rng);
      if (w.norm() == 0) continue;
      Vec v = B * w;
      double denom = v.dot(g * v);
      if (denom > 0) margin = std::min(margin, v.dot(M * v) / denom);
    }
    rep.samples.push_back(x);
    rep.margins.push_back(margin);
    rep.cbar = std::min(rep.cbar, margin);
  }
  rep.in_class = rep.cbar >= threshold;
  return rep;
}

namespace {

// Third partials via central differences of the (closed-form or FD) hess.
double third_partial_sup(const MetricField& G, const Vec& x) {
  const int d = G.dim;
  double h = 1e-3 * std::max(1.0, x.norm());
  double sup = 0;
  for (int m = 0; m < d; ++m) {
    Vec xp = x, xm = x;
    xp[m] += h;
    xm[m] -= h;
    auto hp = G.hess(xp), hm = G.hess(xm);
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        sup = std::max(sup, ((hp[k][l] - hm[k][l]) / (2 * h)).cwiseAbs().maxCoeff());
  }
  return sup;
}

SeminormReport seminorm_of(const std::function<Mat(const Vec&)>& value,
                           const std::function<std::vector<Mat>(const Vec&)>& grad,
                           const std::function<std::vector<std::vector<Mat>>(const Vec&)>& hess,
                           const MetricField* third_of, const std::vector<Vec>& lattice,
                           int max_order) {
  SeminormReport rep;
  rep.max_order = max_order;
  rep.per_order.assign(max_order + 1, 0.0);
  for (const Vec& x : lattice) {
    double w = japanese_bracket(x);
    rep.per_order[0] = std::max(rep.per_order[0], value(x).cwiseAbs().maxCoeff());
    if (max_order >= 1) {
      auto dG = grad(x);
      for (const Mat& m : dG)
        rep.per_order[1] = std::max(rep.per_order[1], w * m.cwiseAbs().maxCoeff());
    }
    if (max_order >= 2) {
      auto d2G = hess(x);
      for (const auto& row : d2G)
        for (const Mat& m : row)
          rep.per_order[2] = std::max(rep.per_order[2], w * w * m.cwiseAbs().maxCoeff());
    }
    if (max_order >= 3 && third_of)
      rep.per_order[3] = std::max(rep.per_order[3], w * w * w * third_partial_sup(*third_of, x));
  }
  rep.estimate = *std::max_element(rep.per_order.begin(), rep.per_order.end());
  return rep;
}

}  // namespace

SeminormReport seminorm_estimate(const MetricField& G, const std::vector<Vec>& lattice,
                                 int max_order) {
  return seminorm_of(G.value, G.grad, G.hess, &G, lattice, max_order);
}

SeminormReport perturbation_distance(const MetricField& G_tilde, const MetricField& G,
                                     const std::vector<Vec>& lattice) {
  if (G_tilde.dim != G.dim)
    throw std::invalid_argument("perturbation_distance: dimension mismatch");
  int l = std::min(G_tilde.order, G.order);
  if (G_tilde.kind == "perturbed" && G_tilde.base.get() == &G && G_tilde.delta) {
    // exact difference eps * delta, free of cancellation
    const MetricField& D = *G_tilde.delta;
    double e = G_tilde.eps;
    MetricField scaled = D;
    auto dv = D.value;
    auto dg = D.grad;
    auto dh = D.hess;
    scaled.value = [dv, e](const Vec& x) { return Mat(e * dv(x)); };
    scaled.grad = [dg, e](const Vec& x) {
      auto g = dg(x);
      for (auto& m : g) m *= e;
      return g;
    };
    scaled.hess = [dh, e](const Vec& x) {
      auto h = dh(x);
      for (auto& row : h)
        for (auto& m : row) m *= e;
      return h;
    };
    return seminorm_of(scaled.value, scaled.grad, scaled.hess, &scaled, lattice, l);
  }
  auto v = [&](const Vec& x) { return Mat(G_tilde.value(x) - G.value(x)); };
  auto g = [&](const Vec& x) {
    auto a = G_tilde.grad(x);
    auto b = G.grad(x);
    for (size_t k = 0; k < a.size(); ++k) a[k] -= b[k];
    return a;
  };
  auto h = [&](const Vec& x) {
    auto a = G_tilde.hess(x);
    auto b = G.hess(x);
    for (size_t k = 0; k < a.size(); ++k)
      for (size_t m = 0; m < a[k].size(); ++m) a[k][m] -= b[k][m];
    return a;
  };
  MetricField diff;
  diff.dim = G.dim;
  diff.order = l;
  diff.kind = "analytic";
  diff.value = v;
  diff.grad = g;
  diff.hess = h;
  return seminorm_of(v, g, h, &diff, lattice, l);
}

std::vector<Vec> log_radial_lattice(int dim, int n_radii, int n_dirs, double r_lo, double r_hi,
                                    unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0, 1);
  std::vector<Vec> dirs;
  for (int k = 0; k < dim; ++k) dirs.push_back(Vec::Unit(dim, k));
  while (static_cast<int>(dirs.size()) < n_dirs) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
    if (v.norm() > 1e-12) dirs.push_back(v.normalized());
  }
  std::vector<Vec> out;
  out.reserve(n_radii * dirs.size());
  for (int i = 0; i < n_radii; ++i) {
    double t = n_radii == 1 ? 0.0 : static_cast<double>(i) / (n_radii - 1);
    double r = r_lo * std::pow(r_hi / r_lo, t);
    for (const Vec& dir : dirs) out.push_back(r * dir);
  }
  return out;
}

MetricField make_euclidean(int dim) {
  MetricField G;
  G.dim = dim;
  G.kind = "euclidean";
  G.a = G.b = 1.0;
  G.value = [dim](const Vec&) { return Mat(Mat::Identity(dim, dim)); };
  G.grad = [dim](const Vec&) { return std::vector<Mat>(dim, Mat::Zero(dim, dim)); };
  G.hess = [dim](const Vec&) {
    return std::vector<std::vector<Mat>>(dim, std::vector<Mat>(dim, Mat::Zero(dim, dim)));
  };
  return G;
}

MetricField make_conformal_constant(int dim, double c) {
  MetricField G = make_euclidean(dim);
  G.kind = "analytic";
  G.a = G.b = c;
  G.value = [dim, c](const Vec&) { return Mat(c * Mat::Identity(dim, dim)); };
  return G;
}

MetricField make_radial_transverse(int dim,
                                   std::function<void(double, double&, double&, double&)> u_eval,
                                   double a, double b, const std::string& kind) {
  MetricField G;
  G.dim = dim;
  G.kind = kind;
  G.a = a;
  G.b = b;

  G.value = [dim, u_eval](const Vec& x) -> Mat {
    double rho = x.norm();
    if (rho < 1e-9) return Mat::Identity(dim, dim);
    double u, du, d2u;
    u_eval(rho, u, du, d2u);
    Vec n = x / rho;
    return Mat(u * Mat::Identity(dim, dim) + (1 - u) * n * n.transpose());
  };

  G.grad = [dim, u_eval](const Vec& x) {
    std::vector<Mat> dG(dim, Mat::Zero(dim, dim));
    double rho = x.norm();
    if (rho < 1e-9) return dG;
    double u, du, d2u;
    u_eval(rho, u, du, d2u);
    Vec n = x / rho;
    Mat Pi = (Mat::Identity(dim, dim) - n * n.transpose()) / rho;
    double c = 1 - u;
    for (int k = 0; k < dim; ++k) {
      Mat m = Mat::Zero(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          m(i, j) = du * n[k] * ((i == j ? 1.0 : 0.0) - n[i] * n[j]) +
                    c * (Pi(i, k) * n[j] + n[i] * Pi(j, k));
      dG[k] = m;
    }
    return dG;
  };

  G.hess = [dim, u_eval](const Vec& x) {
    std::vector<std::vector<Mat>> d2G(dim, std::vector<Mat>(dim, Mat::Zero(dim, dim)));
    double rho = x.norm();
    if (rho < 1e-9) return d2G;
    double u, du, d2u;
    u_eval(rho, u, du, d2u);
    Vec n = x / rho;
    Mat Pi = (Mat::Identity(dim, dim) - n * n.transpose()) / rho;
    double c = 1 - u;
    auto dPi = [&](int i, int k, int l) {
      return -(Pi(i, k) * n[l] + Pi(i, l) * n[k] + n[i] * Pi(k, l)) / rho;
    };
    for (int k = 0; k < dim; ++k)
      for (int l = 0; l < dim; ++l) {
        Mat m = Mat::Zero(dim, dim);
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) {
            double pp = (i == j ? 1.0 : 0.0) - n[i] * n[j];
            double t = (d2u * n[k] * n[l] + du * Pi(k, l)) * pp;
            t -= du * n[k] * (Pi(i, l) * n[j] + n[i] * Pi(j, l));
            t -= du * n[l] * (Pi(i, k) * n[j] + n[i] * Pi(j, k));
            t += c * (dPi(i, k, l) * n[j] + Pi(i, k) * Pi(j, l) + Pi(i, l) * Pi(j, k) +
                      n[i] * dPi(j, k, l));
            m(i, j) = t;
          }
        d2G[k][l] = m;
      }
    return d2G;
  };
  return G;
}

namespace {

// dense lattice used to normalize perturbation shapes to unit sampled seminorm
std::vector<Vec> shape_lattice(int dim, const Vec& center, double radius) {
  std::vector<Vec> pts;
  int n = dim == 2 ? 25 : 11;
  std::vector<double> ticks(n);
  for (int i = 0; i < n; ++i) ticks[i] = -radius + 2 * radius * i / (n - 1);
  std::vector<int> idx(dim, 0);
  while (true) {
    Vec x = center;
    for (int k = 0; k < dim; ++k) x[k] += ticks[idx[k]];
    pts.push_back(x);
    int k = 0;
    while (k < dim && ++idx[k] == n) idx[k++] = 0;
    if (k == dim) break;
  }
  return pts;
}

}  // namespace

MetricField make_bump_perturbation(int dim, const Vec& center, double radius, int l) {
  Mat M = Mat::Zero(dim, dim);
  M(0, 0) = 1.0;
  M(0, 1) = M(1, 0) = 0.5;
  if (dim > 2) M(2, 2) = 0.25;
  double R2 = radius * radius;
  Vec c = center;

  MetricField B;
  B.dim = dim;
  B.order = l;
  B.kind = "analytic";
  auto q_of = [c, R2](const Vec& x) { return (x - c).squaredNorm() / R2; };
  B.value = [M, c, R2, q_of, dim](const Vec& x) -> Mat {
    double q = q_of(x);
    if (q >= 1) return Mat::Zero(dim, dim);
    double p = 1 - q;
    return Mat(p * p * p * p * M);
  };
  B.grad = [M, c, R2, q_of, dim](const Vec& x) {
    std::vector<Mat> dB(dim, Mat::Zero(dim, dim));
    double q = q_of(x);
    if (q >= 1) return dB;
    double p = 1 - q;
    Vec dq = 2 * (x - c) / R2;
    for (int k = 0; k < dim; ++k) dB[k] = -4 * p * p * p * dq[k] * M;
    return dB;
  };
  B.hess = [M, c, R2, q_of, dim](const Vec& x) {
    std::vector<std::vector<Mat>> d2B(dim, std::vector<Mat>(dim, Mat::Zero(dim, dim)));
    double q = q_of(x);
    if (q >= 1) return d2B;
    double p = 1 - q;
    Vec dq = 2 * (x - c) / R2;
    for (int k = 0; k < dim; ++k)
      for (int m = 0; m < dim; ++m) {
        double t = 12 * p * p * dq[k] * dq[m] - 4 * p * p * p * (k == m ? 2.0 / R2 : 0.0);
        d2B[k][m] = t * M;
      }
    return d2B;
  };

  double s = seminorm_estimate(B, shape_lattice(dim, center, radius), l).estimate;
  auto v0 = B.value;
  auto g0 = B.grad;
  auto h0 = B.hess;
  B.value = [v0, s](const Vec& x) { return Mat(v0(x) / s); };
  B.grad = [g0, s](const Vec& x) {
    auto g = g0(x);
    for (auto& m : g) m /= s;
    return g;
  };
  B.hess = [h0, s](const Vec& x) {
    auto h = h0(x);
    for (auto& row : h)
      for (auto& m : row) m /= s;
    return h;
  };
  return B;
}

MetricField make_tail_perturbation(int dim, int l) {
  Mat M = Mat::Zero(dim, dim);
  Vec v = Vec::Ones(dim).normalized();
  M = v * v.transpose();
  M(0, 0) += 0.5;

  MetricField B;
  B.dim = dim;
  B.order = l;
  B.kind = "analytic";
  // t(|x|) = (1 + |x|^2)^{-1/4}, smooth in x through w = |x|^2
  B.value = [M](const Vec& x) -> Mat {
    double w = x.squaredNorm();
    return Mat(std::pow(1 + w, -0.25) * M);
  };
  B.grad = [M, dim](const Vec& x) {
    std::vector<Mat> dB(dim);
    double w = x.squaredNorm();
    double tp = -0.25 * std::pow(1 + w, -1.25);
    for (int k = 0; k < dim; ++k) dB[k] = tp * 2 * x[k] * M;
    return dB;
  };
  B.hess = [M, dim](const Vec& x) {
    std::vector<std::vector<Mat>> d2B(dim, std::vector<Mat>(dim));
    double w = x.squaredNorm();
    double tp = -0.25 * std::pow(1 + w, -1.25);
    double tpp = 0.3125 * std::pow(1 + w, -2.25);
    for (int k = 0; k < dim; ++k)
      for (int m = 0; m < dim; ++m)
        d2B[k][m] = (tpp * 4 * x[k] * x[m] + tp * (k == m ? 2.0 : 0.0)) * M;
    return d2B;
  };

  double s = seminorm_estimate(B, log_radial_lattice(dim, 48, 16, 1e-2, 1e3), l).estimate;
  auto v0 = B.value;
  auto g0 = B.grad;
  auto h0 = B.hess;
  B.value = [v0, s](const Vec& x) { return Mat(v0(x) / s); };
  B.grad = [g0, s](const Vec& x) {
    auto g = g0(x);
    for (auto& m : g) m /= s;
    return g;
  };
  B.hess = [h0, s](const Vec& x) {
    auto h = h0(x);
    for (auto& row : h)
      for (auto& m : row) m /= s;
    return h;
  };
  return B;
}

MetricField make_perturbed(std::shared_ptr<const MetricField> base,
                           std::shared_ptr<const MetricField> delta, double eps) {
  MetricField G;
  G.dim = base->dim;
  G.order = std::min(base->order, delta->order);
  G.kind = "perturbed";
  G.base = base;
  G.delta = delta;
  G.eps = eps;
  // seminorm-1 delta has entries bounded by 1, so the spectrum moves by at most eps*d
  G.a = std::max(1e-6, base->a - eps * base->dim);
  G.b = base->b + eps * base->dim;
  G.value = [base, delta, eps](const Vec& x) {
    return Mat(base->value(x) + eps * delta->value(x));
  };
  G.grad = [base, delta, eps](const Vec& x) {
    auto g = base->grad(x);
    auto dg = delta->grad(x);
    for (size_t k = 0; k < g.size(); ++k) g[k] += eps * dg[k];
    return g;
  };
  G.hess = [base, delta, eps](const Vec& x) {
    auto h = base->hess(x);
    auto dh = delta->hess(x);
    for (size_t k = 0; k < h.size(); ++k)
      for (size_t m = 0; m < h[k].size(); ++m) h[k][m] += eps * dh[k][m];
    return h;
  };
  return G;
}

}  // namespace eik
