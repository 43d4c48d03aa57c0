#include "eik/path.hpp"

#include <stdexcept>

namespace eik {

void DiscretePath::enforce_boundary() {
  nodes.col(0).setZero();
  nodes.col(intervals()).setZero();
}

bool DiscretePath::finite() const { return nodes.allFinite(); }

double DiscretePath::inner(const DiscretePath& h1, const DiscretePath& h2) {
  int n = h1.intervals();
  if (h2.intervals() != n || h2.dim() != h1.dim())
    throw std::invalid_argument("DiscretePath::inner: shape mismatch");
  double acc = 0;
  for (int i = 1; i <= n; ++i) acc += h1.slope(i).dot(h2.slope(i));
  return acc / n;
}

DiscretePath sample_path(int dim, int n_intervals, const std::function<Vec(double)>& f) {
  DiscretePath p(dim, n_intervals);
  for (int j = 0; j <= n_intervals; ++j) p.nodes.col(j) = f(static_cast<double>(j) / n_intervals);
  p.enforce_boundary();
  return p;
}

DiscretePath random_path(int dim, int n_intervals, std::mt19937_64& rng, int n_modes) {
  std::normal_distribution<double> gauss(0, 1);
  DiscretePath p(dim, n_intervals);
  const double pi = 3.14159265358979323846;
  for (int k = 0; k < dim; ++k)
    for (int m = 1; m <= n_modes; ++m) {
      double c = gauss(rng) / m;
      for (int j = 0; j <= n_intervals; ++j)
        p.nodes(k, j) += c * std::sin(m * pi * j / n_intervals);
    }
  return p;
}

namespace {

struct IntervalData {
  Vec ydot;   // x + slope_i
  Vec ymid;   // s_m x + midpoint of kappa
  Mat g;      // G(ymid)
  Vec w;      // w[k] = ydot' d_k G ydot
};

IntervalData interval_data(const MetricField& G, const Vec& x, const DiscretePath& kappa, int i,
                           bool with_grad) {
  IntervalData d;
  d.ydot = x + kappa.slope(i);
  d.ymid = kappa.midpoint_s(i) * x + 0.5 * (kappa.nodes.col(i) + kappa.nodes.col(i - 1));
  d.g = G.value(d.ymid);
  if (with_grad) {
    auto dG = G.grad(d.ymid);
    d.w.resize(x.size());
    for (int k = 0; k < x.size(); ++k) d.w[k] = d.ydot.dot(dG[k] * d.ydot);
  }
  return d;
}

}  // namespace

double energy(const MetricField& G, const Vec& x, const DiscretePath& kappa) {
  int n = kappa.intervals();
  double acc = 0;
  for (int i = 1; i <= n; ++i) {
    IntervalData d = interval_data(G, x, kappa, i, false);
    acc += d.ydot.dot(d.g * d.ydot);
  }
  return acc / n;
}

DiscretePath energy_gradient(const MetricField& G, const Vec& x, const DiscretePath& kappa) {
  int n = kappa.intervals();
  int dim = kappa.dim();
  DiscretePath grad(dim, n);
  Vec prev_flux = Vec::Zero(dim), prev_w = Vec::Zero(dim);
  for (int i = 1; i <= n; ++i) {
    IntervalData d = interval_data(G, x, kappa, i, true);
    Vec flux = 2 * d.g * d.ydot;
    if (i > 1) grad.nodes.col(i - 1) = prev_flux - flux + (prev_w + d.w) / (2.0 * n);
    prev_flux = flux;
    prev_w = d.w;
  }
  return grad;
}

double hessian_quadratic_form(const MetricField& G, const Vec& x, const DiscretePath& kappa,
                              const DiscretePath& h1, const DiscretePath& h2) {
  int n = kappa.intervals();
  int dim = kappa.dim();
  double acc = 0;
  for (int i = 1; i <= n; ++i) {
    IntervalData d = interval_data(G, x, kappa, i, false);
    auto dG = G.grad(d.ymid);
    auto d2G = G.hess(d.ymid);
    Mat W(dim, dim), M2(dim, dim);
    for (int k = 0; k < dim; ++k) {
      W.row(k) = (dG[k] * d.ydot).transpose();
      for (int l = 0; l < dim; ++l) M2(k, l) = d.ydot.dot(d2G[k][l] * d.ydot);
    }
    Vec h1d = h1.slope(i), h2d = h2.slope(i);
    Vec h1m = 0.5 * (h1.nodes.col(i) + h1.nodes.col(i - 1));
    Vec h2m = 0.5 * (h2.nodes.col(i) + h2.nodes.col(i - 1));
    acc += 2 * h1d.dot(d.g * h2d) + 2 * h1m.dot(W * h2d) + 2 * h2m.dot(W * h1d) +
           h1m.dot(M2 * h2m);
  }
  return acc / n;
}

bool BlockTridiagonal::solve(std::vector<Vec>& rhs) const {
  int m = blocks();
  if (static_cast<int>(rhs.size()) != m)
    throw std::invalid_argument("BlockTridiagonal::solve: rhs size mismatch");
  std::vector<Mat> up(m);
  std::vector<Vec> y(m);
  Mat piv = diag[0];
  Eigen::PartialPivLU<Mat> lu(piv);
  if (std::abs(lu.determinant()) < 1e-300) return false;
  y[0] = lu.solve(rhs[0]);
  if (m > 1) up[0] = lu.solve(upper[0]);
  for (int j = 1; j < m; ++j) {
    piv = diag[j] - lower[j - 1] * up[j - 1];
    lu.compute(piv);
    if (std::abs(lu.determinant()) < 1e-300) return false;
    y[j] = lu.solve(Vec(rhs[j] - lower[j - 1] * y[j - 1]));
    if (j + 1 < m) up[j] = lu.solve(upper[j]);
  }
  rhs[m - 1] = y[m - 1];
  for (int j = m - 2; j >= 0; --j) rhs[j] = y[j] - up[j] * rhs[j + 1];
  return true;
}

Vec BlockTridiagonal::apply(const Vec& v, int d) const {
  int m = blocks();
  Vec out = Vec::Zero(m * d);
  for (int j = 0; j < m; ++j) {
    Vec acc = diag[j] * v.segment(j * d, d);
    if (j > 0) acc += lower[j - 1] * v.segment((j - 1) * d, d);
    if (j + 1 < m) acc += upper[j] * v.segment((j + 1) * d, d);
    out.segment(j * d, d) = acc;
  }
  return out;
}

Mat BlockTridiagonal::dense(int d) const {
  int m = blocks();
  Mat out = Mat::Zero(m * d, m * d);
  for (int j = 0; j < m; ++j) {
    out.block(j * d, j * d, d, d) = diag[j];
    if (j + 1 < m) {
      out.block(j * d, (j + 1) * d, d, d) = upper[j];
      out.block((j + 1) * d, j * d, d, d) = lower[j];
    }
  }
  return out;
}

BlockTridiagonal energy_hessian(const MetricField& G, const Vec& x, const DiscretePath& kappa) {
  int n = kappa.intervals();
  int dim = kappa.dim();
  BlockTridiagonal H;
  H.diag.assign(n - 1, Mat::Zero(dim, dim));
  H.upper.assign(n - 2 >= 0 ? n - 2 : 0, Mat::Zero(dim, dim));
  H.lower = H.upper;

  // local 2x2-of-blocks contribution of interval i; node factors are
  // (derivative, midpoint) = (-N, 1/2) for the left node, (N, 1/2) for the right
  for (int i = 1; i <= n; ++i) {
    IntervalData d = interval_data(G, x, kappa, i, false);
    auto dG = G.grad(d.ymid);
    auto d2G = G.hess(d.ymid);
    Mat W(dim, dim), M2(dim, dim);
    for (int k = 0; k < dim; ++k) {
      W.row(k) = (dG[k] * d.ydot).transpose();
      for (int l = 0; l < dim; ++l) M2(k, l) = d.ydot.dot(d2G[k][l] * d.ydot);
    }
    auto local = [&](double dp, double mp, double dq, double mq) {
      return Mat((2 * dp * dq * d.g + 2 * mp * dq * W + 2 * dp * mq * W.transpose() +
                  mp * mq * M2) /
                 n);
    };
    double N = n;
    int left = i - 1, right = i;  // global node indices
    if (left >= 1) H.diag[left - 1] += local(-N, 0.5, -N, 0.5);
    if (right <= n - 1) H.diag[right - 1] += local(N, 0.5, N, 0.5);
    if (left >= 1 && right <= n - 1) {
      H.upper[left - 1] += local(-N, 0.5, N, 0.5);
      H.lower[left - 1] += local(N, 0.5, -N, 0.5);
    }
  }
  return H;
}

Vec stiffness_apply(const Vec& v, int d, int n_intervals) {
  int m = n_intervals - 1;
  Vec out(m * d);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < d; ++k) {
      double acc = 2 * v[j * d + k];
      if (j > 0) acc -= v[(j - 1) * d + k];
      if (j + 1 < m) acc -= v[(j + 1) * d + k];
      out[j * d + k] = n_intervals * acc;
    }
  return out;
}

Vec stiffness_solve(const Vec& rhs, int d, int n_intervals) {
  int m = n_intervals - 1;
  // scalar Thomas sweep, shared coefficients for every component
  std::vector<double> c(m), z(m);
  Vec out(m * d);
  for (int k = 0; k < d; ++k) {
    double beta = 2;
    c[0] = -1.0 / beta;
    z[0] = rhs[k] / beta;
    for (int j = 1; j < m; ++j) {
      beta = 2 + c[j - 1];
      c[j] = -1.0 / beta;
      z[j] = (rhs[j * d + k] + z[j - 1]) / beta;
    }
    out[(m - 1) * d + k] = z[m - 1];
    for (int j = m - 2; j >= 0; --j) out[j * d + k] = z[j] - c[j] * out[(j + 1) * d + k];
  }
  return out / n_intervals;
}

double dual_norm(const DiscretePath& cotangent) {
  int n = cotangent.intervals();
  int d = cotangent.dim();
  if (n < 2) return 0;
  Vec g((n - 1) * d);
  for (int j = 1; j <= n - 1; ++j) g.segment((j - 1) * d, d) = cotangent.nodes.col(j);
  Vec z = stiffness_solve(g, d, n);
  return std::sqrt(std::max(0.0, g.dot(z)));
}

double hp_norm(const DiscretePath& h, double p) {
  int n = h.intervals();
  double acc = 0;
  for (int i = 1; i <= n; ++i) acc += std::pow(h.slope(i).norm(), p);
  return std::pow(acc / n, 1.0 / p);
}

Mat hardy_apply_S(const Mat& f) {
  int d = static_cast<int>(f.rows());
  int n = static_cast<int>(f.cols());
  Mat out(d, n);
  Vec run = Vec::Zero(d);
  for (int i = 0; i < n; ++i) {
    out.col(i) = (run + 0.5 * f.col(i)) / (i + 0.5);
    run += f.col(i);
  }
  return out;
}

DiscretePath hardy_apply_T(const Mat& f) {
  int d = static_cast<int>(f.rows());
  int n = static_cast<int>(f.cols());
  DiscretePath h(d, n);
  Vec tail = Vec::Zero(d);  // int_{t_j}^1 s^-1 f ds over later midpoints
  for (int j = n - 1; j >= 1; --j) {
    tail += f.col(j) / ((j + 0.5) / n) / n;
    h.nodes.col(j) = -static_cast<double>(j) / n * tail;
  }
  return h;
}

DiscretePath hardy_apply_R(const Mat& f) {
  int d = static_cast<int>(f.rows());
  int n = static_cast<int>(f.cols());
  DiscretePath h(d, n);
  Vec mean = f.rowwise().mean();
  Vec run = Vec::Zero(d);
  for (int j = 1; j <= n; ++j) {
    run += (f.col(j - 1) - mean) / n;
    h.nodes.col(j) = run;
  }
  h.nodes.col(n).setZero();
  return h;
}

HardyCheck hardy_inequality_check(const DiscretePath& h, double p) {
  int n = h.intervals();
  double q = p / (p - 1);
  double Ap = p / (p - 1);
  double Bp = q / (q - 1) + 1;  // A_q + 1
  HardyCheck out;
  double lhs = 0, rev = 0;
  for (int i = 1; i <= n; ++i) {
    double s = h.midpoint_s(i);
    Vec hm = 0.5 * (h.nodes.col(i) + h.nodes.col(i - 1));
    lhs += std::pow((hm / s).norm(), p);
    rev += std::pow((h.slope(i) - hm / s).norm(), p);
  }
  out.lhs = std::pow(lhs / n, 1.0 / p);
  out.rhs = Ap * hp_norm(h, p);
  out.ratio = out.rhs > 0 ? out.lhs / out.rhs : 0;
  out.reverse_lhs = hp_norm(h, p);
  out.reverse_rhs = Bp * std::pow(rev / n, 1.0 / p);
  out.reverse_ratio = out.reverse_rhs > 0 ? out.reverse_lhs / out.reverse_rhs : 0;
  return out;
}

double weighted_pairing(const MetricField& G, const Vec& x, const DiscretePath& kappa,
                        const DiscretePath& h, const DiscretePath& g) {
  int n = kappa.intervals();
  double acc = 0;
  for (int i = 1; i <= n; ++i) {
    double s = kappa.midpoint_s(i);
    Vec ymid = s * x + 0.5 * (kappa.nodes.col(i) + kappa.nodes.col(i - 1));
    Vec hm = 0.5 * (h.nodes.col(i) + h.nodes.col(i - 1));
    Vec gm = 0.5 * (g.nodes.col(i) + g.nodes.col(i - 1));
    Vec hq = (h.slope(i) * s - hm) / (s * s);
    Vec gq = (g.slope(i) * s - gm) / (s * s);
    acc += 2 * s * s * hq.dot(G.value(ymid) * gq);
  }
  return acc / n;
}

}  // namespace eik
