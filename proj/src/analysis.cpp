#include "eik/analysis.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace eik {

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next(0);
  std::vector<std::thread> pool;
  int count = std::min(workers, n);
  for (int t = 0; t < count; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

ObservableTrace observable_trace(const MetricField& G_base, const ShootingResult& traj) {
  ObservableTrace tr;
  for (size_t i = 0; i < traj.pos.size(); ++i) {
    const Vec& y = traj.pos[i];
    const Vec& v = traj.vel[i];
    double r = y.norm();
    if (r < 1e-12) {
      if (traj.s[i] > 0) tr.zero_hit = true;
      continue;
    }
    double vg = std::sqrt(std::max(0.0, v.dot(G_base.value(y) * v)));
    double vn = v.norm();
    tr.s.push_back(traj.s[i]);
    tr.pos_norm.push_back(r);
    tr.vel_norm.push_back(vn);
    tr.vel_norm_G.push_back(vg);
    tr.A.push_back(vg > 0 ? v.dot(y) / (r * vg) : 0.0);
    tr.B.push_back(vn > 0 ? v.dot(y) / (r * vn) : 0.0);
  }
  return tr;
}

MonotonicityReport monotonicity_check(const ObservableTrace& trace, double cbar) {
  MonotonicityReport rep;
  rep.min_increment = 0;
  rep.min_inequality_margin = std::numeric_limits<double>::infinity();
  rep.bounds_ok = true;
  size_t n = trace.A.size();
  for (size_t i = 0; i < n; ++i) {
    if (trace.A[i] * trace.A[i] > 1 + 1e-12 || trace.B[i] * trace.B[i] > 1 + 1e-12)
      rep.bounds_ok = false;
  }
  bool first = true;
  for (size_t i = 0; i + 1 < n; ++i) {
    double ds = trace.s[i + 1] - trace.s[i];
    if (ds <= 0) continue;
    double inc = trace.A[i + 1] - trace.A[i];
    if (first) {
      rep.min_increment = inc;
      first = false;
    } else {
      rep.min_increment = std::min(rep.min_increment, inc);
    }
    double rate = inc / ds;
    double bound = cbar * (trace.vel_norm_G[i] / trace.pos_norm[i]) *
                   (1 - trace.A[i] * trace.A[i]);
    rep.min_inequality_margin = std::min(rep.min_inequality_margin, rate - bound);
  }
  if (n < 2) rep.min_inequality_margin = 0;
  return rep;
}

double s_function(const MetricField& G, const Vec& x, const SolverOptions& opts) {
  SolverOptions o = opts;
  o.compute_gradient = false;
  GeodesicSolution sol = minimize_energy(G, x, DiscretePath(), o);
  return sol.distance / x.norm() - 1;
}

StabilityReport perturbation_sweep(const MetricField& G, const MetricField& delta,
                                   const std::vector<double>& eps_list,
                                   const std::vector<Vec>& x_lattice, const SolverOptions& opts,
                                   int workers) {
  StabilityReport rep;
  auto base = std::make_shared<MetricField>(G);
  auto pert = std::make_shared<MetricField>(delta);
  const int d = G.dim;

  for (double eps : eps_list) {
    MetricField Gp = make_perturbed(base, pert, eps);
    double sup_s = 0, sup_ds = 0, sup_d2s = 0;
    std::atomic<int> failures(0);
    std::vector<double> loc_s(x_lattice.size(), 0), loc_ds(x_lattice.size(), 0),
        loc_d2s(x_lattice.size(), 0);
    parallel_for(static_cast<int>(x_lattice.size()), workers, [&](int ix) {
      const Vec& x = x_lattice[ix];
      double r = x.norm();
      double h1 = 1e-3 * r, h2 = 1e-2 * r;
      try {
        auto sv = [&](const Vec& y) { return s_function(Gp, y, opts); };
        loc_s[ix] = std::abs(sv(x));
        double gmax = 0;
        for (int k = 0; k < d; ++k) {
          Vec xp = x, xm = x;
          xp[k] += h1;
          xm[k] -= h1;
          gmax = std::max(gmax, std::abs(sv(xp) - sv(xm)) / (2 * h1));
        }
        loc_ds[ix] = r * gmax;
        double hmax = 0;
        double c0 = sv(x);
        for (int k = 0; k < d; ++k) {
          Vec xp = x, xm = x;
          xp[k] += h2;
          xm[k] -= h2;
          hmax = std::max(hmax, std::abs(sv(xp) - 2 * c0 + sv(xm)) / (h2 * h2));
        }
        for (int k = 0; k < d; ++k)
          for (int l = k + 1; l < d; ++l) {
            Vec xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[k] += h2; xpp[l] += h2;
            xpm[k] += h2; xpm[l] -= h2;
            xmp[k] -= h2; xmp[l] += h2;
            xmm[k] -= h2; xmm[l] -= h2;
            hmax = std::max(hmax,
                            std::abs(sv(xpp) - sv(xpm) - sv(xmp) + sv(xmm)) / (4 * h2 * h2));
          }
        loc_d2s[ix] = r * r * hmax;
      } catch (const std::exception&) {
        failures.fetch_add(1);
      }
    });
    for (size_t i = 0; i < x_lattice.size(); ++i) {
      sup_s = std::max(sup_s, loc_s[i]);
      sup_ds = std::max(sup_ds, loc_ds[i]);
      sup_d2s = std::max(sup_d2s, loc_d2s[i]);
    }
    rep.eps_values.push_back(eps);
    rep.sup_s.push_back(sup_s);
    rep.sup_ds.push_back(sup_ds);
    rep.sup_d2s.push_back(sup_d2s);
    rep.failures += failures.load();
  }
  rep.slope_s = loglog_slope(rep.eps_values, rep.sup_s);
  rep.slope_ds = loglog_slope(rep.eps_values, rep.sup_ds);
  rep.slope_d2s = loglog_slope(rep.eps_values, rep.sup_d2s);
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (size_t i = 0; i < rep.eps_values.size(); ++i) {
    double q = rep.sup_s[i] / rep.eps_values[i];
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  rep.ratio_spread_s = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  return rep;
}

namespace {

struct PointDerivatives {
  // per order 1..3: max over multi-indices of |d^a S| and |d^a S^2|
  double dS[4] = {0, 0, 0, 0};
  double dS2[4] = {0, 0, 0, 0};
  double S = 0;
  bool flagged[4] = {false, false, false, false};
  double kappa_dnorm = 0;
};

}  // namespace

ScalingReport derivative_scaling_sweep(const MetricField& G, const std::vector<double>& radii,
                                       const std::vector<Vec>& directions, int max_order,
                                       const SolverOptions& opts, int workers) {
  const int d = G.dim;
  ScalingReport rep;
  int npts = static_cast<int>(radii.size() * directions.size());
  std::vector<PointDerivatives> pd(npts);

  SolverOptions o = opts;
  o.compute_gradient = false;

  parallel_for(npts, workers, [&](int ip) {
    int ir = ip / static_cast<int>(directions.size());
    int id = ip % static_cast<int>(directions.size());
    Vec x = radii[ir] * directions[id].normalized();
    double r = x.norm();
    double h1 = 1e-3 * r, h2 = 1e-2 * r, h3 = 3e-2 * r;
    PointDerivatives& out = pd[ip];

    auto solve = [&](const Vec& y) { return minimize_energy(G, y, DiscretePath(), o); };
    auto Sv = [&](const Vec& y) { return solve(y).distance; };

    GeodesicSolution center = solve(x);
    out.S = center.distance;
    double tol_abs = o.tol * std::max(1.0, r * r) / std::max(1e-12, 2 * center.distance);

    if (max_order >= 1) {
      double m1 = 0, m1e = 0, kd = 0;
      for (int k = 0; k < d; ++k) {
        Vec xp = x, xm = x;
        xp[k] += h1;
        xm[k] -= h1;
        GeodesicSolution sp = solve(xp), sm = solve(xm);
        m1 = std::max(m1, std::abs(sp.distance - sm.distance) / (2 * h1));
        m1e = std::max(m1e, std::abs(sp.distance * sp.distance - sm.distance * sm.distance) /
                                (2 * h1));
        DiscretePath diff = sp.kappa;
        diff.nodes -= sm.kappa.nodes;
        diff.nodes /= 2 * h1;
        kd = std::max(kd, diff.norm());
      }
      out.dS[1] = m1;
      out.dS2[1] = m1e;
      out.kappa_dnorm = kd;
      out.flagged[1] = 4 * tol_abs / h1 > 0.5 * m1;
    }
    if (max_order >= 2) {
      double m2 = 0, m2e = 0;
      double c = center.distance, c2 = c * c;
      std::vector<std::vector<double>> fS(3, std::vector<double>(3, 0));
      // 3x3 grid at step h2 for d = 2; for higher d fall back to axis pairs
      if (d == 2) {
        for (int i = -1; i <= 1; ++i)
          for (int j = -1; j <= 1; ++j) {
            if (i == 0 && j == 0) {
              fS[1][1] = c;
              continue;
            }
            Vec y = x;
            y[0] += i * h2;
            y[1] += j * h2;
            fS[i + 1][j + 1] = Sv(y);
          }
        auto dxx = [&](const std::vector<std::vector<double>>& f) {
          return (f[2][1] - 2 * f[1][1] + f[0][1]) / (h2 * h2);
        };
        auto dyy = [&](const std::vector<std::vector<double>>& f) {
          return (f[1][2] - 2 * f[1][1] + f[1][0]) / (h2 * h2);
        };
        auto dxy = [&](const std::vector<std::vector<double>>& f) {
          return (f[2][2] - f[2][0] - f[0][2] + f[0][0]) / (4 * h2 * h2);
        };
        m2 = std::max({std::abs(dxx(fS)), std::abs(dyy(fS)), std::abs(dxy(fS))});
        std::vector<std::vector<double>> fE(3, std::vector<double>(3));
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) fE[i][j] = fS[i][j] * fS[i][j];
        fE[1][1] = c2;
        m2e = std::max({std::abs(dxx(fE)), std::abs(dyy(fE)), std::abs(dxy(fE))});
      } else {
        for (int k = 0; k < d; ++k) {
          Vec xp = x, xm = x;
          xp[k] += h2;
          xm[k] -= h2;
          double sp = Sv(xp), sm = Sv(xm);
          m2 = std::max(m2, std::abs(sp - 2 * c + sm) / (h2 * h2));
          m2e = std::max(m2e, std::abs(sp * sp - 2 * c2 + sm * sm) / (h2 * h2));
        }
      }
      out.dS[2] = m2;
      out.dS2[2] = m2e;
      out.flagged[2] = 8 * tol_abs / (h2 * h2) > 0.5 * m2;
    }
    if (max_order >= 3 && d == 2) {
      double h = h3;
      auto val = [&](int i, int j) {
        Vec y = x;
        y[0] += i * h;
        y[1] += j * h;
        return Sv(y);
      };
      // pure thirds use the 5-point stencil, mixed thirds the 6-point one
      double f2p0 = val(2, 0), f1p0 = val(1, 0), f1m0 = val(-1, 0), f2m0 = val(-2, 0);
      double f02p = val(0, 2), f01p = val(0, 1), f01m = val(0, -1), f02m = val(0, -2);
      double fpp = val(1, 1), fpm = val(1, -1), fmp = val(-1, 1), fmm = val(-1, -1);
      double dxxx = (f2p0 - 2 * f1p0 + 2 * f1m0 - f2m0) / (2 * h * h * h);
      double dyyy = (f02p - 2 * f01p + 2 * f01m - f02m) / (2 * h * h * h);
      double dxxy = (fpp - 2 * f01p + fmp - fpm + 2 * f01m - fmm) / (2 * h * h * h);
      double dxyy = (fpp - 2 * f1p0 + fpm - fmp + 2 * f1m0 - fmm) / (2 * h * h * h);
      double m3 = std::max({std::abs(dxxx), std::abs(dyyy), std::abs(dxxy), std::abs(dxyy)});
      auto sq = [](double v) { return v * v; };
      double exxx = (sq(f2p0) - 2 * sq(f1p0) + 2 * sq(f1m0) - sq(f2m0)) / (2 * h * h * h);
      double eyyy = (sq(f02p) - 2 * sq(f01p) + 2 * sq(f01m) - sq(f02m)) / (2 * h * h * h);
      double exxy =
          (sq(fpp) - 2 * sq(f01p) + sq(fmp) - sq(fpm) + 2 * sq(f01m) - sq(fmm)) / (2 * h * h * h);
      double exyy =
          (sq(fpp) - 2 * sq(f1p0) + sq(fpm) - sq(fmp) + 2 * sq(f1m0) - sq(fmm)) / (2 * h * h * h);
      double m3e = std::max({std::abs(exxx), std::abs(eyyy), std::abs(exxy), std::abs(exyy)});
      out.dS[3] = m3;
      out.dS2[3] = m3e;
      out.flagged[3] = 16 * tol_abs / (h * h * h) > 0.5 * m3;
    }
  });

  int nd = static_cast<int>(directions.size());
  rep.spread_S.assign(max_order + 1, 0);
  rep.spread_S2.assign(max_order + 1, 0);
  std::vector<double> lo_S(max_order + 1, 1e300), hi_S(max_order + 1, 0);
  std::vector<double> lo_S2(max_order + 1, 1e300), hi_S2(max_order + 1, 0);
  for (size_t ir = 0; ir < radii.size(); ++ir) {
    double w = japanese_bracket(radii[ir]);
    for (int order = 1; order <= max_order; ++order) {
      double vS = 0, vS2 = 0;
      bool fl = false;
      double kd = 0;
      for (int id = 0; id < nd; ++id) {
        const PointDerivatives& p = pd[ir * nd + id];
        vS = std::max(vS, std::pow(w, order - 1) * p.dS[order]);
        vS2 = std::max(vS2, std::pow(w, order - 2) * p.dS2[order]);
        fl = fl || p.flagged[order];
        kd = std::max(kd, p.kappa_dnorm);
      }
      ScalingRow row;
      row.order = order;
      row.radius = radii[ir];
      row.value_S = vS;
      row.value_S2 = vS2;
      row.flagged = fl;
      rep.rows.push_back(row);
      if (order == 1) {
        if (static_cast<int>(rep.kappa_deriv_norm.size()) <= static_cast<int>(ir))
          rep.kappa_deriv_norm.push_back(kd);
      }
      if (vS > 0) {
        lo_S[order] = std::min(lo_S[order], vS);
        hi_S[order] = std::max(hi_S[order], vS);
      }
      if (vS2 > 0) {
        lo_S2[order] = std::min(lo_S2[order], vS2);
        hi_S2[order] = std::max(hi_S2[order], vS2);
      }
    }
  }
  for (int order = 1; order <= max_order; ++order) {
    rep.spread_S[order] = hi_S[order] > 0 ? hi_S[order] / lo_S[order] : 0;
    rep.spread_S2[order] = hi_S2[order] > 0 ? hi_S2[order] / lo_S2[order] : 0;
  }
  return rep;
}

std::vector<double> eikonal_residual_scan(const MetricField& G, const std::vector<Vec>& x_lattice,
                                          const SolverOptions& opts, int workers) {
  std::vector<double> out(x_lattice.size(), 0);
  parallel_for(static_cast<int>(x_lattice.size()), workers, [&](int i) {
    GeodesicSolution sol = minimize_energy(G, x_lattice[i], DiscretePath(), opts);
    Vec g = sol.grad_distance;
    Mat Ginv = G.value(x_lattice[i]).inverse();
    out[i] = std::abs(g.dot(Ginv * g) - 1);
  });
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (size_t i = 0; i < n; ++i) {
    if (x[i] <= 0 || y[i] <= 0) continue;
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return 0;
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace eik
