#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "eik/path.hpp"

using namespace eik;

namespace {

void u_inv_sqrt(double rho, double& u, double& du, double& d2u) {
  double b = 1 + rho * rho;
  u = std::pow(b, -0.5);
  du = -rho * std::pow(b, -1.5);
  d2u = (2 * rho * rho - 1) * std::pow(b, -2.5);
}

MetricField curved() { return make_radial_transverse(2, u_inv_sqrt, 0.1, 1.0); }

Vec pt(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

double pairing(const DiscretePath& grad, const DiscretePath& h) {
  double acc = 0;
  for (int j = 1; j < grad.intervals(); ++j) acc += grad.nodes.col(j).dot(h.nodes.col(j));
  return acc;
}

}  // namespace

TEST_CASE("energy of the straight euclidean path") {
  MetricField G = make_euclidean(2);
  Vec x = pt(3, 4);
  DiscretePath zero(2, 64);
  CHECK(energy(G, x, zero) == doctest::Approx(25.0).epsilon(1e-14));
  DiscretePath g = energy_gradient(G, x, zero);
  CHECK(dual_norm(g) < 1e-12);
}

TEST_CASE("energy gradient matches finite differences on a curved metric") {
  MetricField G = curved();
  Vec x = pt(2, 1);
  const int n = 32;
  std::mt19937_64 rng(7);
  DiscretePath kappa = random_path(2, n, rng);
  kappa.nodes *= 0.1;
  DiscretePath h = random_path(2, n, rng);
  h.nodes *= 0.1;
  DiscretePath grad = energy_gradient(G, x, kappa);
  double t = 1e-6;
  DiscretePath kp = kappa, km = kappa;
  kp.nodes += t * h.nodes;
  km.nodes -= t * h.nodes;
  double fd = (energy(G, x, kp) - energy(G, x, km)) / (2 * t);
  CHECK(pairing(grad, h) == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("hessian quadratic form matches second finite differences") {
  MetricField G = curved();
  Vec x = pt(2, 1);
  const int n = 32;
  std::mt19937_64 rng(11);
  DiscretePath kappa = random_path(2, n, rng);
  kappa.nodes *= 0.1;
  DiscretePath h = random_path(2, n, rng);
  h.nodes *= 0.1;
  double t = 1e-4;
  DiscretePath kp = kappa, km = kappa;
  kp.nodes += t * h.nodes;
  km.nodes -= t * h.nodes;
  double fd =
      (energy(G, x, kp) - 2 * energy(G, x, kappa) + energy(G, x, km)) / (t * t);
  CHECK(hessian_quadratic_form(G, x, kappa, h, h) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("assembled hessian agrees with the quadratic form") {
  MetricField G = curved();
  Vec x = pt(1.5, -0.7);
  const int n = 16;
  std::mt19937_64 rng(13);
  DiscretePath kappa = random_path(2, n, rng);
  kappa.nodes *= 0.2;
  BlockTridiagonal H = energy_hessian(G, x, kappa);
  for (int rep = 0; rep < 4; ++rep) {
    DiscretePath h1 = random_path(2, n, rng), h2 = random_path(2, n, rng);
    Vec v1((n - 1) * 2), v2((n - 1) * 2);
    for (int j = 1; j < n; ++j) {
      v1.segment((j - 1) * 2, 2) = h1.nodes.col(j);
      v2.segment((j - 1) * 2, 2) = h2.nodes.col(j);
    }
    double via_blocks = v1.dot(H.apply(v2, 2));
    double via_form = hessian_quadratic_form(G, x, kappa, h1, h2);
    CHECK(via_blocks == doctest::Approx(via_form).epsilon(1e-11));
  }
}

TEST_CASE("block tridiagonal solve inverts apply") {
  MetricField G = curved();
  Vec x = pt(1, 2);
  const int n = 24;
  DiscretePath kappa(2, n);
  BlockTridiagonal H = energy_hessian(G, x, kappa);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0, 1);
  Vec v((n - 1) * 2);
  for (int i = 0; i < v.size(); ++i) v[i] = gauss(rng);
  Vec rhs_flat = H.apply(v, 2);
  std::vector<Vec> rhs(n - 1);
  for (int j = 0; j < n - 1; ++j) rhs[j] = rhs_flat.segment(j * 2, 2);
  REQUIRE(H.solve(rhs));
  for (int j = 0; j < n - 1; ++j)
    CHECK((rhs[j] - v.segment(j * 2, 2)).norm() < 1e-9 * v.norm());
}

TEST_CASE("stiffness solve inverts stiffness apply and dual norm is consistent") {
  const int n = 32, d = 2;
  std::mt19937_64 rng(19);
  DiscretePath h = random_path(d, n, rng);
  Vec flat((n - 1) * d);
  for (int j = 1; j < n; ++j) flat.segment((j - 1) * d, d) = h.nodes.col(j);
  Vec round = stiffness_solve(stiffness_apply(flat, d, n), d, n);
  CHECK((round - flat).norm() < 1e-10 * flat.norm());

  // dual norm of L h equals the H1 norm of h
  Vec Lh = stiffness_apply(flat, d, n);
  DiscretePath cot(d, n);
  for (int j = 1; j < n; ++j) cot.nodes.col(j) = Lh.segment((j - 1) * d, d);
  CHECK(dual_norm(cot) == doctest::Approx(h.norm()).epsilon(1e-10));
}

TEST_CASE("hp norm of a tent profile equals its slope") {
  const int n = 50;
  DiscretePath tent(1, n);
  for (int j = 0; j <= n; ++j)
    tent.nodes(0, j) = 0.25 - std::abs(0.5 - static_cast<double>(j) / n) / 2;
  CHECK(hp_norm(tent, 2.0) == doctest::Approx(0.5));
  CHECK(hp_norm(tent, 4.0) == doctest::Approx(0.5));
  CHECK(tent.norm() == doctest::Approx(0.5));
}

TEST_CASE("hardy S fixes constants") {
  Mat f = Mat::Ones(2, 64);
  Mat sf = hardy_apply_S(f);
  CHECK((sf - f).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("hardy T reproduces t log t for constant input") {
  const int n = 512;
  Mat f = Mat::Ones(1, n);
  DiscretePath h = hardy_apply_T(f);
  for (int j = 1; j < n; ++j) {
    double t = static_cast<double>(j) / n;
    CHECK(std::abs(h.nodes(0, j) - t * std::log(t)) < 5.0 / n);
  }
  CHECK(h.nodes(0, 0) == 0.0);
  CHECK(h.nodes(0, n) == 0.0);
}

TEST_CASE("hardy R integrates the mean-free part exactly for linear input") {
  const int n = 40;
  Mat f(1, n);
  for (int i = 0; i < n; ++i) f(0, i) = (i + 0.5) / n;
  DiscretePath h = hardy_apply_R(f);
  for (int j = 0; j <= n; ++j) {
    double t = static_cast<double>(j) / n;
    CHECK(std::abs(h.nodes(0, j) - (t * t / 2 - t / 2)) < 1e-13);
  }
}

TEST_CASE("hardy inequality holds with the discrete cap on random paths") {
  const int n = 128;
  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) {
    DiscretePath h = random_path(2, n, rng);
    for (double p : {2.0, 4.0}) {
      HardyCheck hc = hardy_inequality_check(h, p);
      CHECK(hc.ratio <= 1 + 2.0 / n);
      CHECK(hc.reverse_ratio <= 1 + 2.0 / n);
    }
  }
}

TEST_CASE("weighted pairing reduces to twice the H1 product for G = I and kappa = 0") {
  // with y = sx the integrand is 2 s^2 (h/s)' (g/s)'
  MetricField G = make_euclidean(1);
  Vec x(1);
  x << 1.0;
  const int n = 400;
  DiscretePath kappa(1, n);
  // h = s(1-s): (h/s)' = -1, so [h,h] = 2 int s^2 ds = 2/3
  DiscretePath h = sample_path(1, n, [](double s) {
    Vec v(1);
    v[0] = s * (1 - s);
    return v;
  });
  CHECK(weighted_pairing(G, x, kappa, h, h) == doctest::Approx(2.0 / 3).epsilon(1e-4));
}

TEST_CASE("random paths vanish at the endpoints") {
  std::mt19937_64 rng(29);
  DiscretePath h = random_path(3, 64, rng);
  CHECK(h.nodes.col(0).norm() == 0.0);
  CHECK(h.nodes.col(64).norm() < 1e-12);
  CHECK(h.finite());
}
