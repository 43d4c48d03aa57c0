#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "eik/metric.hpp"

using namespace eik;

namespace {

Vec pt(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

// transverse profile u = (1+rho^2)^{-1/2}
void u_inv_sqrt(double rho, double& u, double& du, double& d2u) {
  double b = 1 + rho * rho;
  u = std::pow(b, -0.5);
  du = -rho * std::pow(b, -1.5);
  d2u = (2 * rho * rho - 1) * std::pow(b, -2.5);
}

}  // namespace

TEST_CASE("euclidean basics") {
  MetricField G = make_euclidean(3);
  Vec x(3);
  x << 1, -2, 0.5;
  CHECK((eval_metric(G, x) - Mat::Identity(3, 3)).norm() == 0);
  auto ab = ellipticity_estimate(G, {x});
  CHECK(ab.first == doctest::Approx(1.0));
  CHECK(ab.second == doctest::Approx(1.0));
  CHECK(orthogonal_decomposition_defect(G, x) < 1e-14);
}

TEST_CASE("eval_metric rejects bad input") {
  MetricField G = make_euclidean(2);
  Vec x(2);
  x << std::nan(""), 0;
  CHECK_THROWS_AS(eval_metric(G, x), std::invalid_argument);
  CHECK_THROWS_AS(orthogonal_decomposition_defect(G, Vec(Vec::Zero(2))),
                  std::invalid_argument);
}

TEST_CASE("radial transverse closed-form derivatives match finite differences") {
  MetricField G = make_radial_transverse(2, u_inv_sqrt, 0.1, 1.0);
  MetricField fd = G;
  fd.grad = nullptr;
  fd.hess = nullptr;
  fd.finalize();
  for (const Vec& x : {pt(1.0, 0.3), pt(-2.5, 4.0), pt(0.05, -0.02), pt(30.0, -7.0)}) {
    auto ga = G.grad(x), gf = fd.grad(x);
    auto ha = G.hess(x), hf = fd.hess(x);
    double scale = std::max(1.0, x.norm());
    for (int k = 0; k < 2; ++k) {
      CHECK((ga[k] - gf[k]).cwiseAbs().maxCoeff() * scale < 1e-6);
      for (int l = 0; l < 2; ++l)
        CHECK((ha[k][l] - hf[k][l]).cwiseAbs().maxCoeff() * scale * scale < 1e-4);
    }
  }
}

TEST_CASE("radial transverse decomposes orthogonally") {
  MetricField G = make_radial_transverse(3, u_inv_sqrt, 0.1, 1.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0, 1);
  for (int i = 0; i < 20; ++i) {
    Vec x(3);
    for (int k = 0; k < 3; ++k) x[k] = gauss(rng);
    x *= std::pow(10.0, i / 10.0 - 1);
    CHECK(orthogonal_decomposition_defect(G, x) < 1e-12);
  }
}

TEST_CASE("convexity margin matches the radial formula 1 + rho u' / (2u)") {
  MetricField G = make_radial_transverse(2, u_inv_sqrt, 0.1, 1.0);
  std::vector<Vec> samples = {pt(0.5, 0), pt(0, 2), pt(3, 4), pt(-20, 5)};
  ConvexityReport rep = convexity_margin(G, samples);
  for (size_t i = 0; i < samples.size(); ++i) {
    double rho = samples[i].norm();
    double u, du, d2u;
    u_inv_sqrt(rho, u, du, d2u);
    double expect = 1 + rho * du / (2 * u);
    CHECK(rep.margins[i] == doctest::Approx(expect).epsilon(1e-8));
  }
  CHECK(rep.cbar > 0.5 - 1e-9);
  CHECK(rep.in_class);
}

TEST_CASE("convexity margin for the identity metric is one") {
  MetricField G = make_euclidean(2);
  ConvexityReport rep = convexity_margin(G, {pt(1, 2), pt(-3, 0.5)});
  for (double m : rep.margins) CHECK(m == doctest::Approx(1.0));
}

TEST_CASE("convexity margin rejects non-decomposing fields") {
  auto base = std::make_shared<MetricField>(make_euclidean(2));
  auto bump = std::make_shared<MetricField>(make_bump_perturbation(2, pt(1, 0), 2.0));
  MetricField G = make_perturbed(base, bump, 0.5);
  CHECK_THROWS_AS(convexity_margin(G, {pt(1.0, 0.2)}), std::runtime_error);
}

TEST_CASE("seminorm of the euclidean metric") {
  MetricField G = make_euclidean(2);
  SeminormReport rep = seminorm_estimate(G, log_radial_lattice(2, 16, 8), 3);
  CHECK(rep.per_order[0] == doctest::Approx(1.0));
  CHECK(rep.per_order[1] < 1e-12);
  CHECK(rep.per_order[2] < 1e-12);
  CHECK(rep.estimate == doctest::Approx(1.0));
}

TEST_CASE("built-in perturbation shapes have unit sampled seminorm scale") {
  for (const MetricField& D :
       {make_bump_perturbation(2, pt(4, 1), 3.0), make_tail_perturbation(2)}) {
    SeminormReport rep = seminorm_estimate(D, log_radial_lattice(2, 48, 16, 1e-2, 1e3), 3);
    CHECK(rep.estimate > 0.3);
    CHECK(rep.estimate < 3.0);
  }
}

TEST_CASE("perturbation distance recovers eps exactly for perturbed fields") {
  auto base = std::make_shared<MetricField>(make_euclidean(2));
  auto tail = std::make_shared<MetricField>(make_tail_perturbation(2));
  double eps = 0.03;
  MetricField G = make_perturbed(base, tail, eps);
  auto lattice = log_radial_lattice(2, 32, 8, 1e-2, 1e3);
  double d = perturbation_distance(G, *base, lattice).estimate;
  double unit = seminorm_estimate(*tail, lattice, 3).estimate;
  CHECK(d == doctest::Approx(eps * unit).epsilon(1e-12));
}

TEST_CASE("perturbed field interpolates between base and target") {
  auto base = std::make_shared<MetricField>(make_euclidean(2));
  auto tail = std::make_shared<MetricField>(make_tail_perturbation(2));
  MetricField G = make_perturbed(base, tail, 0.1);
  Vec x = pt(1.5, -0.4);
  Mat expect = base->value(x) + 0.1 * tail->value(x);
  CHECK((G.value(x) - expect).norm() < 1e-14);
  CHECK(G.a > 0);
  CHECK(G.b > G.a);
}

TEST_CASE("ellipticity estimate flags indefinite fields") {
  MetricField G = make_euclidean(2);
  G.value = [](const Vec&) {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
  };
  CHECK_THROWS_AS(ellipticity_estimate(G, {pt(1, 0)}), std::runtime_error);
  CHECK_THROWS_AS(ellipticity_estimate(make_euclidean(2), std::vector<Vec>{}),
                  std::invalid_argument);
}

TEST_CASE("log radial lattice is deterministic and spans the range") {
  auto a = log_radial_lattice(2, 8, 6, 0.1, 100.0, 42);
  auto b = log_radial_lattice(2, 8, 6, 0.1, 100.0, 42);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() == 0);
  double lo = 1e300, hi = 0;
  for (const Vec& x : a) {
    lo = std::min(lo, x.norm());
    hi = std::max(hi, x.norm());
  }
  CHECK(lo == doctest::Approx(0.1));
  CHECK(hi == doctest::Approx(100.0));
}
