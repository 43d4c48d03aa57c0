#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "eik/families.hpp"

using namespace eik;

namespace {

Vec pt(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

}  // namespace

TEST_CASE("power law potential invariants") {
  RadialPotential pot = power_law_potential(1.0);
  CHECK(pot.mu == 1.0);
  CHECK(pot.sigma == doctest::Approx(1.0));
  CHECK(pot.invariants_hold());
  CHECK(pot.V(0.0) == doctest::Approx(-1.0));
  CHECK(pot.K(0.0) == doctest::Approx(2.0));
  RadialPotential flat = power_law_potential(0.0);
  CHECK(flat.sigma == doctest::Approx(2.0));
  CHECK(flat.invariants_hold());
}

TEST_CASE("constant potential gives the identity change of variables") {
  RadialPotential pot = constant_potential(-0.5, 0.0);  // K = 1
  InducedMetricTable tab(pot, 2000);
  for (double r : {0.01, 0.5, 3.0, 120.0}) {
    CHECK(tab.rho_of_r(r) == doctest::Approx(r).epsilon(1e-10));
    CHECK(tab.r_of_rho(r) == doctest::Approx(r).epsilon(1e-9));
  }
  double f, df, d2f;
  tab.f_eval(5.0, f, df, d2f);
  CHECK(f == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(df) < 1e-8);
}

TEST_CASE("change of variables round trip") {
  RadialPotential pot = power_law_potential(1.0);
  InducedMetricTable tab(pot);
  for (double r : {1e-2, 0.3, 2.0, 47.0, 900.0}) {
    double rho = tab.rho_of_r(r);
    CHECK(tab.r_of_rho(rho) == doctest::Approx(r).epsilon(1e-9));
  }
}

TEST_CASE("transverse factor limits for mu = 1") {
  RadialPotential pot = power_law_potential(1.0);
  InducedMetricTable tab(pot);
  double f, df, d2f;
  tab.f_eval(1e-7, f, df, d2f);
  CHECK(f == doctest::Approx(1.0).epsilon(1e-5));
  tab.f_eval(0.9 * tab.rho_max(), f, df, d2f);
  CHECK(f == doctest::Approx(0.5).epsilon(0.04));  // (2 - mu)/2
}

TEST_CASE("f derivatives match finite differences") {
  RadialPotential pot = power_law_potential(1.0);
  InducedMetricTable tab(pot);
  for (double rho : {0.2, 1.5, 10.0, 200.0}) {
    double f0, df0, d2f0, fp, fm, dp, dm, junk;
    tab.f_eval(rho, f0, df0, d2f0);
    double h = 1e-5 * rho;
    tab.f_eval(rho + h, fp, dp, junk);
    tab.f_eval(rho - h, fm, dm, junk);
    CHECK(df0 == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-4));
    CHECK(d2f0 == doctest::Approx((dp - dm) / (2 * h)).epsilon(1e-3));
  }
}

TEST_CASE("induced metric is the identity at the origin") {
  MetricField G = build_induced_metric(power_law_potential(1.0), 2000);
  CHECK((eval_metric(G, pt(1e-7, 0)) - Mat::Identity(2, 2)).norm() < 1e-5);
  CHECK(G.a > 0.2);
  CHECK(G.b <= 1.0 + 1e-9);
}

TEST_CASE("radial oracle agrees with the tabulated change of variables") {
  RadialPotential pot = power_law_potential(1.0);
  InducedMetricTable tab(pot);
  for (double r : {0.1, 1.0, 10.0, 500.0})
    CHECK(radial_eikonal_oracle(pot, r) == doctest::Approx(tab.rho_of_r(r)).epsilon(1e-7));
}

TEST_CASE("membership report for the decaying coulomb-like family") {
  RadialPotential pot = power_law_potential(1.0);
  MetricField G = build_induced_metric(pot, 4000);
  MembershipReport rep = verify_membership_O(pot, G, 1e-2, 1e3, 24);
  CHECK(rep.in_O);
  CHECK(rep.uniform_in_lambda);
  CHECK(rep.max_decomposition_defect < 1e-9);
  CHECK(rep.cbar >= rep.cbar_expected - 1e-6);
  CHECK(rep.cbar_expected == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("spiral fixed points of the plain sine profile") {
  SpiralConfig cfg = spiral_sine_config(0.05);
  auto fps = spiral_fixed_points(cfg);
  REQUIRE(fps.size() >= 2);
  // f' = cos(theta) = (1 + eps^2)^{-1}: roots near +-acos(1/1.0025)
  double target = std::acos(1.0 / (1 + cfg.eps * cfg.eps));
  int sinks = 0;
  for (const auto& fp : fps) {
    CHECK(std::abs(std::abs(fp.theta) - target) < 1e-9);
    if (fp.f_second < 0) ++sinks;
  }
  CHECK(sinks >= 1);
}

TEST_CASE("spiral metric is euclidean inside the cutoff") {
  MetricField G = build_spiral_metric(spiral_sine_config(0.05));
  CHECK((eval_metric(G, pt(0.3, 0.5)) - Mat::Identity(2, 2)).norm() < 1e-14);
  auto dG = G.grad(pt(0.4, -0.2));
  CHECK(dG[0].norm() < 1e-14);
  CHECK(dG[1].norm() < 1e-14);
}

TEST_CASE("spiral derivatives match finite differences across the transition") {
  MetricField G = build_spiral_metric(spiral_sine_config(0.05));
  MetricField fd = G;
  fd.grad = nullptr;
  fd.hess = nullptr;
  fd.finalize();
  for (const Vec& x : {pt(1.2, 0.9), pt(2.5, -1.0), pt(-6.0, 8.0)}) {
    auto ga = G.grad(x), gf = fd.grad(x);
    auto ha = G.hess(x), hf = fd.hess(x);
    for (int k = 0; k < 2; ++k) {
      CHECK((ga[k] - gf[k]).cwiseAbs().maxCoeff() < 1e-5);
      for (int l = 0; l < 2; ++l)
        CHECK((ha[k][l] - hf[k][l]).cwiseAbs().maxCoeff() < 1e-3);
    }
  }
}

TEST_CASE("exact spiral launch from a sink stays on the spiral") {
  SpiralConfig cfg = spiral_sine_config(0.05);
  double theta0 = 0;
  for (const auto& fp : spiral_fixed_points(cfg))
    if (fp.f_second < 0) theta0 = fp.theta;
  SpiralLaunchReport rep = spiral_exact_launch(cfg, theta0, 1.0);
  CHECK(!rep.truncated);
  CHECK(rep.max_phase_drift < 1e-3);
}

TEST_CASE("potential rejects bad parameters") {
  CHECK_THROWS_AS(power_law_potential(2.5), std::invalid_argument);
  CHECK_THROWS_AS(power_law_potential(1.0, -1.0), std::invalid_argument);
}
