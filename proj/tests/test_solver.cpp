#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "eik/families.hpp"
#include "eik/solver.hpp"

using namespace eik;

namespace {

Vec pt(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

MetricField conformal4() {
  // G = 4 I, so S(x) = 2 |x|
  MetricField G = make_euclidean(2);
  G.value = [](const Vec&) { return Mat(4.0 * Mat::Identity(2, 2)); };
  G.a = 4.0;
  G.b = 4.0;
  G.finalize();
  return G;
}

}  // namespace

TEST_CASE("euclidean distance is exact with zero correction") {
  MetricField G = make_euclidean(2);
  Vec x = pt(3, 4);
  SolverOptions opts;
  opts.n_intervals = 64;
  GeodesicSolution sol = minimize_energy(G, x, DiscretePath(), opts);
  CHECK(sol.converged);
  CHECK(sol.distance == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(sol.kappa.norm() < 1e-10);
  CHECK((sol.grad_distance - x / 5.0).norm() < 1e-10);
}

TEST_CASE("conformal scaling of the distance and its gradient") {
  MetricField G = conformal4();
  Vec x = pt(1, -2);
  GeodesicSolution sol = minimize_energy(G, x);
  CHECK(sol.distance == doctest::Approx(2 * x.norm()).epsilon(1e-10));
  CHECK((sol.grad_distance - 2 * x / x.norm()).norm() < 1e-8);
}

TEST_CASE("induced metric keeps straight rays stationary") {
  MetricField G = build_induced_metric(power_law_potential(1.0), 2000);
  Vec x = pt(3, -1);
  GeodesicSolution sol = minimize_energy(G, x);
  CHECK(sol.converged);
  CHECK(sol.iterations == 0);
  CHECK(sol.distance == doctest::Approx(x.norm()).epsilon(1e-12));
}

TEST_CASE("euclidean hessian eigenvalue is exactly two") {
  MetricField G = make_euclidean(2);
  SolverOptions opts;
  opts.n_intervals = 32;
  GeodesicSolution sol = minimize_energy(G, pt(3, 4), DiscretePath(), opts);
  CHECK(hessian_smallest_eigenvalue(G, sol) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("geodesic ode rhs vanishes for constant metrics") {
  MetricField G = make_euclidean(3);
  Vec y(3), v(3);
  y << 1, 2, 3;
  v << -1, 0.5, 2;
  CHECK(geodesic_ode_rhs(G, y, v).norm() < 1e-14);
}

TEST_CASE("integrate_geodesic conserves the kinetic invariant") {
  MetricField G = build_spiral_metric(spiral_sine_config(0.05));
  Vec v0 = pt(1.5, 0.7);
  ShootingResult traj = integrate_geodesic(G, v0, 500);
  CHECK(traj.converged);
  CHECK(traj.conservation_defect < 1e-9);
  CHECK(static_cast<int>(traj.pos.size()) == 501);
  CHECK(traj.s.back() == doctest::Approx(1.0));
}

TEST_CASE("shoot_to_target hits a euclidean endpoint in one iteration") {
  MetricField G = make_euclidean(2);
  Vec x = pt(-2, 5);
  ShootingResult traj = shoot_to_target(G, x, 1e-10, 100);
  CHECK(traj.converged);
  CHECK((traj.pos.back() - x).norm() < 1e-9 * x.norm());
  CHECK((traj.v - x).norm() < 1e-8);
}

TEST_CASE("shooting and minimization agree on a curved metric") {
  MetricField G = build_induced_metric(power_law_potential(0.5), 2000);
  Vec x = pt(4, 3);
  GeodesicSolution sol = minimize_energy(G, x);
  ShootingResult traj = shoot_to_target(G, x, 1e-9, 256);
  REQUIRE(traj.converged);
  double S_shoot = std::sqrt(traj.v.dot(G.value(traj.pos.front()) * traj.v));
  CHECK(S_shoot == doctest::Approx(sol.distance).epsilon(1e-5));
}

TEST_CASE("trace_geodesic_to_radius reaches the stop radius") {
  MetricField G = make_euclidean(2);
  Vec x0 = pt(2, 0), v = pt(1, 0.1);
  ShootingResult traj = trace_geodesic_to_radius(G, x0, v, 50.0);
  CHECK(traj.converged);
  CHECK(traj.pos.back().norm() >= 50.0);
  CHECK(traj.conservation_defect < 1e-12);
}

TEST_CASE("trace_geodesic_to_radius honors the arclength cap") {
  MetricField G = make_euclidean(2);
  ShootingResult traj = trace_geodesic_to_radius(G, pt(2, 0), pt(1, 0), 1e6, 2e-3, 1.0);
  CHECK(!traj.converged);
  CHECK(traj.pos.back().norm() < 10.0);
}

TEST_CASE("richardson gradient matches finite differences of S") {
  MetricField G = build_spiral_metric(spiral_sine_config(0.05));
  Vec x = pt(3, 2);
  GeodesicSolution sol = minimize_energy(G, x);
  double h = 1e-4 * x.norm();
  for (int k = 0; k < 2; ++k) {
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    double fd = (minimize_energy(G, xp).distance - minimize_energy(G, xm).distance) / (2 * h);
    CHECK(sol.grad_distance[k] == doctest::Approx(fd).epsilon(5e-4));
  }
}

TEST_CASE("minimize_energy validates the initial path shape") {
  MetricField G = make_euclidean(2);
  SolverOptions opts;
  opts.n_intervals = 16;
  DiscretePath bad(2, 8);
  CHECK_THROWS_AS(minimize_energy(G, pt(1, 1), bad, opts), std::invalid_argument);
  DiscretePath bad_dim(3, 16);
  CHECK_THROWS_AS(minimize_energy(G, pt(1, 1), bad_dim, opts), std::invalid_argument);
}

TEST_CASE("warm starts converge from a perturbed initial path") {
  MetricField G = build_spiral_metric(spiral_sine_config(0.05));
  Vec x = pt(2, 2);
  SolverOptions opts;
  std::mt19937_64 rng(5);
  DiscretePath init = random_path(2, opts.n_intervals, rng);
  init.nodes *= 0.3;
  GeodesicSolution warm = minimize_energy(G, x, init, opts);
  GeodesicSolution cold = minimize_energy(G, x, DiscretePath(), opts);
  CHECK(warm.converged);
  CHECK(warm.distance == doctest::Approx(cold.distance).epsilon(1e-9));
}
