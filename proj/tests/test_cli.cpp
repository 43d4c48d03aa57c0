#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "eik/checks.hpp"
#include "eik/config.hpp"

using namespace eik;

TEST_CASE("config parses sections comments and values") {
  ExperimentConfig cfg = ExperimentConfig::parse_string(
      "# leading comment\n"
      "[task]\n"
      "name = distance\n"
      "tol = 1e-8\n"
      "\n"
      "[metric]\n"
      "kind = induced\n"
      "mu = 1.0\n"
      "eps_list = 0.1, 0.03, 0.01\n"
      "target = 3.0, -4.0\n"
      "seed = 12345678901\n");
  CHECK(cfg.get_string("task.name") == "distance");
  CHECK(cfg.get_double("task.tol", 0) == doctest::Approx(1e-8));
  CHECK(cfg.get_string("metric.kind") == "induced");
  CHECK(cfg.get_double("metric.mu", 0) == doctest::Approx(1.0));
  CHECK(cfg.get_u64("metric.seed", 0) == 12345678901ULL);
  auto list = cfg.get_list("metric.eps_list");
  REQUIRE(list.size() == 3);
  CHECK(list[0] == doctest::Approx(0.1));
  CHECK(list[2] == doctest::Approx(0.01));
  Vec x = cfg.get_vec("metric.target");
  REQUIRE(x.size() == 2);
  CHECK(x[0] == doctest::Approx(3.0));
  CHECK(x[1] == doctest::Approx(-4.0));
}

TEST_CASE("config fallbacks apply to missing keys") {
  ExperimentConfig cfg = ExperimentConfig::parse_string("[a]\nb = 1\n");
  CHECK(cfg.has("a.b"));
  CHECK(!cfg.has("a.c"));
  CHECK(cfg.get_double("a.c", 2.5) == 2.5);
  CHECK(cfg.get_int("a.c", 7) == 7);
  CHECK(cfg.get_string("a.c", "dflt") == "dflt");
}

TEST_CASE("config rejects malformed input") {
  CHECK_THROWS_AS(ExperimentConfig::parse_string("[s]\nno equals sign\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse_string("[unclosed\nk = 1\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse_string("[]\nk = 1\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse_string("[s]\n= 1\n"), ConfigError);
  // keys before any section header are stored bare
  ExperimentConfig cfg = ExperimentConfig::parse_string("top = 3\n");
  CHECK(cfg.get_int("top", 0) == 3);
}

TEST_CASE("config rejects non-numeric values on typed reads") {
  ExperimentConfig cfg = ExperimentConfig::parse_string("[a]\nb = not_a_number\nc = 1.5x\n");
  CHECK_THROWS_AS(cfg.get_double("a.b", 0), ConfigError);
  CHECK_THROWS_AS(cfg.get_double("a.c", 0), ConfigError);
  CHECK_THROWS_AS(cfg.get_int("a.b", 0), ConfigError);
  CHECK_THROWS_AS(cfg.get_list("a.b"), ConfigError);
}

TEST_CASE("config set overrides parsed entries") {
  ExperimentConfig cfg = ExperimentConfig::parse_string("[a]\nb = 1\n");
  cfg.set("a.b", "2");
  CHECK(cfg.get_int("a.b", 0) == 2);
  CHECK(cfg.entries().size() == 1);
}

TEST_CASE("check registry lists the thirteen acceptance criteria in order") {
  std::vector<std::string> expect = {
      "euclidean-exactness", "radial-oracle",      "eikonal-residual",
      "conservation",        "minimizer-bounds",   "hessian-coercivity",
      "observables",         "perturbation-rates", "gradient-identity",
      "derivative-scaling",  "hardy-bounds",       "spiral-dynamics",
      "cross-method"};
  CHECK(check_names() == expect);
}

TEST_CASE("run_check rejects unknown names") {
  CHECK_THROWS_AS(run_check("no-such-check"), std::invalid_argument);
}

TEST_CASE("quick euclidean check passes deterministically") {
  CheckOptions opts;
  opts.quick = true;
  opts.workers = 2;
  CheckResult a = run_check("euclidean-exactness", opts);
  CheckResult b = run_check("euclidean-exactness", opts);
  CHECK(a.passed);
  CHECK(a.name == "euclidean-exactness");
  CHECK(!a.detail.empty());
  CHECK(a.detail == b.detail);
}
