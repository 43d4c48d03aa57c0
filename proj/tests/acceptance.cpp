#include <cstdio>

#include "eik/checks.hpp"

int main() {
  eik::CheckOptions opts;
  opts.workers = 0;
  opts.seed = 1;
  int failures = 0;
  for (const auto& name : eik::check_names()) {
    eik::CheckResult res = eik::run_check(name, opts);
    std::printf("%s %s: %s\n", res.passed ? "PASS" : "FAIL", res.name.c_str(),
                res.detail.c_str());
    std::fflush(stdout);
    if (!res.passed) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
