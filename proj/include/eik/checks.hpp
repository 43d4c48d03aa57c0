#pragma once

#include <string>
#include <vector>

namespace eik {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // short human-readable summary of the measured values
};

struct CheckOptions {
  int workers = 0;              // 0: hardware concurrency
  unsigned long long seed = 1;
  bool quick = false;           // reduced sample counts for smoke runs
};

// Registered acceptance checks, in report order.
std::vector<std::string> check_names();

// Runs one named check; throws std::invalid_argument for unknown names.
CheckResult run_check(const std::string& name, const CheckOptions& opts = {});

std::vector<CheckResult> run_all_checks(const CheckOptions& opts = {});

}  // namespace eik
