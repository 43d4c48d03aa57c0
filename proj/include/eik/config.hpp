#pragma once

#include <map>
#include <string>
#include <vector>

#include "eik/types.hpp"

namespace eik {

/// Flat key-value configuration with [section] headers; keys are stored as
/// "section.key".  Lines starting with '#' are comments.
class ExperimentConfig {
 public:
  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_string(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback = "") const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  unsigned long long get_u64(const std::string& key, unsigned long long fallback) const;
  // comma separated doubles
  std::vector<double> get_list(const std::string& key) const;
  Vec get_vec(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace eik
