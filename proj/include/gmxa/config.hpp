#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gmxa/common.hpp"

namespace gmxa {

/// Flat key-value experiment configuration. Lines are `key = value`, `#`
/// comments, and `include PATH` directives (relative to the including file).
class Config {
 public:
  Config() = default;
  static Config load(const std::string& path);
  static Config from_string(const std::string& text, const std::string& base_dir = ".");

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key) const;  // comma separated
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Collects every violation instead of stopping at the first.
  std::vector<std::string> validate_required(const std::vector<std::string>& keys) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace gmxa
