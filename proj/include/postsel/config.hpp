#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace postsel {

// Flat key = value configuration.  Lookups go through typed getters; keys
// that were never read are reported by `unknown_keys`, so a misspelled option
// fails loudly instead of silently falling back to a default.
class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback);
  std::string require_string(const std::string& key);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback);
  std::vector<std::string> get_string_list(
      const std::string& key, const std::vector<std::string>& fallback);

  // Keys present but never consumed by a getter.
  std::vector<std::string> unknown_keys() const;
  void check_consumed() const;  // throws ValidationError if any unknown key

  // Resolved view of everything that was read, defaults substituted; stable
  // (sorted) order.  Feed this to reports and to `config_hash`.
  const std::map<std::string, std::string>& resolved() const {
    return resolved_;
  }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> consumed_;
  std::map<std::string, std::string> resolved_;
};

// FNV-1a over "key=value\n" lines in sorted key order.
std::uint64_t config_hash(const std::map<std::string, std::string>& resolved);

}  // namespace postsel
