#include "postsel/config.hpp"

#include <fstream>
#include <sstream>

#include "postsel/csv.hpp"
#include "postsel/errors.hpp"

namespace postsel {

static std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

ConfigMap ConfigMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  ConfigMap cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": empty key");
    cfg.set(key, value);
  }
  return cfg;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  values_[key] = value;
  consumed_[key] = false;
}

bool ConfigMap::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& fallback) {
  auto it = values_.find(key);
  std::string v = fallback;
  if (it != values_.end()) {
    consumed_[key] = true;
    v = it->second;
  }
  resolved_[key] = v;
  return v;
}

std::string ConfigMap::require_string(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end())
    throw ValidationError("missing required config key '" + key + "'");
  consumed_[key] = true;
  resolved_[key] = it->second;
  return it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = format_double(fallback);
    return fallback;
  }
  consumed_[key] = true;
  const double v = parse_double(it->second);
  resolved_[key] = format_double(v);
  return v;
}

std::int64_t ConfigMap::get_int(const std::string& key, std::int64_t fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = std::to_string(fallback);
    return fallback;
  }
  consumed_[key] = true;
  std::size_t pos = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(it->second, &pos);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': not an integer");
  }
  if (pos != it->second.size())
    throw ValidationError("config key '" + key + "': not an integer");
  resolved_[key] = std::to_string(v);
  return v;
}

std::uint64_t ConfigMap::get_u64(const std::string& key,
                                 std::uint64_t fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = std::to_string(fallback);
    return fallback;
  }
  consumed_[key] = true;
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(it->second, &pos);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': not an unsigned integer");
  }
  if (pos != it->second.size())
    throw ValidationError("config key '" + key + "': not an unsigned integer");
  resolved_[key] = std::to_string(v);
  return v;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = fallback ? "true" : "false";
    return fallback;
  }
  consumed_[key] = true;
  const std::string& s = it->second;
  bool v;
  if (s == "true" || s == "1" || s == "yes") v = true;
  else if (s == "false" || s == "0" || s == "no") v = false;
  else throw ValidationError("config key '" + key + "': not a boolean");
  resolved_[key] = v ? "true" : "false";
  return v;
}

std::vector<double> ConfigMap::get_double_list(
    const std::string& key, const std::vector<double>& fallback) {
  auto it = values_.find(key);
  std::vector<double> out;
  if (it == values_.end()) {
    out = fallback;
  } else {
    consumed_[key] = true;
    std::istringstream ss(it->second);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const std::string t = trim(cell);
      if (t.empty())
        throw ValidationError("config key '" + key + "': empty list element");
      out.push_back(parse_double(t));
    }
    if (out.empty())
      throw ValidationError("config key '" + key + "': empty list");
  }
  std::string joined;
  for (std::size_t i = 0; i < out.size(); ++i)
    joined += (i ? "," : "") + format_double(out[i]);
  resolved_[key] = joined;
  return out;
}

std::vector<std::string> ConfigMap::get_string_list(
    const std::string& key, const std::vector<std::string>& fallback) {
  auto it = values_.find(key);
  std::vector<std::string> out;
  if (it == values_.end()) {
    out = fallback;
  } else {
    consumed_[key] = true;
    std::istringstream ss(it->second);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const std::string t = trim(cell);
      if (!t.empty()) out.push_back(t);
    }
  }
  std::string joined;
  for (std::size_t i = 0; i < out.size(); ++i)
    joined += (i ? "," : "") + out[i];
  resolved_[key] = joined;
  return out;
}

std::vector<std::string> ConfigMap::unknown_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, used] : consumed_)
    if (!used) out.push_back(k);
  return out;
}

void ConfigMap::check_consumed() const {
  const auto unknown = unknown_keys();
  if (unknown.empty()) return;
  std::string msg = "unknown config key(s):";
  for (const auto& k : unknown) msg += " '" + k + "'";
  throw ValidationError(msg);
}

std::uint64_t config_hash(
    const std::map<std::string, std::string>& resolved) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto eat = [&h](const std::string& s) {
    for (const unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
  };
  for (const auto& [k, v] : resolved) {
    eat(k);
    eat("=");
    eat(v);
    eat("\n");
  }
  return h;
}

}  // namespace postsel
