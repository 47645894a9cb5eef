#include "gmxa/config.hpp"

#include <fstream>
#include <sstream>

namespace gmxa {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string dir_of(const std::string& path) {
  std::size_t pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

void parse_into(Config& cfg, const std::string& text, const std::string& base_dir, int depth) {
  require(depth < 8, "Config: include depth exceeded");
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.rfind("include ", 0) == 0) {
      std::string inc = trim(line.substr(8));
      if (!inc.empty() && inc.front() != '/') inc = base_dir + "/" + inc;
      std::ifstream f(inc);
      require(static_cast<bool>(f), "Config: cannot open include " + inc);
      std::string sub((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
      parse_into(cfg, sub, dir_of(inc), depth + 1);
      continue;
    }
    std::size_t eq = line.find('=');
    require(eq != std::string::npos, "Config: expected 'key = value', got: " + line);
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), "Config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Config cfg;
  parse_into(cfg, text, dir_of(path), 0);
  return cfg;
}

Config Config::from_string(const std::string& text, const std::string& base_dir) {
  Config cfg;
  parse_into(cfg, text, base_dir, 0);
  return cfg;
}

std::string Config::get_string(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), "Config: missing key '" + key + "'");
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
  try {
    return std::stod(get_string(key));
  } catch (const std::invalid_argument&) {
    throw DomainError("Config: key '" + key + "' is not a number");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
  try {
    return std::stoll(get_string(key));
  } catch (const std::invalid_argument&) {
    throw DomainError("Config: key '" + key + "' is not an integer");
  }
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DomainError("Config: key '" + key + "' is not a boolean");
}

std::vector<double> Config::get_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get_string(key));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::invalid_argument&) {
      throw DomainError("Config: list '" + key + "' has non-numeric entry '" + tok + "'");
    }
  }
  require(!out.empty(), "Config: list '" + key + "' is empty");
  return out;
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& fallback) const {
  return has(key) ? get_list(key) : fallback;
}

std::vector<std::string> Config::validate_required(const std::vector<std::string>& keys) const {
  std::vector<std::string> missing;
  for (const auto& k : keys)
    if (!has(k)) missing.push_back("missing required key '" + k + "'");
  return missing;
}

}  // namespace gmxa
