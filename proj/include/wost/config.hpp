#pragma once

// Flat `key = value` configuration files with dotted keys.

#include "wost/errors.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace wost {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* b = t.data();
  const char* e = b + t.size();
  if (*b == '+') ++b;
  const auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

inline bool parse_int(const std::string& s, long long& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  return r.ec == std::errc() && r.ptr == t.data() + t.size();
}

// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text_file(const std::string& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCategory::MissingFile, "cannot find file '" + path + "'");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ConfigFile {
  std::map<std::string, std::string> values;
  std::map<std::string, std::string> where;  // key -> "file:line" for diagnostics
  std::string base_dir = ".";                // relative paths resolve against this
};

inline ConfigFile parse_config(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string loc = origin + ":" + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCategory::Parse, loc + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key.find_first_of(" \t") != std::string::npos) {
      throw Error(ErrorCategory::Parse, loc + ": malformed key '" + key + "'");
    }
    if (cfg.values.count(key)) throw Error(ErrorCategory::Parse, loc + ": duplicate key '" + key + "'");
    cfg.values[key] = value;
    cfg.where[key] = loc;
  }
  return cfg;
}

inline ConfigFile read_config(const std::string& path) {
  ConfigFile cfg = parse_config(read_text_file(path), path);
  const auto parent = std::filesystem::path(path).parent_path();
  cfg.base_dir = parent.empty() ? "." : parent.string();
  return cfg;
}

// `key=value` from the command line; replaces any file value.
inline void apply_override(ConfigFile& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const std::string key = eq == std::string::npos ? "" : trim(assignment.substr(0, eq));
  if (key.empty()) throw Error(ErrorCategory::Usage, "--set expects key=value, got '" + assignment + "'");
  cfg.values[key] = trim(assignment.substr(eq + 1));
  cfg.where[key] = "--set " + key;
}

// Typed access that remembers which keys were read, so leftovers can be
// reported as unknown.
class ConfigReader {
 public:
  explicit ConfigReader(const ConfigFile& cfg) : cfg_(cfg) {}

  bool has(const std::string& key) const { return cfg_.values.count(key) > 0; }

  std::string string(const std::string& key, const std::string& fallback = "") {
    used_.insert(key);
    auto it = cfg_.values.find(key);
    return it == cfg_.values.end() ? fallback : it->second;
  }

  double real(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    double v;
    if (!parse_double(string(key), v)) fail(key, "expected a number");
    return v;
  }

  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    long long v;
    if (!parse_int(string(key), v)) fail(key, "expected an integer");
    return v;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const std::string v = string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(key, "expected true or false");
    return false;
  }

  std::vector<double> reals(const std::string& key) {
    std::vector<double> out;
    for (const auto& w : split_words(string(key))) {
      double v;
      if (!parse_double(w, v)) fail(key, "expected numbers");
      out.push_back(v);
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    auto it = cfg_.where.find(key);
    const std::string loc = it == cfg_.where.end() ? key : it->second;
    throw Error(ErrorCategory::Parse, loc + ": " + key + ": " + what);
  }

  void reject_unknown() const {
    for (const auto& [key, value] : cfg_.values) {
      if (!used_.count(key)) fail(key, "unknown key");
    }
  }

  const std::string& base_dir() const { return cfg_.base_dir; }

 private:
  const ConfigFile& cfg_;
  std::set<std::string> used_;
};

inline std::string resolve_path(const std::string& base_dir, const std::string& p) {
  const std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

}  // namespace wost
