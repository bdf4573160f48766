#pragma once

// Flat INI-style configuration for sweep recipes:
//
//   # comment
//   [job-name]
//   kind = attack
//   alpha = 0.05:0.45:0.05   ; also a comma list: 0.1,0.2,0.3
//   L = 50
//
// Sections are kept in file order. Consumers declare the keys they accept;
// anything else is rejected loudly so typos cannot silently fall back to a
// default. Values stay strings until a typed getter parses them.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "powlab/rng.hpp"

namespace powlab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

class ConfigSection {
 public:
  explicit ConfigSection(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  void set(const std::string& key, const std::string& value) {
    for (auto& kv : entries_) {
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    }
    entries_.emplace_back(key, value);
  }

  bool has(const std::string& key) const {
    for (const auto& kv : entries_) {
      if (kv.first == key) return true;
    }
    return false;
  }

  const std::string& get(const std::string& key) const {
    for (const auto& kv : entries_) {
      if (kv.first == key) return kv.second;
    }
    throw ConfigError("[" + name_ + "] missing required key '" + key + "'");
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
  }

  double as_double(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t pos = 0;
    double out;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      throw ConfigError("[" + name_ + "] key '" + key + "': not a number: '" + v + "'");
    }
    if (pos != v.size()) {
      throw ConfigError("[" + name_ + "] key '" + key + "': trailing junk in '" + v + "'");
    }
    return out;
  }

  double as_double_or(const std::string& key, double fallback) const {
    return has(key) ? as_double(key) : fallback;
  }

  long long as_int(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t pos = 0;
    long long out;
    try {
      out = std::stoll(v, &pos);
    } catch (const std::exception&) {
      throw ConfigError("[" + name_ + "] key '" + key + "': not an integer: '" + v + "'");
    }
    if (pos != v.size()) {
      throw ConfigError("[" + name_ + "] key '" + key + "': trailing junk in '" + v + "'");
    }
    return out;
  }

  long long as_int_or(const std::string& key, long long fallback) const {
    return has(key) ? as_int(key) : fallback;
  }

  bool as_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("[" + name_ + "] key '" + key + "': not a boolean: '" + v + "'");
  }

  // Fails if the section contains a key outside `allowed` (typo guard).
  void require_known_keys(const std::vector<std::string>& allowed) const {
    for (const auto& kv : entries_) {
      if (std::find(allowed.begin(), allowed.end(), kv.first) == allowed.end()) {
        throw ConfigError("[" + name_ + "] unknown key '" + kv.first + "'");
      }
    }
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::string name_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

class Config {
 public:
  static Config parse_string(const std::string& text) {
    Config cfg;
    cfg.text_ = text;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    ConfigSection* current = nullptr;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find_first_of("#;");
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
        }
        const std::string name = detail::trim(line.substr(1, line.size() - 2));
        if (name.empty()) {
          throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
        }
        cfg.sections_.emplace_back(name);
        current = &cfg.sections_.back();
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
      }
      if (!current) {
        throw ConfigError("line " + std::to_string(lineno) + ": key outside any [section]");
      }
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty()) {
        throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      }
      if (current->has(key)) {
        throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      }
      current->set(key, value);
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

  const std::vector<ConfigSection>& sections() const { return sections_; }

  std::vector<ConfigSection>& sections() { return sections_; }

  // Digest over the raw text; echoed in output stamps.
  std::uint64_t digest() const { return fnv1a64(text_); }

 private:
  std::string text_;
  std::vector<ConfigSection> sections_;
};

// Grid values: either a comma list ("10,20,50") or an inclusive range with
// step ("0.05:0.45:0.05"). A bare scalar is a one-element grid.
inline std::vector<double> parse_grid(const std::string& spec) {
  const std::string s = detail::trim(spec);
  if (s.empty()) throw ConfigError("empty grid spec");
  std::vector<double> out;
  const auto to_double = [&](const std::string& tok) {
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad grid value: '" + tok + "'");
    }
    if (pos != detail::trim(tok).size()) throw ConfigError("bad grid value: '" + tok + "'");
    return v;
  };
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::string tok;
    std::istringstream in(s);
    while (std::getline(in, tok, ':')) parts.push_back(detail::trim(tok));
    if (parts.size() != 3) throw ConfigError("range grid must be start:stop:step: '" + s + "'");
    const double start = to_double(parts[0]);
    const double stop = to_double(parts[1]);
    const double step = to_double(parts[2]);
    if (!(step > 0.0)) throw ConfigError("grid step must be positive: '" + s + "'");
    if (stop < start) throw ConfigError("grid stop below start: '" + s + "'");
    // Inclusive stop; values are snapped to 12 decimals so decimal grids
    // print as written instead of accumulating float error.
    const long long n = static_cast<long long>(std::floor((stop - start) / step + 0.5)) + 1;
    for (long long i = 0; i < n; ++i) {
      const double v = start + static_cast<double>(i) * step;
      if (v > stop + 0.5 * step) break;
      out.push_back(std::round(v * 1e12) / 1e12);
    }
    return out;
  }
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = detail::trim(tok);
    if (tok.empty()) throw ConfigError("empty grid element in '" + s + "'");
    out.push_back(to_double(tok));
  }
  if (out.empty()) throw ConfigError("empty grid spec");
  return out;
}

inline std::vector<long long> parse_int_grid(const std::string& spec) {
  std::vector<long long> out;
  for (double v : parse_grid(spec)) {
    const double r = std::llround(v);
    if (std::abs(v - r) > 1e-9) throw ConfigError("grid value not an integer: " + spec);
    out.push_back(static_cast<long long>(r));
  }
  return out;
}

}  // namespace powlab
