#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "wurl/common.hpp"

extern "C" char** environ;

namespace wurl {

namespace detail {
inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}
}  // namespace detail

// Flat key=value configuration ('key value' works too). '#' starts a
// comment, keys are dotted lowercase words, repeated keys accumulate (used
// for walls and goals); scalar getters read the last occurrence.
class Config {
 public:
  Config() = default;

  static Config parse_text(const std::string& text, const std::string& origin = "<string>") {
    Config c;
    std::size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
      std::size_t nl = text.find('\n', pos);
      std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
      pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      std::size_t eq = line.find('=');
      if (eq == std::string::npos) eq = line.find_first_of(" \t");
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value or key value");
      std::string key = detail::trim(line.substr(0, eq));
      std::string val = detail::trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      if (key.find_first_of(" \t") != std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": key contains whitespace");
      c.add(key, val);
    }
    return c;
  }

  static Config parse_file(const std::string& path);  // defined in io.hpp

  void add(const std::string& key, const std::string& value) {
    values_[key].push_back(value);
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = {value};
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) return fallback;
    return it->second.back();
  }

  std::vector<std::string> get_all(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? std::vector<std::string>{} : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return to_double(get(key), key);
  }

  int get_int(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    return int(to_ll(get(key), key));
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string s = get(key);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      throw ConfigError("config key '" + key + "': bad unsigned integer '" + s + "'");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string s = get(key);
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError("config key '" + key + "': bad boolean '" + s + "'");
  }

  // Comma or space separated doubles ("6,6" or "-1 -1 1 3").
  static Vec parse_doubles(const std::string& s, int expected = -1) {
    Vec out;
    std::string cur;
    auto flush = [&] {
      if (cur.empty()) return;
      out.push_back(to_double(cur, "<list>"));
      cur.clear();
    };
    for (char ch : s) {
      if (ch == ',' || std::isspace(static_cast<unsigned char>(ch)))
        flush();
      else
        cur += ch;
    }
    flush();
    if (expected >= 0 && int(out.size()) != expected)
      throw ConfigError("expected " + std::to_string(expected) + " numbers in '" + s + "'");
    return out;
  }

  // Applies WURL_-style environment overrides: the prefix is stripped, the
  // rest is lowercased, and a double underscore becomes the key separator
  // ('WURL_TRAIN__EPISODES_PER_POLICY' sets train.episodes_per_policy).
  // Single underscores survive so multi-word keys stay reachable. Returns
  // the applied pairs for logging.
  std::vector<std::pair<std::string, std::string>> apply_env_overrides(
      const std::string& prefix = "WURL_") {
    std::vector<std::pair<std::string, std::string>> applied;
    for (char** e = environ; e && *e; ++e) {
      std::string entry(*e);
      if (entry.compare(0, prefix.size(), prefix) != 0) continue;
      std::size_t eq = entry.find('=');
      if (eq == std::string::npos || eq <= prefix.size()) continue;
      std::string raw = entry.substr(prefix.size(), eq - prefix.size());
      std::string key;
      for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '_' && i + 1 < raw.size() && raw[i + 1] == '_') {
          key += '.';
          ++i;
        } else {
          key += char(std::tolower(static_cast<unsigned char>(raw[i])));
        }
      }
      std::string val = entry.substr(eq + 1);
      set(key, val);
      applied.emplace_back(key, val);
    }
    std::sort(applied.begin(), applied.end());
    return applied;
  }

  // Deterministic snapshot: keys sorted, repeats in insertion order.
  std::string dump() const {
    std::string out;
    for (const auto& [k, vs] : values_) {
      for (const auto& v : vs) {
        out += k;
        out += "=";
        out += v;
        out += "\n";
      }
    }
    return out;
  }

  const std::map<std::string, std::vector<std::string>>& values() const { return values_; }

 private:
  static double to_double(const std::string& s, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty() || errno == ERANGE)
      throw ConfigError("config key '" + key + "': bad number '" + s + "'");
    return v;
  }

  static long long to_ll(const std::string& s, const std::string& key) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      throw ConfigError("config key '" + key + "': bad integer '" + s + "'");
    return v;
  }

  std::map<std::string, std::vector<std::string>> values_;
};

}  // namespace wurl
