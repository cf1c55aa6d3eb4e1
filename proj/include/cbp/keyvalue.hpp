#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cbp/error.hpp"

namespace cbp {

/*!
 * `key = value` file. `#` starts a comment, blank lines are ignored, keys
 * are unique. Every accessor marks its key as used so leftover (misspelled)
 * keys can be reported with their line numbers.
 */
class KeyValueFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static KeyValueFile parse(std::istream& is, std::string source = "<config>") {
    KeyValueFile kv;
    kv.source_ = std::move(source);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
      ++line;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      std::string text = trim(raw);
      if (text.empty()) continue;
      auto eq = text.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorCode::config, kv.source_ + ":" + std::to_string(line) +
                                           ": expected 'key = value', got '" + text + "'");
      std::string key = trim(text.substr(0, eq));
      std::string value = trim(text.substr(eq + 1));
      if (key.empty())
        throw Error(ErrorCode::config, kv.source_ + ":" + std::to_string(line) + ": empty key");
      if (auto it = kv.entries_.find(key); it != kv.entries_.end())
        throw Error(ErrorCode::config, kv.source_ + ":" + std::to_string(line) + ": key '" + key +
                                           "' already set on line " +
                                           std::to_string(it->second.line));
      kv.entries_[key] = {value, line};
    }
    return kv;
  }

  static KeyValueFile parse_string(std::string const& text, std::string source = "<config>") {
    std::istringstream is(text);
    return parse(is, std::move(source));
  }

  static KeyValueFile load(std::string const& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::config, "cannot open config file '" + path + "'");
    return parse(is, path);
  }

  std::string const& source() const { return source_; }
  bool has(std::string const& key) const { return entries_.count(key) > 0; }

  //! "file:line: key 'k'" for messages
  std::string where(std::string const& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return source_ + ": key '" + key + "'";
    return source_ + ":" + std::to_string(it->second.line) + ": key '" + key + "'";
  }

  std::string const& string(std::string const& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw Error(ErrorCode::config, source_ + ": missing required key '" + key + "'");
    used_.push_back(key);
    return it->second.value;
  }

  std::string string(std::string const& key, std::string const& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  double number(std::string const& key) const { return to_number(key, string(key)); }
  double number(std::string const& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t unsigned_integer(std::string const& key) const {
    auto const& s = string(key);
    std::uint64_t v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw Error(ErrorCode::config, where(key) + ": expected an unsigned integer, got '" + s + "'");
    return v;
  }
  std::uint64_t unsigned_integer(std::string const& key, std::uint64_t fallback) const {
    return has(key) ? unsigned_integer(key) : fallback;
  }

  bool boolean(std::string const& key, bool fallback) const {
    if (!has(key)) return fallback;
    auto const& s = string(key);
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw Error(ErrorCode::config, where(key) + ": expected true or false, got '" + s + "'");
  }

  //! Comma and/or whitespace separated numbers.
  std::vector<double> list(std::string const& key) const {
    std::string s = string(key);
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream is(s);
    std::vector<double> out;
    for (std::string tok; is >> tok;) out.push_back(to_number(key, tok));
    if (out.empty()) throw Error(ErrorCode::config, where(key) + ": empty list");
    return out;
  }
  std::vector<double> list(std::string const& key, std::vector<double> fallback) const {
    return has(key) ? list(key) : fallback;
  }

  //! Keys never read by an accessor, in line order.
  std::vector<std::string> unused() const {
    std::vector<std::pair<int, std::string>> out;
    for (auto const& [k, e] : entries_)
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) out.emplace_back(e.line, k);
    std::sort(out.begin(), out.end());
    std::vector<std::string> keys;
    for (auto& p : out) keys.push_back(p.second);
    return keys;
  }

  void reject_unused() const {
    auto u = unused();
    if (!u.empty()) throw Error(ErrorCode::config, where(u.front()) + ": unknown key");
  }

  std::map<std::string, Entry> const& entries() const { return entries_; }

 private:
  static std::string trim(std::string const& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  double to_number(std::string const& key, std::string const& s) const {
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw Error(ErrorCode::config, where(key) + ": expected a number, got '" + s + "'");
    return v;
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
  mutable std::vector<std::string> used_;
};

}  // namespace cbp
