#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvmdh/error.hpp"

namespace rvmdh {

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Whole-string numeric parse; nullopt on any trailing garbage.
inline std::optional<double> parse_double(std::string_view s) noexcept {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) noexcept {
  s = trim(s);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Shortest representation that round-trips.
inline std::string format_exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// Plain `key = value` text config. Blank lines and lines starting with '#'
// are ignored; keys may repeat (e.g. one `session` line per session).
class KeyValueConfig {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
  };

  static KeyValueConfig parse(std::istream& in, std::string source = "<stream>") {
    KeyValueConfig cfg;
    cfg.source_ = std::move(source);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = detail::trim(raw);
      if (line.empty() || line.front() == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorKind::Parse, cfg.source_ + ":" + std::to_string(line_no) +
                                          ": expected `key = value`");
      }
      const auto key = detail::trim(line.substr(0, eq));
      if (key.empty()) {
        throw Error(ErrorKind::Parse, cfg.source_ + ":" + std::to_string(line_no) + ": empty key");
      }
      cfg.entries_.push_back({std::string(key), std::string(detail::trim(line.substr(eq + 1))), line_no});
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config file " + path);
    return parse(in, path);
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const std::string& source() const noexcept { return source_; }

  // Last occurrence wins for scalar keys.
  std::optional<std::string> get(std::string_view key) const {
    std::optional<std::string> found;
    for (const auto& e : entries_)
      if (e.key == key) found = e.value;
    return found;
  }

  std::string require(std::string_view key) const {
    auto v = get(key);
    if (!v) throw Error(ErrorKind::Config, source_ + ": missing required key `" + std::string(key) + "`");
    return *v;
  }

  std::vector<Entry> all(std::string_view key) const {
    std::vector<Entry> out;
    for (const auto& e : entries_)
      if (e.key == key) out.push_back(e);
    return out;
  }

 private:
  std::string source_;
  std::vector<Entry> entries_;
};

}  // namespace rvmdh
