#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <functional>
#include <optional>
#include <string>

namespace vps {

// UTC instant with second precision.
using Instant = std::chrono::sys_seconds;

inline Instant instant_from_unix(std::int64_t secs) {
  return Instant(std::chrono::seconds(secs));
}

inline std::int64_t unix_seconds(Instant t) {
  return t.time_since_epoch().count();
}

// ISO-8601 UTC, e.g. "2010-06-01T12:00:00Z".
inline std::string format_instant(Instant t) {
  std::time_t secs = static_cast<std::time_t>(unix_seconds(t));
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

inline std::optional<Instant> parse_instant(const std::string& text) {
  std::tm tm{};
  char tail = '\0';
  int matched = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c",
                            &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                            &tm.tm_min, &tm.tm_sec, &tail);
  if (matched != 7 || tail != 'Z' || text.size() != 20) return std::nullopt;
  if (tm.tm_mon < 1 || tm.tm_mon > 12 || tm.tm_mday < 1 || tm.tm_mday > 31 ||
      tm.tm_hour > 23 || tm.tm_min > 59 || tm.tm_sec > 60) {
    return std::nullopt;
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  std::time_t secs = timegm(&tm);
  if (secs == static_cast<std::time_t>(-1)) return std::nullopt;
  return instant_from_unix(static_cast<std::int64_t>(secs));
}

// Injectable clock; tests freeze it, production uses the system clock.
using Clock = std::function<Instant()>;

inline Clock system_clock() {
  return [] {
    return std::chrono::time_point_cast<std::chrono::seconds>(
        std::chrono::system_clock::now());
  };
}

inline Clock fixed_clock(Instant t) {
  return [t] { return t; };
}

}  // namespace vps
