#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace petwell {

/// UTC instant at second precision.
using Instant = std::chrono::sys_seconds;

/// ISO-8601 calendar week. Ordered by (year, week).
struct WindowId {
  int iso_year = 0;
  int iso_week = 0;

  auto operator<=>(const WindowId&) const = default;
};

namespace detail {

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc{};
}

}  // namespace detail

/// Parses an RFC 3339 timestamp ("2017-01-02T10:00:00Z", "...+02:00",
/// fractional seconds truncated). Returns nullopt on malformed input.
inline std::optional<Instant> parse_rfc3339(std::string_view s) {
  using namespace std::chrono;
  int y, mo, d, h, mi, sec;
  if (!detail::read_int(s, 0, 4, y) || s.size() < 19 || s[4] != '-' ||
      !detail::read_int(s, 5, 2, mo) || s[7] != '-' || !detail::read_int(s, 8, 2, d))
    return std::nullopt;
  if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') return std::nullopt;
  if (!detail::read_int(s, 11, 2, h) || s[13] != ':' || !detail::read_int(s, 14, 2, mi) ||
      s[16] != ':' || !detail::read_int(s, 17, 2, sec))
    return std::nullopt;
  if (h > 23 || mi > 59 || sec > 60) return std::nullopt;

  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == start) return std::nullopt;
  }
  int offset_minutes = 0;
  if (pos >= s.size()) return std::nullopt;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '-' ? -1 : 1;
    int oh, om;
    if (!detail::read_int(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !detail::read_int(s, pos + 4, 2, om) || oh > 23 || om > 59)
      return std::nullopt;
    offset_minutes = sign * (oh * 60 + om);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} - minutes{offset_minutes};
}

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
inline std::string format_rfc3339(Instant t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

/// ISO week containing the instant: the week belongs to the year of its Thursday.
inline WindowId iso_week_of(Instant t) {
  using namespace std::chrono;
  const sys_days d = floor<days>(t);
  const unsigned iso_wd = weekday{d}.iso_encoding();  // Mon=1 .. Sun=7
  const sys_days thursday = d - days{iso_wd - 1} + days{3};
  const year iso_year = year_month_day{thursday}.year();
  const sys_days jan1{iso_year / January / 1};
  return {static_cast<int>(iso_year), static_cast<int>((thursday - jan1).count() / 7 + 1)};
}

}  // namespace petwell
