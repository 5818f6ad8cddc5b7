#include "txtopo/timeutil.hpp"

#include <array>
#include <charconv>
#include <cstdio>

#include "txtopo/errors.hpp"

namespace txtopo {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30,
                                                31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return kDays[static_cast<std::size_t>(m - 1)];
}

}  // namespace

std::int64_t days_from_civil(const CivilDate& d) {
  // Howard Hinnant's algorithm, shifted so the epoch is 1970-01-01.
  std::int64_t y = d.year;
  const int m = d.month;
  const int dd = d.day;
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<std::int64_t>(y - era * 400);
  const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + dd - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

CivilDate civil_from_days(std::int64_t days) {
  days += 719468;
  const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const auto doe = static_cast<std::int64_t>(days - era * 146097);
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = yoe + era * 400;
  const auto doy = static_cast<std::int64_t>(doe - (365 * yoe + yoe / 4 - yoe / 100));
  const std::int64_t mp = (5 * doy + 2) / 153;
  const auto d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  const auto m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

std::optional<std::int64_t> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m) ||
      !parse_int(s.substr(8, 2), d)) {
    return std::nullopt;
  }
  if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) return std::nullopt;
  return days_from_civil({y, m, d}) * kSecondsPerDay;
}

std::optional<std::int64_t> parse_time_of_day(std::string_view s) {
  if (s.size() != 8 && s.size() != 5) return std::nullopt;
  if (s[2] != ':') return std::nullopt;
  int h = 0, m = 0, sec = 0;
  if (!parse_int(s.substr(0, 2), h) || !parse_int(s.substr(3, 2), m)) {
    return std::nullopt;
  }
  if (s.size() == 8) {
    if (s[5] != ':' || !parse_int(s.substr(6, 2), sec)) return std::nullopt;
  }
  if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 59) {
    return std::nullopt;
  }
  return h * 3600 + m * 60 + sec;
}

std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  if (s.size() == 10) return parse_date(s);
  if (s.size() < 11) return std::nullopt;
  const char sep = s[10];
  if (sep != ' ' && sep != 'T') return std::nullopt;
  const auto date = parse_date(s.substr(0, 10));
  const auto tod = parse_time_of_day(s.substr(11));
  if (!date || !tod) return std::nullopt;
  return *date + *tod;
}

std::string format_date(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / kSecondsPerDay;
  if (epoch_seconds % kSecondsPerDay < 0) --days;
  const CivilDate d = civil_from_days(days);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

std::string format_time_of_day(std::int64_t epoch_seconds) {
  std::int64_t tod = epoch_seconds % kSecondsPerDay;
  if (tod < 0) tod += kSecondsPerDay;
  char buf[12];
  std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d",
                static_cast<int>(tod / 3600), static_cast<int>(tod / 60 % 60),
                static_cast<int>(tod % 60));
  return buf;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
  return format_date(epoch_seconds) + " " + format_time_of_day(epoch_seconds);
}

std::int64_t floor_to_day(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / kSecondsPerDay;
  if (epoch_seconds % kSecondsPerDay < 0) --days;
  return days * kSecondsPerDay;
}

std::int64_t parse_duration(std::string_view s) {
  if (s.empty()) throw DataError("empty duration");
  std::int64_t scale = 1;
  std::string_view digits = s;
  switch (s.back()) {
    case 'd': scale = kSecondsPerDay; digits = s.substr(0, s.size() - 1); break;
    case 'h': scale = 3600; digits = s.substr(0, s.size() - 1); break;
    case 'm': scale = 60; digits = s.substr(0, s.size() - 1); break;
    case 's': scale = 1; digits = s.substr(0, s.size() - 1); break;
    default: break;
  }
  std::int64_t value = 0;
  const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size()) {
    throw DataError("unparseable duration: " + std::string(s));
  }
  if (value <= 0) throw DataError("duration must be positive: " + std::string(s));
  return value * scale;
}

}  // namespace txtopo
