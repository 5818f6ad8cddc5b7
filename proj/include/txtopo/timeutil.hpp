#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace txtopo {

// Calendar helpers on UTC epoch seconds. No local-time or DST handling
// anywhere: all instants are UTC by construction.

struct CivilDate {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
};

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t days);

// "YYYY-MM-DD" -> epoch seconds at midnight UTC. Empty optional on bad input.
std::optional<std::int64_t> parse_date(std::string_view s);

// "HH:MM:SS" (or "HH:MM") -> seconds past midnight.
std::optional<std::int64_t> parse_time_of_day(std::string_view s);

// Combined "YYYY-MM-DD HH:MM:SS", "YYYY-MM-DDTHH:MM:SS", or date-only
// (time defaults to 00:00:00).
std::optional<std::int64_t> parse_timestamp(std::string_view s);

std::string format_date(std::int64_t epoch_seconds);
std::string format_time_of_day(std::int64_t epoch_seconds);
std::string format_timestamp(std::int64_t epoch_seconds);

// Midnight UTC of the day containing the instant.
std::int64_t floor_to_day(std::int64_t epoch_seconds);

// Durations like "7d", "24h", "30m", "45s", or a plain count of seconds.
// Throws DataError on unparseable or non-positive input.
std::int64_t parse_duration(std::string_view s);

}  // namespace txtopo
