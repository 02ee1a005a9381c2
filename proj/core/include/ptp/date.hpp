#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ptp {

// Proleptic Gregorian calendar date. Comparisons work field-wise because the
// members are ordered most-significant first.
struct CivilDate {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  auto operator<=>(const CivilDate&) const = default;
};

bool valid_date(CivilDate d);
bool is_leap_year(int year);
int days_in_month(int year, int month);

// days since 1970-01-01 (negative before the epoch)
std::int64_t serial_day(CivilDate d);
CivilDate from_serial_day(std::int64_t days);
CivilDate add_days(CivilDate d, std::int64_t n);

int day_of_week(CivilDate d);  // Monday = 0 .. Sunday = 6
int iso_week(CivilDate d);     // 1..53, ISO-8601 week numbering

// strict YYYY-MM-DD; anything else (including invalid dates) -> nullopt
std::optional<CivilDate> parse_date(std::string_view text);
std::string format_date(CivilDate d);

}  // namespace ptp
