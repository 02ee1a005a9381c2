#include "ptp/date.hpp"

#include <cstdio>

namespace ptp {

bool is_leap_year(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
  static constexpr int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) return 0;
  if (month == 2 && is_leap_year(year)) return 29;
  return lengths[month - 1];
}

bool valid_date(CivilDate d) {
  return d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= days_in_month(d.year, d.month);
}

// civil-calendar <-> serial-day conversion, the classic era/day-of-era
// formulation (exact over the whole proleptic Gregorian range)
std::int64_t serial_day(CivilDate d) {
  const std::int64_t y = d.year - (d.month <= 2 ? 1 : 0);
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t m = d.month;
  const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d.day - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

CivilDate from_serial_day(std::int64_t days) {
  const std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = yoe + era * 400;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const std::int64_t day = doy - (153 * mp + 2) / 5 + 1;
  const std::int64_t month = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (month <= 2 ? 1 : 0)), static_cast<int>(month),
                   static_cast<int>(day)};
}

CivilDate add_days(CivilDate d, std::int64_t n) { return from_serial_day(serial_day(d) + n); }

int day_of_week(CivilDate d) {
  // 1970-01-01 was a Thursday (index 3 with Monday = 0)
  const std::int64_t s = serial_day(d) + 3;
  return static_cast<int>(((s % 7) + 7) % 7);
}

int iso_week(CivilDate d) {
  // ISO week 1 is the week containing the first Thursday of the year; weeks
  // run Monday..Sunday. Computing via the Thursday of d's week avoids all
  // year-boundary special cases.
  const std::int64_t thursday = serial_day(d) - day_of_week(d) + 3;
  const int iso_year = from_serial_day(thursday).year;
  const std::int64_t jan1 = serial_day(CivilDate{iso_year, 1, 1});
  return static_cast<int>((thursday - jan1) / 7) + 1;
}

std::optional<CivilDate> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t pos, std::size_t len, int& out) {
    out = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      const char c = text[i];
      if (c < '0' || c > '9') return false;
      out = out * 10 + (c - '0');
    }
    return true;
  };
  CivilDate d;
  if (!digits(0, 4, d.year) || !digits(5, 2, d.month) || !digits(8, 2, d.day)) return std::nullopt;
  if (!valid_date(d)) return std::nullopt;
  return d;
}

std::string format_date(CivilDate d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

}  // namespace ptp
