#include "equirate/dates.hpp"

#include <array>
#include <charconv>

#include "equirate/error.hpp"

namespace equirate {
namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  int value = 0;
  const char* first = text.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw Error(ErrorKind::kParse, fmt::format("invalid date '{}'", whole));
  }
  return value;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw Error(ErrorKind::kParse, fmt::format("invalid date '{}', expected YYYY-MM-DD", text));
  }
  const int y = parse_fixed(text, 0, 4, text);
  const int m = parse_fixed(text, 5, 2, text);
  const int d = parse_fixed(text, 8, 2, text);
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) {
    throw Error(ErrorKind::kParse, fmt::format("invalid calendar date '{}'", text));
  }
  return date;
}

YearMonth parse_year_month(std::string_view text) {
  if (text.size() != 7 || text[4] != '-') {
    throw Error(ErrorKind::kParse, fmt::format("invalid month '{}', expected YYYY-MM", text));
  }
  const int y = parse_fixed(text, 0, 4, text);
  const int m = parse_fixed(text, 5, 2, text);
  const YearMonth ym{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)}};
  if (!ym.ok()) {
    throw Error(ErrorKind::kParse, fmt::format("invalid month '{}'", text));
  }
  return ym;
}

std::string format_date(Date d) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

std::string format_year_month(YearMonth ym) {
  return fmt::format("{:04d}-{:02d}", static_cast<int>(ym.year()), static_cast<unsigned>(ym.month()));
}

Date add_months(Date d, int months) {
  const YearMonth target = add_months(YearMonth{d.year(), d.month()}, months);
  const auto last = std::chrono::year_month_day_last{target.year(), std::chrono::month_day_last{target.month()}};
  const auto day = d.day() > last.day() ? last.day() : d.day();
  return Date{target.year(), target.month(), day};
}

YearMonth add_months(YearMonth ym, int months) {
  return ym + std::chrono::months{months};
}

Date add_days(Date d, int days) {
  return Date{std::chrono::sys_days{d} + std::chrono::days{days}};
}

int days_between(Date from, Date to) {
  return static_cast<int>((std::chrono::sys_days{to} - std::chrono::sys_days{from}).count());
}

YearMonth month_of(Date d) { return YearMonth{d.year(), d.month()}; }

Date first_of_month(YearMonth ym) { return Date{ym.year(), ym.month(), std::chrono::day{1}}; }

std::string month_name_year(YearMonth ym) {
  static constexpr std::array<std::string_view, 12> kNames = {
      "January", "February", "March",     "April",   "May",      "June",
      "July",    "August",   "September", "October", "November", "December"};
  return fmt::format("{} {}", kNames[static_cast<unsigned>(ym.month()) - 1], static_cast<int>(ym.year()));
}

}  // namespace equirate
