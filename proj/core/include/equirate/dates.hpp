#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace equirate {

using Date = std::chrono::year_month_day;
using YearMonth = std::chrono::year_month;

// Strict ISO-8601 calendar date (YYYY-MM-DD). Throws Error(kParse).
Date parse_date(std::string_view text);
// Strict YYYY-MM. Throws Error(kParse).
YearMonth parse_year_month(std::string_view text);

std::string format_date(Date d);
std::string format_year_month(YearMonth ym);

// Calendar-month addition: same day-of-month, clamped to the end of the target
// month (2022-01-31 + 1 month = 2022-02-28). `months` may be negative.
Date add_months(Date d, int months);
Date add_days(Date d, int days);
// Signed number of days from `from` to `to`.
int days_between(Date from, Date to);

YearMonth month_of(Date d);
Date first_of_month(YearMonth ym);
YearMonth add_months(YearMonth ym, int months);

// "March 2022"
std::string month_name_year(YearMonth ym);

}  // namespace equirate

template <>
struct fmt::formatter<equirate::Date> : fmt::formatter<std::string_view> {
  template <typename FormatContext>
  auto format(const equirate::Date& d, FormatContext& ctx) const -> decltype(ctx.out()) {
    return fmt::formatter<std::string_view>::format(equirate::format_date(d), ctx);
  }
};
