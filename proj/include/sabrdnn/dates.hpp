#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace sabrdnn {

using Date = std::chrono::sys_days;

// ISO YYYY-MM-DD.
Date parse_date(std::string_view s);
std::string format_date(Date d);

// Calendar month arithmetic, day clamped to the end of the target month.
Date add_months(Date d, int months);

// Weekend-only calendar.
bool is_business_day(Date d);
Date add_business_days(Date d, int n);
Date modified_following(Date d);

double act360(Date from, Date to);
double act365(Date from, Date to);

// "6M", "18M", "3Y" -> months.
int parse_tenor(std::string_view s);

}  // namespace sabrdnn
