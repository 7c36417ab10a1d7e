#include "sabrdnn/dates.hpp"

#include <charconv>
#include <cstdio>

#include "sabrdnn/error.hpp"

namespace sabrdnn {

using namespace std::chrono;

namespace {

int parse_int(std::string_view s, std::string_view whole) {
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        fail(ErrorKind::Format, "bad number in '" + std::string(whole) + "'");
    return v;
}

}  // namespace

Date parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') fail(ErrorKind::Format, "expected YYYY-MM-DD, got '" + std::string(s) + "'");
    const year_month_day ymd{year{parse_int(s.substr(0, 4), s)}, month{unsigned(parse_int(s.substr(5, 2), s))},
                             day{unsigned(parse_int(s.substr(8, 2), s))}};
    if (!ymd.ok()) fail(ErrorKind::Format, "invalid calendar date '" + std::string(s) + "'");
    return sys_days{ymd};
}

std::string format_date(Date d) {
    const year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()));
    return buf;
}

Date add_months(Date d, int n) {
    const year_month_day ymd{d};
    const year_month ym = year_month{ymd.year(), ymd.month()} + months{n};
    const day last = year_month_day_last{ym.year(), month_day_last{ym.month()}}.day();
    return sys_days{year_month_day{ym.year(), ym.month(), std::min(ymd.day(), last)}};
}

bool is_business_day(Date d) {
    const weekday w{d};
    return w != Saturday && w != Sunday;
}

Date add_business_days(Date d, int n) {
    const int step = n >= 0 ? 1 : -1;
    while (n != 0) {
        d += days{step};
        if (is_business_day(d)) n -= step;
    }
    return d;
}

Date modified_following(Date d) {
    Date f = d;
    while (!is_business_day(f)) f += days{1};
    if (year_month_day{f}.month() == year_month_day{d}.month()) return f;
    f = d;
    while (!is_business_day(f)) f -= days{1};
    return f;
}

double act360(Date from, Date to) { return double((to - from).count()) / 360.0; }
double act365(Date from, Date to) { return double((to - from).count()) / 365.0; }

int parse_tenor(std::string_view s) {
    if (s.size() < 2) fail(ErrorKind::Format, "bad tenor '" + std::string(s) + "'");
    const int n = parse_int(s.substr(0, s.size() - 1), s);
    const char unit = s.back();
    if (n <= 0) fail(ErrorKind::Format, "tenor must be positive: '" + std::string(s) + "'");
    if (unit == 'M' || unit == 'm') return n;
    if (unit == 'Y' || unit == 'y') return 12 * n;
    fail(ErrorKind::Format, "tenor unit must be M or Y: '" + std::string(s) + "'");
}

}  // namespace sabrdnn
