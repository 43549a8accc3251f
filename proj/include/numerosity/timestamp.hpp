#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <optional>
#include <string>
#include <string_view>

namespace numerosity {

/// Wall-clock instant at millisecond precision. Log timestamps carry no zone
/// information, so values are naive local times stored on the system_clock
/// epoch without any offset applied.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

struct CivilTime {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;
    int millisecond = 0;
};

inline Timestamp make_timestamp(const CivilTime& c) {
    using namespace std::chrono;
    const sys_days date = year_month_day{year{c.year}, month{c.month}, day{c.day}};
    return time_point_cast<milliseconds>(date) + hours{c.hour} + minutes{c.minute} +
           seconds{c.second} + milliseconds{c.millisecond};
}

inline CivilTime to_civil(Timestamp t) {
    using namespace std::chrono;
    const auto date = floor<days>(t);
    const year_month_day ymd{date};
    auto rest = t - date;
    CivilTime c;
    c.year = static_cast<int>(ymd.year());
    c.month = static_cast<unsigned>(ymd.month());
    c.day = static_cast<unsigned>(ymd.day());
    c.hour = static_cast<int>(duration_cast<hours>(rest).count());
    rest -= hours{c.hour};
    c.minute = static_cast<int>(duration_cast<minutes>(rest).count());
    rest -= minutes{c.minute};
    c.second = static_cast<int>(duration_cast<seconds>(rest).count());
    rest -= seconds{c.second};
    c.millisecond = static_cast<int>(rest.count());
    return c;
}

/// Milliseconds as printed in trial logs: three digits with trailing zeros
/// stripped, keeping at least one digit (981 -> "981", 820 -> "82", 0 -> "0").
inline std::string render_milliseconds(int ms) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", ms);
    std::string s(buf);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    return s;
}

/// `[YYYY-MM-DD HH:MM(SS.f)]`
inline std::string render_log_date(Timestamp t) {
    const CivilTime c = to_civil(t);
    char buf[64];
    std::snprintf(buf, sizeof buf, "[%04d-%02u-%02u %02d:%02d(%02d.%s)]", c.year, c.month, c.day,
                  c.hour, c.minute, c.second, render_milliseconds(c.millisecond).c_str());
    return buf;
}

namespace detail {

inline bool read_fixed(std::string_view s, std::size_t pos, std::size_t width, int& out) {
    if (pos + width > s.size()) return false;
    const char* first = s.data() + pos;
    const char* last = first + width;
    for (const char* p = first; p != last; ++p)
        if (*p < '0' || *p > '9') return false;
    return std::from_chars(first, last, out).ec == std::errc{};
}

inline bool valid_civil(const CivilTime& c) {
    using namespace std::chrono;
    const year_month_day ymd{year{c.year}, month{c.month}, day{c.day}};
    return ymd.ok() && c.hour < 24 && c.minute < 60 && c.second < 60;
}

} // namespace detail

/// Inverse of render_log_date. Fractional digits are right-padded to
/// milliseconds ("6" -> 600). Accepts 1 to 3 fractional digits.
inline std::optional<Timestamp> parse_log_date(std::string_view s) {
    // [2022-05-19 17:02(25.981)]
    if (s.size() < 22 || s.front() != '[' || s.back() != ']') return std::nullopt;
    CivilTime c;
    int month = 0, day = 0;
    if (!detail::read_fixed(s, 1, 4, c.year) || s[5] != '-' ||
        !detail::read_fixed(s, 6, 2, month) || s[8] != '-' ||
        !detail::read_fixed(s, 9, 2, day) || s[11] != ' ' ||
        !detail::read_fixed(s, 12, 2, c.hour) || s[14] != ':' ||
        !detail::read_fixed(s, 15, 2, c.minute) || s[17] != '(' ||
        !detail::read_fixed(s, 18, 2, c.second) || s[20] != '.')
        return std::nullopt;
    const std::string_view frac = s.substr(21, s.size() - 21 - 2);
    if (s[s.size() - 2] != ')' || frac.empty() || frac.size() > 3) return std::nullopt;
    std::string padded(frac);
    padded.resize(3, '0');
    if (!detail::read_fixed(padded, 0, 3, c.millisecond)) return std::nullopt;
    c.month = static_cast<unsigned>(month);
    c.day = static_cast<unsigned>(day);
    if (!detail::valid_civil(c)) return std::nullopt;
    return make_timestamp(c);
}

/// `YYYY-MM-DDTHH:MM:SS.mmm`, used by the feedback event stream.
inline std::string render_iso(Timestamp t) {
    const CivilTime c = to_civil(t);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03d", c.year, c.month, c.day,
                  c.hour, c.minute, c.second, c.millisecond);
    return buf;
}

/// Parses `YYYY-MM-DD`, `YYYY-MM-DD HH:MM:SS` or `YYYY-MM-DDTHH:MM:SS[.mmm]`.
inline std::optional<Timestamp> parse_iso(std::string_view s) {
    CivilTime c;
    int month = 0, day = 0;
    if (!detail::read_fixed(s, 0, 4, c.year) || s.size() < 10 || s[4] != '-' ||
        !detail::read_fixed(s, 5, 2, month) || s[7] != '-' || !detail::read_fixed(s, 8, 2, day))
        return std::nullopt;
    c.month = static_cast<unsigned>(month);
    c.day = static_cast<unsigned>(day);
    if (s.size() > 10) {
        if ((s[10] != 'T' && s[10] != ' ') || s.size() < 19 ||
            !detail::read_fixed(s, 11, 2, c.hour) || s[13] != ':' ||
            !detail::read_fixed(s, 14, 2, c.minute) || s[16] != ':' ||
            !detail::read_fixed(s, 17, 2, c.second))
            return std::nullopt;
        if (s.size() > 19) {
            if (s[19] != '.' || s.size() != 23 || !detail::read_fixed(s, 20, 3, c.millisecond))
                return std::nullopt;
        }
    }
    if (!detail::valid_civil(c)) return std::nullopt;
    return make_timestamp(c);
}

/// Current local wall-clock time as a naive timestamp.
inline Timestamp local_now() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const std::time_t tt = system_clock::to_time_t(now);
    std::tm tm{};
    localtime_r(&tt, &tm);
    CivilTime c;
    c.year = tm.tm_year + 1900;
    c.month = static_cast<unsigned>(tm.tm_mon + 1);
    c.day = static_cast<unsigned>(tm.tm_mday);
    c.hour = tm.tm_hour;
    c.minute = tm.tm_min;
    c.second = tm.tm_sec;
    c.millisecond =
        static_cast<int>(duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000);
    return make_timestamp(c);
}

} // namespace numerosity
