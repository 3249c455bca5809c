#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mv {

// UTC instant, seconds since the Unix epoch. All timestamps in the engine are
// UTC; DST never shifts the grid.
using TimePoint = std::int64_t;

namespace detail {

// Howard Hinnant's civil-days algorithms.
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int yy = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = yy + (m <= 2);
}

}  // namespace detail

inline TimePoint make_utc(int y, unsigned mo, unsigned d, unsigned h = 0, unsigned mi = 0,
                          unsigned s = 0) {
    return detail::days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

// Accepts "YYYY-MM-DD", "YYYY-MM-DD HH:MM", "YYYY-MM-DDTHH:MM:SS" with an
// optional trailing "Z". Anything else is an error.
inline TimePoint parse_iso8601(std::string_view sv) {
    std::string s(sv);
    if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.pop_back();
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0;
    double sec = 0.0;
    char sep = 0;
    int n = 0;
    int got = std::sscanf(s.c_str(), "%d-%u-%u%c%u:%u:%lf%n", &y, &mo, &d, &sep, &h, &mi, &sec, &n);
    if (got >= 4 && sep != 'T' && sep != ' ')
        throw std::runtime_error("bad timestamp: " + std::string(sv));
    if (got == 3) {
        h = mi = 0;
        sec = 0;
    } else if (got == 6) {
        sec = 0;
    } else if (got == 7) {
        if (n != static_cast<int>(s.size()))
            throw std::runtime_error("bad timestamp: " + std::string(sv));
    } else {
        throw std::runtime_error("bad timestamp: " + std::string(sv));
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec < 0 || sec >= 61)
        throw std::runtime_error("bad timestamp: " + std::string(sv));
    return make_utc(y, mo, d, h, mi, 0) + static_cast<std::int64_t>(sec);
}

inline std::string format_iso8601(TimePoint t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    int y;
    unsigned mo, d;
    detail::civil_from_days(days, y, mo, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, mo, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

// Half-open [start, end).
struct DateInterval {
    TimePoint start = 0;
    TimePoint end = 0;

    bool contains(TimePoint t) const { return t >= start && t < end; }
    bool valid() const { return start < end; }
    bool contains(const DateInterval& other) const {
        return other.start >= start && other.end <= end;
    }
};

enum class Frequency { min15, hourly, daily, weekly };

inline constexpr Frequency kAllFrequencies[] = {Frequency::min15, Frequency::hourly,
                                                Frequency::daily, Frequency::weekly};

inline std::int64_t step_seconds(Frequency f) {
    switch (f) {
        case Frequency::min15: return 900;
        case Frequency::hourly: return 3600;
        case Frequency::daily: return 86400;
        case Frequency::weekly: return 7 * 86400;
    }
    throw std::logic_error("unknown frequency");
}

inline std::string to_string(Frequency f) {
    switch (f) {
        case Frequency::min15: return "15min";
        case Frequency::hourly: return "hourly";
        case Frequency::daily: return "daily";
        case Frequency::weekly: return "weekly";
    }
    throw std::logic_error("unknown frequency");
}

inline Frequency parse_frequency(std::string_view s) {
    if (s == "15min" || s == "15-min" || s == "15minute" || s == "15-minute") return Frequency::min15;
    if (s == "hourly") return Frequency::hourly;
    if (s == "daily") return Frequency::daily;
    if (s == "weekly") return Frequency::weekly;
    throw std::runtime_error("unknown frequency '" + std::string(s) +
                             "' (expected 15min, hourly, daily or weekly)");
}

// Start of the interval containing t. Weeks are calendar weeks starting
// Monday 00:00 UTC; days/hours/quarter-hours align to the UTC clock.
inline TimePoint floor_to(Frequency f, TimePoint t) {
    if (f == Frequency::weekly) {
        std::int64_t days = t / 86400;
        if (t % 86400 < 0) --days;
        std::int64_t dow_mon = ((days % 7) + 7 + 3) % 7;  // 1970-01-01 is a Thursday
        return (days - dow_mon) * 86400;
    }
    std::int64_t step = step_seconds(f);
    std::int64_t q = t / step;
    if (t % step < 0) --q;
    return q * step;
}

// true when a is finer than or equal to b (a's step divides b's span)
inline bool finer_or_equal(Frequency a, Frequency b) {
    return step_seconds(a) <= step_seconds(b);
}

}  // namespace mv
