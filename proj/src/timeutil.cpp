#include "featstore/timeutil.hpp"

#include <cstdio>

namespace featstore::timeutil {

int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& year, int& month, int& day) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t y = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = static_cast<int>(y + (month <= 2));
}

bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_year(int year) { return is_leap_year(year) ? 366 : 365; }

static int days_in_month(int year, int month) {
    static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap_year(year)) return 29;
    return lengths[month - 1];
}

int weekday_mon0(int64_t days) {
    // 1970-01-01 was a Thursday.
    return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

int64_t to_epoch(const CivilTime& ct) {
    return days_from_civil(ct.year, ct.month, ct.day) * 86400 + ct.hour * 3600 +
           ct.minute * 60 + ct.second;
}

CivilTime from_epoch(int64_t t) {
    int64_t days = t / 86400;
    int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    CivilTime ct;
    civil_from_days(days, ct.year, ct.month, ct.day);
    ct.hour = static_cast<int>(rem / 3600);
    ct.minute = static_cast<int>((rem % 3600) / 60);
    ct.second = static_cast<int>(rem % 60);
    return ct;
}

static bool parse_int(const std::string& s, size_t begin, size_t len, int& out) {
    if (begin + len > s.size()) return false;
    int v = 0;
    for (size_t i = begin; i < begin + len; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

bool parse_civil(const std::string& raw, CivilTime& out) {
    // Trim surrounding whitespace.
    size_t b = raw.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return false;
    size_t e = raw.find_last_not_of(" \t\r\n");
    std::string s = raw.substr(b, e - b + 1);

    CivilTime ct;
    if (s.size() < 10) return false;
    if (!parse_int(s, 0, 4, ct.year) || s[4] != '-' || !parse_int(s, 5, 2, ct.month) ||
        s[7] != '-' || !parse_int(s, 8, 2, ct.day))
        return false;
    if (ct.month < 1 || ct.month > 12) return false;
    if (ct.day < 1 || ct.day > days_in_month(ct.year, ct.month)) return false;
    if (s.size() > 10) {
        if (s[10] != ' ' && s[10] != 'T') return false;
        if (s.size() < 16) return false;
        if (!parse_int(s, 11, 2, ct.hour) || s[13] != ':' || !parse_int(s, 14, 2, ct.minute))
            return false;
        size_t pos = 16;
        if (pos < s.size() && s[pos] == ':') {
            if (!parse_int(s, 17, 2, ct.second)) return false;
            pos = 19;
        }
        if (pos < s.size()) {
            if (s[pos] != 'Z' || pos + 1 != s.size()) return false;
        }
        if (ct.hour > 23 || ct.minute > 59 || ct.second > 60) return false;
    }
    out = ct;
    return true;
}

std::string format_utc(int64_t t) {
    CivilTime ct = from_epoch(t);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", ct.year, ct.month, ct.day,
                  ct.hour, ct.minute, ct.second);
    return buf;
}

std::string format_date(int year, int month, int day) {
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

// Day-of-month of the n-th given weekday (Mon=0) in a month.
static int nth_weekday_day(int year, int month, int weekday, int n) {
    int64_t first = days_from_civil(year, month, 1);
    int wd = weekday_mon0(first);
    int offset = (weekday - wd + 7) % 7;
    return 1 + offset + 7 * (n - 1);
}

// DST window in local wall-clock seconds for a year.
static void dst_window(int year, int64_t& begin, int64_t& end) {
    int mar = nth_weekday_day(year, 3, 6, 2);   // second Sunday of March
    int nov = nth_weekday_day(year, 11, 6, 1);  // first Sunday of November
    begin = days_from_civil(year, 3, mar) * 86400 + 2 * 3600;
    end = days_from_civil(year, 11, nov) * 86400 + 2 * 3600;
}

int64_t WallClockZone::utc_from_local(const CivilTime& local) const {
    int64_t naive = to_epoch(local);
    double offset = base_offset_hours;
    if (use_dst) {
        int64_t begin, end;
        dst_window(local.year, begin, end);
        if (naive >= begin && naive < end) offset += 1.0;
    }
    return naive - static_cast<int64_t>(offset * 3600.0);
}

CivilTime WallClockZone::local_from_utc(int64_t utc) const {
    double offset = base_offset_hours;
    if (use_dst) {
        // Decide DST by the standard-time wall clock; exact at every full
        // hour except the two transition instants themselves.
        CivilTime std_local = from_epoch(utc + static_cast<int64_t>(base_offset_hours * 3600.0));
        int64_t begin, end;
        dst_window(std_local.year, begin, end);
        int64_t naive = to_epoch(std_local);
        if (naive >= begin && naive < end - 3600) offset += 1.0;
    }
    return from_epoch(utc + static_cast<int64_t>(offset * 3600.0));
}

}  // namespace featstore::timeutil
