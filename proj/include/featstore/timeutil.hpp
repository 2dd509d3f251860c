#pragma once

#include <cstdint>
#include <string>

namespace featstore::timeutil {

struct CivilTime {
    int year = 1970;
    int month = 1;   // 1-12
    int day = 1;     // 1-31
    int hour = 0;
    int minute = 0;
    int second = 0;
};

// Days since 1970-01-01 for a proleptic Gregorian date.
int64_t days_from_civil(int year, int month, int day);
void civil_from_days(int64_t days, int& year, int& month, int& day);

bool is_leap_year(int year);
int days_in_year(int year);

// Day of week with Monday = 0 ... Sunday = 6.
int weekday_mon0(int64_t days_since_epoch);

int64_t to_epoch(const CivilTime& ct);
CivilTime from_epoch(int64_t epoch_seconds);

// Parses "YYYY-MM-DD", "YYYY-MM-DD HH:MM[:SS]" or "YYYY-MM-DDTHH:MM[:SS][Z]".
// The fields are taken at face value; callers decide the zone.
// Returns false on malformed input.
bool parse_civil(const std::string& text, CivilTime& out);

// "YYYY-MM-DDTHH:MM:SSZ" for a UTC epoch.
std::string format_utc(int64_t epoch_seconds);
std::string format_date(int year, int month, int day);

// Wall-clock zone with the post-2007 North American DST rule
// (second Sunday of March 02:00 to first Sunday of November 02:00).
// Ambiguous local times resolve to their first occurrence (DST side);
// nonexistent spring-forward times alias onto the preceding hour's UTC
// instant, so ingestion's keep-first dedup resolves both cases.
struct WallClockZone {
    double base_offset_hours = 0.0;  // standard-time offset, e.g. -8 for Pacific
    bool use_dst = false;

    int64_t utc_from_local(const CivilTime& local) const;
    CivilTime local_from_utc(int64_t utc) const;
};

inline WallClockZone pacific_time() { return WallClockZone{-8.0, true}; }
inline WallClockZone fixed_offset(double hours) { return WallClockZone{hours, false}; }

}  // namespace featstore::timeutil
