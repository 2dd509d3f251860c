#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace featstore {

struct RollingStats {
    double mean = 0.0;
    double std = 0.0;
    int window = 0;      // samples actually present in the window
    bool complete = false;
};

// Trailing-window statistics over an hourly series, current row included.
// A row is complete only when `window` rows are available and every step
// inside the window is exactly one hour; std uses the population
// denominator.
std::vector<RollingStats> rolling_stats(const std::vector<std::pair<int64_t, double>>& series,
                                        int window = 10);

struct TimeFeatures {
    double day_percent = 0.0;   // [0, 1)
    double year_percent = 0.0;  // [0, 1), leap-aware
};

TimeFeatures time_features(int64_t t_utc, double tz_offset_hours);

struct CalendarFeatures {
    bool is_holiday = false;
    int weekday = 0;  // Monday = 0 ... Sunday = 6
    bool is_weekend = false;
};

// Holiday sets hold local dates encoded as year*10000 + month*100 + day.
using HolidaySet = std::set<int32_t>;

CalendarFeatures calendar_features(int64_t t_utc, double tz_offset_hours,
                                   const HolidaySet& holidays);

// Loads a region calendar file: one ISO date per line, '#' comments and
// blank lines ignored.
HolidaySet load_holidays(const std::string& path);

// The compiled-in copy of the shipped British Columbia statutory calendar
// (data/holidays/bc.txt); a test keeps the two in sync.
const HolidaySet& builtin_bc_holidays();

// Process-wide settings used by view materialization: the fixed offset for
// local-time features and the active holiday calendar. Defaults: Pacific
// standard time (-8) and the built-in BC calendar.
struct FeatureConfig {
    double tz_offset_hours = -8.0;
    HolidaySet holidays = builtin_bc_holidays();
};
FeatureConfig& feature_config();

// Stable label encoder: values get dense codes in first-seen order and the
// mapping survives across runs once persisted by the store.
struct CategoryEncoder {
    // column name -> value -> code
    std::map<std::string, std::vector<std::string>> values_in_order;

    int encode(const std::string& column, const std::string& value);
    // -1 when the value was never seen.
    int lookup(const std::string& column, const std::string& value) const;
    const std::string* decode(const std::string& column, int code) const;

    std::string to_json() const;
    static CategoryEncoder from_json(const std::string& text);
};

}  // namespace featstore
