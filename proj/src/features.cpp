#include "featstore/features.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "featstore/errors.hpp"
#include "featstore/timeutil.hpp"

namespace featstore {

using namespace timeutil;

std::vector<RollingStats> rolling_stats(const std::vector<std::pair<int64_t, double>>& series,
                                        int window) {
    const size_t n = series.size();
    std::vector<RollingStats> out(n);
    if (window <= 0) throw Error("InvalidWindow", "window must be positive");

    for (size_t i = 0; i < n; ++i) {
        RollingStats& rs = out[i];
        if (i + 1 < static_cast<size_t>(window)) {
            rs.window = static_cast<int>(i + 1);
            rs.complete = false;
            continue;
        }
        const size_t start = i + 1 - static_cast<size_t>(window);
        bool contiguous = true;
        for (size_t j = start + 1; j <= i; ++j)
            if (series[j].first - series[j - 1].first != 3600) {
                contiguous = false;
                break;
            }
        rs.window = window;
        if (!contiguous) {
            rs.complete = false;
            continue;
        }
        double sum = 0.0;
        for (size_t j = start; j <= i; ++j) sum += series[j].second;
        const double mean = sum / window;
        double ss = 0.0;
        for (size_t j = start; j <= i; ++j) {
            const double d = series[j].second - mean;
            ss += d * d;
        }
        rs.mean = mean;
        rs.std = std::sqrt(ss / window);
        rs.complete = true;
    }
    return out;
}

TimeFeatures time_features(int64_t t_utc, double tz_offset_hours) {
    const int64_t local = t_utc + static_cast<int64_t>(std::llround(tz_offset_hours * 3600.0));
    const CivilTime ct = from_epoch(local);

    TimeFeatures out;
    out.day_percent = static_cast<double>(ct.hour * 3600 + ct.minute * 60 + ct.second) / 86400.0;

    const int64_t year_start = to_epoch({ct.year, 1, 1, 0, 0, 0});
    const double year_seconds = static_cast<double>(days_in_year(ct.year)) * 86400.0;
    out.year_percent = static_cast<double>(local - year_start) / year_seconds;
    return out;
}

CalendarFeatures calendar_features(int64_t t_utc, double tz_offset_hours,
                                   const HolidaySet& holidays) {
    const int64_t local = t_utc + static_cast<int64_t>(std::llround(tz_offset_hours * 3600.0));
    const CivilTime ct = from_epoch(local);

    CalendarFeatures out;
    out.weekday = weekday_mon0(days_from_civil(ct.year, ct.month, ct.day));
    out.is_weekend = out.weekday == 5 || out.weekday == 6;
    out.is_holiday = holidays.count(ct.year * 10000 + ct.month * 100 + ct.day) > 0;
    return out;
}

HolidaySet load_holidays(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", "cannot open holiday calendar: " + path);
    HolidaySet out;
    std::string line;
    while (std::getline(in, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t b = line.find_last_not_of(" \t\r");
        const std::string date = line.substr(a, b - a + 1);
        CivilTime ct;
        if (!parse_civil(date, ct))
            throw Error("BadDate", "unparseable calendar line: " + date);
        out.insert(ct.year * 10000 + ct.month * 100 + ct.day);
    }
    return out;
}


const HolidaySet& builtin_bc_holidays() {
    static const HolidaySet set = [] {
        // Statutory holidays, British Columbia, 2012-2026; mirrors
        // data/holidays/bc.txt (dates as year*10000 + month*100 + day).
        static const int32_t dates[] = {
    20120101, 20120406, 20120521, 20120701, 20120806, 20120903,
    20121008, 20121111, 20121225, 20130101, 20130211, 20130329,
    20130520, 20130701, 20130805, 20130902, 20131014, 20131111,
    20131225, 20140101, 20140210, 20140418, 20140519, 20140701,
    20140804, 20140901, 20141013, 20141111, 20141225, 20150101,
    20150209, 20150403, 20150518, 20150701, 20150803, 20150907,
    20151012, 20151111, 20151225, 20160101, 20160208, 20160325,
    20160523, 20160701, 20160801, 20160905, 20161010, 20161111,
    20161225, 20170101, 20170213, 20170414, 20170522, 20170701,
    20170807, 20170904, 20171009, 20171111, 20171225, 20180101,
    20180212, 20180330, 20180521, 20180701, 20180806, 20180903,
    20181008, 20181111, 20181225, 20190101, 20190218, 20190419,
    20190520, 20190701, 20190805, 20190902, 20191014, 20191111,
    20191225, 20200101, 20200217, 20200410, 20200518, 20200701,
    20200803, 20200907, 20201012, 20201111, 20201225, 20210101,
    20210215, 20210402, 20210524, 20210701, 20210802, 20210906,
    20211011, 20211111, 20211225, 20220101, 20220221, 20220415,
    20220523, 20220701, 20220801, 20220905, 20221010, 20221111,
    20221225, 20230101, 20230220, 20230407, 20230522, 20230701,
    20230807, 20230904, 20231009, 20231111, 20231225, 20240101,
    20240219, 20240329, 20240520, 20240701, 20240805, 20240902,
    20241014, 20241111, 20241225, 20250101, 20250217, 20250418,
    20250519, 20250701, 20250804, 20250901, 20251013, 20251111,
    20251225, 20260101, 20260216, 20260403, 20260518, 20260701,
    20260803, 20260907, 20261012, 20261111, 20261225};
        return HolidaySet(std::begin(dates), std::end(dates));
    }();
    return set;
}

FeatureConfig& feature_config() {
    static FeatureConfig cfg;
    return cfg;
}

int CategoryEncoder::encode(const std::string& column, const std::string& value) {
    auto& vals = values_in_order[column];
    for (size_t i = 0; i < vals.size(); ++i)
        if (vals[i] == value) return static_cast<int>(i);
    vals.push_back(value);
    return static_cast<int>(vals.size() - 1);
}

int CategoryEncoder::lookup(const std::string& column, const std::string& value) const {
    const auto it = values_in_order.find(column);
    if (it == values_in_order.end()) return -1;
    for (size_t i = 0; i < it->second.size(); ++i)
        if (it->second[i] == value) return static_cast<int>(i);
    return -1;
}

const std::string* CategoryEncoder::decode(const std::string& column, int code) const {
    const auto it = values_in_order.find(column);
    if (it == values_in_order.end()) return nullptr;
    if (code < 0 || static_cast<size_t>(code) >= it->second.size()) return nullptr;
    return &it->second[static_cast<size_t>(code)];
}

std::string CategoryEncoder::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [col, vals] : values_in_order) j[col] = vals;
    return j.dump(2) + "\n";
}

CategoryEncoder CategoryEncoder::from_json(const std::string& text) {
    CategoryEncoder enc;
    const auto j = nlohmann::json::parse(text);
    for (const auto& [col, vals] : j.items())
        enc.values_in_order[col] = vals.get<std::vector<std::string>>();
    return enc;
}

}  // namespace featstore
