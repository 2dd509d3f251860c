#include "featstore/ingest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <unordered_set>

#include "featstore/csv.hpp"
#include "featstore/errors.hpp"
#include "featstore/timeutil.hpp"

namespace fs = std::filesystem;

namespace featstore {

using namespace timeutil;

namespace {

// ==== parsing helpers =======================================================

bool parse_f64(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* b = s.c_str();
    char* e = nullptr;
    out = std::strtod(b, &e);
    return e == b + s.size() && std::isfinite(out);
}

bool parse_i64(const std::string& s, int64_t& out) {
    if (s.empty()) return false;
    const char* b = s.c_str();
    char* e = nullptr;
    out = std::strtoll(b, &e, 10);
    return e == b + s.size();
}

bool parse_flag(const std::string& s) {
    return s == "1" || s == "true" || s == "TRUE" || s == "True" || s == "yes" || s == "YES";
}

std::string lower_trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(a, b - a + 1);
    for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

// Parses an instant column value: ISO with 'Z' means UTC as-is, otherwise
// the value is a local wall-clock time in `zone`.
bool parse_instant(const std::string& text, const WallClockZone& zone, int64_t& out) {
    CivilTime ct;
    if (!parse_civil(text, ct)) return false;
    if (!text.empty() && text.back() == 'Z')
        out = to_epoch(ct);
    else
        out = zone.utc_from_local(ct);
    return true;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

struct KeyHash {
    size_t operator()(const std::pair<std::string, int64_t>& k) const {
        return std::hash<std::string>()(k.first) * 1000003u ^ std::hash<int64_t>()(k.second);
    }
};

}  // namespace

// ==== consumption ===========================================================

StorageStats ingest_consumption(OfflineStore& store, const std::vector<std::string>& paths,
                                const WallClockZone& zone) {
    Timer timer;
    StorageStats stats;

    struct Row {
        std::string id;
        int64_t ts;
        double energy;
    };
    std::vector<Row> rows;
    std::unordered_set<std::pair<std::string, int64_t>, KeyHash> seen;

    for (const auto& path : paths) {
        csv::Reader reader(path);
        const int c_id = reader.column("residential_id");
        const int c_date = reader.column("date");
        const int c_hour = reader.column("hour");
        const int c_ts = reader.column("timestamp");
        const int c_energy = reader.column("energy");
        if (c_energy < 0) throw missing_column("energy", path);
        if (c_ts < 0 && (c_date < 0 || c_hour < 0))
            throw missing_column("timestamp (or date+hour)", path);

        const std::string file_id = fs::path(path).stem().string();

        std::vector<std::string> f;
        while (reader.next(f)) {
            ++stats.rows_in;
            const size_t need = static_cast<size_t>(std::max({c_id, c_date, c_hour, c_ts, c_energy}));
            if (f.size() <= need) {
                ++stats.rows_dropped_invalid;
                continue;
            }
            Row row;
            row.id = c_id >= 0 ? f[static_cast<size_t>(c_id)] : file_id;
            if (row.id.empty()) {
                ++stats.rows_dropped_invalid;
                continue;
            }
            bool ok;
            if (c_ts >= 0) {
                ok = parse_instant(f[static_cast<size_t>(c_ts)], zone, row.ts);
            } else {
                CivilTime ct;
                int64_t hour;
                ok = parse_civil(f[static_cast<size_t>(c_date)], ct) &&
                     parse_i64(f[static_cast<size_t>(c_hour)], hour) && hour >= 0 && hour <= 23;
                if (ok) {
                    ct.hour = static_cast<int>(hour);
                    row.ts = zone.utc_from_local(ct);
                }
            }
            ok = ok && parse_f64(f[static_cast<size_t>(c_energy)], row.energy) && row.energy >= 0.0;
            if (!ok) {
                ++stats.rows_dropped_invalid;
                continue;
            }
            if (!seen.insert({row.id, row.ts}).second) {
                ++stats.rows_dropped_duplicate;
                continue;
            }
            rows.push_back(std::move(row));
        }
    }

    if (rows.empty()) throw empty_input("no valid consumption rows");

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.id != b.id) return a.id < b.id;
        return a.ts < b.ts;
    });

    ColumnTable out;
    auto& id = out.add_column("residential_id", ColType::Str);
    auto& ts = out.add_column("timestamp", ColType::I64);
    auto& en = out.add_column("energy", ColType::F64);
    for (const auto& r : rows) {
        id.push_str(r.id);
        ts.push_i64(r.ts);
        en.push_f64(r.energy);
    }
    out.n_rows = rows.size();
    store.write_table("consumption", out);

    stats.rows_out = static_cast<int64_t>(rows.size());
    stats.elapsed = timer.elapsed();
    return stats;
}

// ==== weather ===============================================================

StorageStats ingest_weather(OfflineStore& store, const std::string& path,
                            const WallClockZone& zone) {
    Timer timer;
    StorageStats stats;

    csv::Reader reader(path);
    int c_region = reader.column("region");
    if (c_region < 0) c_region = reader.column("station_region");
    const int c_ts = reader.column("timestamp");
    const int c_temp = reader.column("temperature");
    const int c_hum = reader.column("humidity");
    const int c_pres = reader.column("pressure");
    const int c_cond = reader.column("weather");
    if (c_region < 0) throw missing_column("region", path);
    if (c_ts < 0) throw missing_column("timestamp", path);
    if (c_temp < 0) throw missing_column("temperature", path);
    if (c_hum < 0) throw missing_column("humidity", path);
    if (c_pres < 0) throw missing_column("pressure", path);
    if (c_cond < 0) throw missing_column("weather", path);

    struct Row {
        std::string region;
        int64_t ts;
        double temp, hum, pres;
        std::string cond;
    };
    std::vector<Row> rows;
    std::unordered_set<std::pair<std::string, int64_t>, KeyHash> seen;

    std::vector<std::string> f;
    const size_t need =
        static_cast<size_t>(std::max({c_region, c_ts, c_temp, c_hum, c_pres, c_cond}));
    while (reader.next(f)) {
        ++stats.rows_in;
        if (f.size() <= need) {
            ++stats.rows_dropped_invalid;
            continue;
        }
        Row row;
        row.region = f[static_cast<size_t>(c_region)];
        row.cond = lower_trim(f[static_cast<size_t>(c_cond)]);
        const bool ok = !row.region.empty() &&
                        parse_instant(f[static_cast<size_t>(c_ts)], zone, row.ts) &&
                        parse_f64(f[static_cast<size_t>(c_temp)], row.temp) &&
                        parse_f64(f[static_cast<size_t>(c_hum)], row.hum) && row.hum >= 0.0 &&
                        row.hum <= 100.0 && parse_f64(f[static_cast<size_t>(c_pres)], row.pres);
        if (!ok) {
            ++stats.rows_dropped_invalid;
            continue;
        }
        if (!seen.insert({row.region, row.ts}).second) {
            ++stats.rows_dropped_duplicate;
            continue;
        }
        rows.push_back(std::move(row));
    }

    if (rows.empty()) throw empty_input("no valid weather rows");

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.region != b.region) return a.region < b.region;
        return a.ts < b.ts;
    });

    ColumnTable out;
    auto& rg = out.add_column("region", ColType::Str);
    auto& ts = out.add_column("timestamp", ColType::I64);
    auto& te = out.add_column("temperature", ColType::F64);
    auto& hu = out.add_column("humidity", ColType::F64);
    auto& pr = out.add_column("pressure", ColType::F64);
    auto& co = out.add_column("weather", ColType::Str);
    for (const auto& r : rows) {
        rg.push_str(r.region);
        ts.push_i64(r.ts);
        te.push_f64(r.temp);
        hu.push_f64(r.hum);
        pr.push_f64(r.pres);
        co.push_str(r.cond);
    }
    out.n_rows = rows.size();
    store.write_table("weather", out);

    stats.rows_out = static_cast<int64_t>(rows.size());
    stats.elapsed = timer.elapsed();
    return stats;
}

// ==== metadata ==============================================================

const std::vector<std::string>& metadata_flags() {
    static const std::vector<std::string> flags = {"SN",  "FAGF",  "FPG", "IFRHG", "NAC", "FAC",
                                                   "PAC", "BHE", "IFRHE", "WRHIR", "GEOTH"};
    return flags;
}

StorageStats ingest_metadata(OfflineStore& store, const std::string& path) {
    Timer timer;
    StorageStats stats;

    csv::Reader reader(path);
    const int c_id = reader.column("residential_id");
    if (c_id < 0) throw missing_column("residential_id", path);
    const int c_type = reader.column("house_type");
    const int c_facing = reader.column("facing");
    const int c_rus = reader.column("RUs");
    const int c_region = reader.column("region");
    const int c_lat = reader.column("latitude");
    const int c_lon = reader.column("longitude");
    std::vector<int> c_flags;
    for (const auto& name : metadata_flags()) c_flags.push_back(reader.column(name));

    struct Row {
        std::string id, type, facing, region;
        int64_t rus = 0;
        double lat = 0, lon = 0;
        bool has_lat = false, has_lon = false;
        std::vector<uint8_t> flags;
    };
    std::vector<Row> rows;
    std::unordered_set<std::string> seen;

    auto field = [](const std::vector<std::string>& f, int idx) -> std::string {
        if (idx < 0 || static_cast<size_t>(idx) >= f.size()) return "";
        return f[static_cast<size_t>(idx)];
    };

    std::vector<std::string> f;
    while (reader.next(f)) {
        ++stats.rows_in;
        Row row;
        row.id = field(f, c_id);
        if (row.id.empty()) {
            ++stats.rows_dropped_invalid;
            continue;
        }
        if (!seen.insert(row.id).second)
            throw Error("DuplicateEntity", "two metadata rows for " + row.id);
        row.type = field(f, c_type);
        if (row.type.empty()) row.type = "unknown";
        row.facing = field(f, c_facing);
        if (row.facing.empty()) row.facing = "unknown";
        row.region = field(f, c_region);
        if (row.region.empty()) row.region = "unknown";
        int64_t rus = 0;
        row.rus = parse_i64(field(f, c_rus), rus) && rus >= 0 ? rus : 0;
        row.has_lat = parse_f64(field(f, c_lat), row.lat) && row.lat >= -90 && row.lat <= 90;
        row.has_lon = parse_f64(field(f, c_lon), row.lon);
        for (int ci : c_flags) row.flags.push_back(parse_flag(field(f, ci)) ? 1 : 0);
        rows.push_back(std::move(row));
    }

    if (rows.empty()) throw empty_input("no valid metadata rows");

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.id < b.id; });

    ColumnTable out;
    auto& id = out.add_column("residential_id", ColType::Str);
    auto& ty = out.add_column("house_type", ColType::Str);
    auto& fa = out.add_column("facing", ColType::Str);
    auto& ru = out.add_column("RUs", ColType::I64);
    auto& rg = out.add_column("region", ColType::Str);
    auto& la = out.add_column("latitude", ColType::F64);
    auto& lo = out.add_column("longitude", ColType::F64);
    std::vector<Column*> fl;
    for (const auto& name : metadata_flags()) fl.push_back(&out.add_column(name, ColType::Boolean));
    for (const auto& r : rows) {
        id.push_str(r.id);
        ty.push_str(r.type);
        fa.push_str(r.facing);
        ru.push_i64(r.rus);
        rg.push_str(r.region);
        if (r.has_lat) la.push_f64(r.lat); else la.push_null();
        if (r.has_lon) lo.push_f64(r.lon); else lo.push_null();
        for (size_t i = 0; i < fl.size(); ++i) fl[i]->push_bool(r.flags[i] != 0);
    }
    out.n_rows = rows.size();
    store.write_table("metadata", out);

    stats.rows_out = static_cast<int64_t>(rows.size());
    stats.elapsed = timer.elapsed();
    return stats;
}

// ==== synthetic generator ===================================================

namespace {

struct HouseProfile {
    std::string id;
    std::string region;
    std::string house_type;
    std::string facing;
    int rus = 0;
    double lat = 0, lon = 0;
    std::map<std::string, bool> flags;
    double base_load = 0;
    double morning_amp = 0, evening_amp = 0;
    double heat_coeff = 0, cool_coeff = 0;
};

// A tiny statutory set; every date here is also in the shipped BC calendar,
// so the behavioral signal survives feature extraction.
bool synth_holiday(int month, int day) {
    return (month == 1 && day == 1) || (month == 7 && day == 1) || (month == 12 && day == 25);
}

int day_of_year(int year, int month, int day) {
    return static_cast<int>(days_from_civil(year, month, day) - days_from_civil(year, 1, 1)) + 1;
}

}  // namespace

SynthFiles generate_synthetic(int n_households, int n_days, uint64_t seed,
                              const std::string& out_dir) {
    if (n_households < 1) throw Error("InvalidArgument", "n_households must be >= 1");
    if (n_days < 2) throw Error("InvalidArgument", "n_days must be >= 2");

    fs::create_directories(out_dir);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Day 1 is a Sunday and day 2 is a statutory holiday, so weekend and
    // holiday signal exists even in the smallest (2-day) corpus.
    const int start_year = 2017, start_month = 12, start_day = 31;
    const int64_t start_days = days_from_civil(start_year, start_month, start_day);

    // -- metadata ------------------------------------------------------------
    const std::vector<std::string> house_types = {"bungalow", "duplex",  "apartment",
                                                  "character", "modern", "special"};
    const std::vector<std::string> facings = {"N", "NE", "E", "SE", "S", "SW", "W", "NW"};
    const std::vector<std::pair<std::string, double>> flag_probs = {
        {"SN", 0.10},  {"FAGF", 0.55}, {"FPG", 0.30},  {"IFRHG", 0.10},
        {"NAC", 0.45}, {"FAC", 0.35},  {"PAC", 0.15},  {"BHE", 0.25},
        {"IFRHE", 0.08}, {"WRHIR", 0.06}, {"GEOTH", 0.03}};

    std::vector<HouseProfile> houses;
    for (int h = 0; h < n_households; ++h) {
        HouseProfile p;
        p.id = "house" + std::to_string(h + 1);
        p.region = unit(rng) < 0.6 ? "YVR" : "WYJ";
        const bool yvr = p.region == "YVR";
        p.lat = (yvr ? 49.25 : 48.65) + (unit(rng) - 0.5) * 0.3;
        p.lon = (yvr ? -123.10 : -123.43) + (unit(rng) - 0.5) * 0.3;
        p.house_type = house_types[static_cast<size_t>(unit(rng) * house_types.size()) %
                                   house_types.size()];
        p.facing = facings[static_cast<size_t>(unit(rng) * facings.size()) % facings.size()];
        p.rus = unit(rng) < 0.7 ? 0 : (unit(rng) < 0.7 ? 1 : 2);
        for (const auto& [name, prob] : flag_probs) p.flags[name] = unit(rng) < prob;

        p.base_load = 0.22 + 0.07 * p.rus + 0.10 * unit(rng) +
                      (p.house_type == "apartment" ? -0.06 : 0.0) +
                      (p.house_type == "bungalow" || p.house_type == "modern" ? 0.05 : 0.0) +
                      0.25 * (p.lat - 48.9);  // gentle latitude gradient
        p.morning_amp = 0.25 + 0.15 * unit(rng);
        p.evening_amp = 0.45 + 0.25 * unit(rng);
        // BC Hydro meters electricity: electric heat couples hard, gas mostly
        // through furnace fans.
        p.heat_coeff = 0.010 + 0.040 * p.flags["BHE"] + 0.035 * p.flags["IFRHE"] +
                       0.025 * p.flags["GEOTH"] + 0.012 * p.flags["WRHIR"] +
                       0.004 * p.flags["FAGF"];
        p.cool_coeff = p.flags["NAC"] ? 0.0
                                      : 0.030 * p.flags["FAC"] + 0.015 * p.flags["PAC"] + 0.004;
        houses.push_back(std::move(p));
    }

    // -- weather (both regions, hourly local series) --------------------------
    struct WxPoint {
        double temp, hum, pres;
        std::string cond;
    };
    std::map<std::string, std::vector<WxPoint>> wx;
    const int n_hours = n_days * 24;
    for (const std::string region : {"YVR", "WYJ"}) {
        const bool yvr = region == "YVR";
        std::vector<WxPoint> series;
        series.reserve(static_cast<size_t>(n_hours));
        double ar = 0.0, pres_ar = 0.0;
        for (int k = 0; k < n_hours; ++k) {
            const int64_t days = start_days + k / 24;
            int y, m, d;
            civil_from_days(days, y, m, d);
            const double doy = day_of_year(y, m, d);
            const double hour = k % 24;
            ar = 0.95 * ar + 0.6 * gauss(rng);
            pres_ar = 0.98 * pres_ar + 0.12 * gauss(rng);
            WxPoint p;
            const double seasonal = (yvr ? 9.8 : 9.2) -
                                    (yvr ? 8.6 : 8.0) * std::cos(2 * M_PI * (doy + 10) / 365.25);
            const double diurnal = 3.8 * std::sin(2 * M_PI * (hour - 9.0) / 24.0);
            p.temp = seasonal + diurnal + ar;
            p.hum = std::clamp(78.0 - 1.1 * (p.temp - 10.0) + 6.0 * gauss(rng), 20.0, 100.0);
            p.pres = 101.3 + pres_ar;
            if (p.temp < 0.5 && p.hum > 75)
                p.cond = "snow";
            else if (p.hum > 85)
                p.cond = "rain";
            else if (p.hum > 65)
                p.cond = "cloudy";
            else
                p.cond = "clear";
            series.push_back(std::move(p));
        }
        wx[region] = std::move(series);
    }

    // -- consumption ----------------------------------------------------------
    std::string consumption = "residential_id,date,hour,energy\n";
    std::string date_buf;
    for (const auto& p : houses) {
        const auto& series = wx[p.region];
        double noise_ar = 0.0;
        for (int k = 0; k < n_hours; ++k) {
            const int64_t days = start_days + k / 24;
            const int hour = k % 24;
            int y, m, d;
            civil_from_days(days, y, m, d);
            const int wd = weekday_mon0(days);
            const bool weekend = wd >= 5;
            const bool holiday = synth_holiday(m, d);

            const double morning_center = weekend || holiday ? 9.5 : 7.5;
            const double morning =
                p.morning_amp * std::exp(-0.5 * std::pow((hour - morning_center) / 1.6, 2));
            const double evening =
                p.evening_amp * std::exp(-0.5 * std::pow((hour - 18.5) / 2.2, 2));
            const double night_dip = hour < 5 ? -0.06 : 0.0;

            const double temp = series[static_cast<size_t>(k)].temp;
            const double heating = p.heat_coeff * std::max(0.0, 16.0 - temp);
            const double cooling = p.cool_coeff * std::max(0.0, temp - 22.0);

            double level = p.base_load + morning + evening + night_dip + heating + cooling;
            if (weekend) level *= 1.22;
            if (holiday) level *= 1.15;

            noise_ar = 0.7 * noise_ar + 0.3 * gauss(rng);
            const double energy = std::max(0.01, level * std::exp(0.10 * noise_ar));

            date_buf = format_date(y, m, d);
            consumption += p.id;
            consumption += ',';
            consumption += date_buf;
            consumption += ',';
            consumption += std::to_string(hour);
            consumption += ',';
            consumption += format_double(std::round(energy * 1e6) / 1e6);
            consumption += '\n';
        }
    }

    // -- raw file output --------------------------------------------------------
    std::string weather = "region,timestamp,temperature,humidity,pressure,weather\n";
    for (const auto& [region, series] : wx) {
        for (int k = 0; k < n_hours; ++k) {
            const int64_t days = start_days + k / 24;
            int y, m, d;
            civil_from_days(days, y, m, d);
            const auto& pt = series[static_cast<size_t>(k)];
            weather += region;
            weather += ',';
            weather += format_date(y, m, d);
            weather += ' ';
            const int hour = k % 24;
            if (hour < 10) weather += '0';
            weather += std::to_string(hour);
            weather += ":00,";
            weather += format_double(std::round(pt.temp * 100) / 100);
            weather += ',';
            weather += format_double(std::round(pt.hum * 10) / 10);
            weather += ',';
            weather += format_double(std::round(pt.pres * 1000) / 1000);
            weather += ',';
            weather += pt.cond;
            weather += '\n';
        }
    }

    std::string metadata = "residential_id,house_type,facing,RUs,region,latitude,longitude";
    for (const auto& name : metadata_flags()) metadata += "," + name;
    metadata += '\n';
    for (const auto& p : houses) {
        metadata += p.id;
        metadata += ',' + p.house_type + ',' + p.facing + ',' + std::to_string(p.rus);
        metadata += ',' + p.region;
        metadata += ',' + format_double(std::round(p.lat * 1e5) / 1e5);
        metadata += ',' + format_double(std::round(p.lon * 1e5) / 1e5);
        for (const auto& name : metadata_flags())
            metadata += p.flags.at(name) ? ",true" : ",false";
        metadata += '\n';
    }

    SynthFiles files;
    files.consumption = (fs::path(out_dir) / "consumption.csv").string();
    files.weather = (fs::path(out_dir) / "weather.csv").string();
    files.metadata = (fs::path(out_dir) / "metadata.csv").string();
    write_file_atomic(files.consumption, consumption);
    write_file_atomic(files.weather, weather);
    write_file_atomic(files.metadata, metadata);
    return files;
}

}  // namespace featstore
