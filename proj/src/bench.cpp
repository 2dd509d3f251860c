#include "featstore/bench.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <thread>

#include "featstore/errors.hpp"
#include "featstore/eval.hpp"
#include "featstore/features.hpp"
#include "featstore/ingest.hpp"
#include "featstore/parquet.hpp"
#include "featstore/registry.hpp"
#include "featstore/solar.hpp"
#include "featstore/store.hpp"

namespace featstore {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Join windows of the canonical recipe (registry/energy.registry).
constexpr int64_t kWeatherTtl = 3600;
constexpr int64_t kProfileTtl = 3155760000;
constexpr int64_t kProfileEpoch = 946684800;  // metadata records' event time

// Canonical column indexes.
enum : size_t {
    cEnergy = 0,
    cEnergyMean,
    cEnergyStd,
    cTemperature,
    cHumidity,
    cPressure,
    cWeather,
    cSolarAltitude,
    cSolarAzimuth,
    cSolarRadiation,
    cDayPercent,
    cYearPercent,
    cIsHoliday,
    cWeekday,
    cIsWeekend,
    cResidentialId,
    cHouseType,
    cFacing,
    cRUs,
    cRegion,
    cLatitude,
    cLongitude,
    cFlag0,  // SN .. GEOTH follow
    kNumColumns = cFlag0 + 11,
};

SubsetQuery resolve_query(const OfflineStore& store, SubsetQuery q) {
    if (q.all_entities) {
        q.entity_ids = all_entities(store);
        q.all_entities = false;
    }
    if (q.full_range) {
        std::tie(q.t0, q.t1) = consumption_range(store);
        q.full_range = false;
    }
    return q;
}

// Entity groups with ascending, deduplicated timestamps (ties keep the
// last-read record, matching the registry's materializer).
std::map<std::string, std::vector<size_t>> group_by(const Column* key, const Column* ts,
                                                    size_t n_rows) {
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t r = 0; r < n_rows; ++r)
        groups[key && key->valid[r] ? key->str[r] : ""].push_back(r);
    if (ts)
        for (auto& [value, rows] : groups) {
            std::stable_sort(rows.begin(), rows.end(),
                             [&](size_t a, size_t b) { return ts->i64[a] < ts->i64[b]; });
            std::vector<size_t> unique;
            for (size_t r : rows)
                if (!unique.empty() && ts->i64[r] == ts->i64[unique.back()])
                    unique.back() = r;
                else
                    unique.push_back(r);
            rows = std::move(unique);
        }
    return groups;
}

struct RegionWx {
    std::vector<int64_t> ts;
    std::array<std::vector<double>, 4> vals;   // temperature, humidity, pressure, condition
    std::array<std::vector<uint8_t>, 4> ok;
};

struct Profile {
    std::string region;
    double lat = 0.0, lon = 0.0;
    bool has_coords = false;
    std::array<double, 18> vals{};  // canonical profile columns
    std::array<uint8_t, 18> ok{};
};

struct Enriched {
    ColumnTable table;
    int64_t rows = 0;
};

// The full left-join + feature derivation over every consumption row,
// shared by the eager and partitioned strategies (they differ only in how
// the per-entity work is scheduled).
Enriched build_enriched(const OfflineStore& store, int threads) {
    const ColumnTable consumption = store.read_table("consumption");
    ColumnTable weather, metadata;
    if (store.has_table("weather")) weather = store.read_table("weather");
    if (store.has_table("metadata")) metadata = store.read_table("metadata");

    // Deterministic category codes: full-table row order, one column at a
    // time, before any (possibly parallel) join work.
    if (const Column* c = weather.find("weather"))
        for (size_t r = 0; r < weather.n_rows; ++r)
            if (c->valid[r]) store.encode_category(c->name, c->str[r]);
    for (const char* name : {"residential_id", "house_type", "facing", "region"})
        if (const Column* c = metadata.find(name))
            for (size_t r = 0; r < metadata.n_rows; ++r)
                if (c->valid[r]) store.encode_category(c->name, c->str[r]);

    const Column* ent = consumption.find("residential_id");
    const Column* ts = consumption.find("timestamp");
    const Column* energy = consumption.find("energy");
    if (!ent || !ts) throw missing_column(ent ? "timestamp" : "residential_id", "consumption");

    const auto groups = group_by(ent, ts, consumption.n_rows);

    // Weather series per region, with category codes resolved up front so
    // workers never mutate shared state.
    std::map<std::string, RegionWx> wx;
    {
        const Column* wts = weather.find("timestamp");
        const auto wgroups = group_by(weather.find("region"), wts, weather.n_rows);
        const std::array<const Column*, 4> src = {weather.find("temperature"),
                                                  weather.find("humidity"),
                                                  weather.find("pressure"), weather.find("weather")};
        for (const auto& [region, rows] : wgroups) {
            RegionWx& w = wx[region];
            for (size_t r : rows) {
                w.ts.push_back(wts->i64[r]);
                for (size_t c = 0; c < 4; ++c) {
                    const bool ok = src[c] && src[c]->valid[r];
                    double v = 0.0;
                    if (ok)
                        v = c == 3 ? static_cast<double>(
                                         store.encode_category(src[c]->name, src[c]->str[r]))
                                   : src[c]->f64[r];
                    w.vals[c].push_back(v);
                    w.ok[c].push_back(ok ? 1 : 0);
                }
            }
        }
    }

    // Static building profile per household.
    std::map<std::string, Profile> profiles;
    {
        const Column* id = metadata.find("residential_id");
        const std::array<const char*, 7> head = {"residential_id", "house_type", "facing",
                                                 "RUs",            "region",     "latitude",
                                                 "longitude"};
        for (size_t r = 0; id && r < metadata.n_rows; ++r) {
            if (!id->valid[r]) continue;
            Profile p;
            size_t slot = 0;
            for (const char* name : head) {
                if (const Column* c = metadata.find(name); c && c->valid[r]) {
                    switch (c->type) {
                        case ColType::Str:
                            p.vals[slot] =
                                static_cast<double>(store.encode_category(c->name, c->str[r]));
                            break;
                        case ColType::I64: p.vals[slot] = static_cast<double>(c->i64[r]); break;
                        case ColType::F64: p.vals[slot] = c->f64[r]; break;
                        case ColType::Boolean: p.vals[slot] = c->boolean[r] ? 1.0 : 0.0; break;
                    }
                    p.ok[slot] = 1;
                }
                ++slot;
            }
            for (const std::string& flag : metadata_flags()) {
                if (const Column* c = metadata.find(flag); c && c->valid[r]) {
                    p.vals[slot] = c->boolean[r] ? 1.0 : 0.0;
                    p.ok[slot] = 1;
                }
                ++slot;
            }
            if (const Column* region = metadata.find("region"); region && region->valid[r])
                p.region = region->str[r];
            const Column* lat = metadata.find("latitude");
            const Column* lon = metadata.find("longitude");
            if (lat && lon && lat->valid[r] && lon->valid[r]) {
                p.lat = lat->f64[r];
                p.lon = lon->f64[r];
                p.has_coords = true;
            }
            profiles.emplace(id->str[r], std::move(p));
        }
    }

    // Output layout: entity blocks in sorted order, timestamps ascending.
    std::vector<std::pair<const std::string*, const std::vector<size_t>*>> order;
    std::vector<size_t> offsets;
    size_t total = 0;
    for (const auto& [value, rows] : groups) {
        order.emplace_back(&value, &rows);
        offsets.push_back(total);
        total += rows.size();
    }

    Enriched out;
    out.rows = static_cast<int64_t>(total);
    out.table.n_rows = total;
    Column& col_entity = out.table.add_column("__entity__", ColType::Str);
    col_entity.str.resize(total);
    col_entity.valid.assign(total, 1);
    Column& col_ts = out.table.add_column("timestamp", ColType::I64);
    col_ts.i64.resize(total);
    col_ts.valid.assign(total, 1);
    std::array<Column*, kNumColumns> cols{};
    for (size_t c = 0; c < kNumColumns; ++c) {
        Column& col = out.table.add_column(canonical_feature_columns()[c], ColType::F64);
        col.f64.assign(total, 0.0);
        col.valid.assign(total, 0);
        cols[c] = &col;
    }

    const FeatureConfig& cfg = feature_config();

    auto fill_entity = [&](size_t ei) {
        const std::string& id = *order[ei].first;
        const std::vector<size_t>& rows = *order[ei].second;
        const size_t off = offsets[ei];
        const size_t n = rows.size();

        const Profile* prof = nullptr;
        if (const auto it = profiles.find(id); it != profiles.end()) prof = &it->second;
        const RegionWx* w = nullptr;
        if (prof)
            if (const auto it = wx.find(prof->region); it != wx.end()) w = &it->second;

        std::vector<std::pair<int64_t, double>> series;
        series.reserve(n);
        for (size_t r : rows)
            series.emplace_back(ts->i64[r], energy && energy->valid[r] ? energy->f64[r] : 0.0);
        const std::vector<RollingStats> roll = rolling_stats(series, 10);

        auto set = [&](size_t c, size_t row, double v) {
            cols[c]->f64[row] = v;
            cols[c]->valid[row] = 1;
        };

        size_t wi = 0;  // two-pointer into the region's weather series
        for (size_t i = 0; i < n; ++i) {
            const size_t r = rows[i];
            const int64_t t = ts->i64[r];
            const size_t out_row = off + i;
            col_entity.str[out_row] = id;
            col_ts.i64[out_row] = t;

            if (energy && energy->valid[r]) set(cEnergy, out_row, energy->f64[r]);
            if (roll[i].complete) {
                set(cEnergyMean, out_row, roll[i].mean);
                set(cEnergyStd, out_row, roll[i].std);
            }

            const TimeFeatures tf = time_features(t, cfg.tz_offset_hours);
            set(cDayPercent, out_row, tf.day_percent);
            set(cYearPercent, out_row, tf.year_percent);
            const CalendarFeatures cf = calendar_features(t, cfg.tz_offset_hours, cfg.holidays);
            set(cIsHoliday, out_row, cf.is_holiday ? 1.0 : 0.0);
            set(cWeekday, out_row, static_cast<double>(cf.weekday));
            set(cIsWeekend, out_row, cf.is_weekend ? 1.0 : 0.0);

            if (w) {
                while (wi < w->ts.size() && w->ts[wi] <= t) ++wi;
                if (wi > 0 && t - w->ts[wi - 1] <= kWeatherTtl) {
                    const size_t k = wi - 1;
                    if (w->ok[0][k]) set(cTemperature, out_row, w->vals[0][k]);
                    if (w->ok[1][k]) set(cHumidity, out_row, w->vals[1][k]);
                    if (w->ok[2][k]) set(cPressure, out_row, w->vals[2][k]);
                    if (w->ok[3][k]) set(cWeather, out_row, w->vals[3][k]);
                    if (prof->has_coords) {
                        const SolarPosition sp = solar_position(prof->lat, prof->lon, w->ts[k]);
                        set(cSolarAltitude, out_row, sp.altitude);
                        set(cSolarAzimuth, out_row, sp.azimuth);
                        set(cSolarRadiation, out_row, sp.clear_sky_radiation);
                    }
                }
            }

            if (prof && t >= kProfileEpoch && t - kProfileEpoch <= kProfileTtl)
                for (size_t j = 0; j < prof->vals.size(); ++j)
                    if (prof->ok[j]) set(cResidentialId + j, out_row, prof->vals[j]);
        }
    };

    if (threads <= 1) {
        for (size_t ei = 0; ei < order.size(); ++ei) fill_entity(ei);
    } else {
        std::atomic<size_t> cursor{0};
        std::vector<std::string> failures(static_cast<size_t>(threads));
        auto worker = [&](size_t slot) {
            for (;;) {
                const size_t ei = cursor.fetch_add(1);
                if (ei >= order.size()) return;
                try {
                    fill_entity(ei);
                } catch (const std::exception& e) {
                    failures[slot] = e.what();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, static_cast<size_t>(t));
        for (auto& t : pool) t.join();  // merge barrier
        for (const auto& f : failures)
            if (!f.empty()) throw Error("JoinFailed", f);
    }

    store.flush_categories();
    return out;
}

TrainingMatrix subset_from_intermediate(const ColumnTable& inter, const SubsetQuery& q) {
    if (q.t0 > q.t1) throw Error("EmptyRange", "time range start is after its end");
    const Column* ent = inter.find("__entity__");
    const Column* ts = inter.find("timestamp");
    if (!ent || !ts) throw missing_column("__entity__", "intermediate table");

    std::map<std::string, std::vector<size_t>> rows_by;
    for (size_t r = 0; r < inter.n_rows; ++r) rows_by[ent->str[r]].push_back(r);

    const auto& names = canonical_feature_columns();
    std::vector<const Column*> cols;
    for (const auto& name : names) {
        const Column* c = inter.find(name);
        if (!c) throw missing_column(name, "intermediate table");
        cols.push_back(c);
    }

    TrainingMatrix m;
    m.columns = names;
    for (const auto& id : q.entity_ids) {
        const auto it = rows_by.find(id);
        if (it == rows_by.end()) continue;
        for (size_t r : it->second) {
            if (ts->i64[r] < q.t0 || ts->i64[r] > q.t1) continue;
            m.row_entities.push_back({"residential_id", id});
            m.row_timestamps.push_back(ts->i64[r]);
            for (const Column* c : cols) {
                m.data.push_back(c->valid[r] ? c->f64[r] : 0.0);
                m.missing.push_back(c->valid[r] ? 0 : 1);
            }
        }
    }
    return m;
}

std::pair<TrainingMatrix, BenchTimings> run_joined(const std::string& store_dir,
                                                   const SubsetQuery& query, int threads,
                                                   const char* strategy) {
    OfflineStore store = OfflineStore::open(store_dir);
    const SubsetQuery q = resolve_query(store, query);

    BenchTimings timings;
    timings.strategy = strategy;
    timings.threads = threads;

    const std::string path =
        store_dir + "/intermediate_" + strategy + ".parquet";
    const auto prep_start = Clock::now();
    const Enriched enriched = build_enriched(store, threads);
    parquet::write_table(path, enriched.table);
    timings.t_join_enrich = seconds_since(prep_start);
    timings.rows_joined = enriched.rows;

    const auto subset_start = Clock::now();
    const ColumnTable inter = parquet::read_table(path);
    TrainingMatrix m = subset_from_intermediate(inter, q);
    timings.t_obtain_subset = seconds_since(subset_start);
    return {std::move(m), timings};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::string environment_string() {
    std::string s = "unknown";
    utsname u{};
    if (uname(&u) == 0) s = std::string(u.sysname) + " " + u.release + " " + u.machine;
    s += ", " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads";
    return s;
}

}  // namespace

const std::vector<std::string>& canonical_feature_columns() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n = {
            "energy",      "energy_mean",    "energy_std",  "temperature",    "humidity",
            "pressure",    "weather",        "solar_altitude", "solar_azimuth", "solar_radiation",
            "day_percent", "year_percent",   "is_holiday",  "weekday",        "is_weekend",
            "residential_id", "house_type",  "facing",      "RUs",            "region",
            "latitude",    "longitude"};
        for (const std::string& flag : metadata_flags()) n.push_back(flag);
        return n;
    }();
    return names;
}

std::pair<TrainingMatrix, BenchTimings> run_eager(const std::string& store_dir,
                                                  const SubsetQuery& query) {
    return run_joined(store_dir, query, 1, "eager");
}

std::pair<TrainingMatrix, BenchTimings> run_partitioned(const std::string& store_dir,
                                                        const SubsetQuery& query, int threads) {
    if (threads < 2)
        throw Error("InvalidArgument", "partitioned strategy needs at least 2 threads");
    return run_joined(store_dir, query, threads, "partitioned");
}

std::pair<TrainingMatrix, BenchTimings> run_lazy(const std::string& store_dir,
                                                 const std::string& registry_file,
                                                 const SubsetQuery& query) {
    OfflineStore store = OfflineStore::open(store_dir);
    const SubsetQuery q = resolve_query(store, query);

    BenchTimings timings;
    timings.strategy = "lazy";
    timings.threads = 1;

    const auto prep_start = Clock::now();
    const Registry registry = Registry::load(registry_file, &store);
    timings.t_join_enrich = seconds_since(prep_start);

    std::vector<std::string> features;
    for (const FeatureView& v : registry.views())
        for (const FeatureSpec& f : v.features) features.push_back(f.name);

    const auto subset_start = Clock::now();
    TrainingMatrix m = registry.get_subset(q.entity_ids, q.t0, q.t1, features);
    timings.t_obtain_subset = seconds_since(subset_start);
    timings.rows_joined = static_cast<int64_t>(m.n_rows());
    return {std::move(m), timings};
}

std::vector<BenchTimings> BenchReport::medians() const {
    std::vector<std::string> strategies;
    for (const auto& run : runs)
        if (std::find(strategies.begin(), strategies.end(), run.strategy) == strategies.end())
            strategies.push_back(run.strategy);

    std::vector<BenchTimings> out;
    for (const auto& strategy : strategies) {
        std::vector<const BenchTimings*> mine;
        for (const auto& run : runs)
            if (run.strategy == strategy) mine.push_back(&run);
        if (mine.size() > 1) mine.erase(mine.begin());  // warm-up repetition

        BenchTimings m;
        m.strategy = strategy;
        m.threads = mine.back()->threads;
        m.rows_joined = mine.back()->rows_joined;
        std::vector<double> process, prep, subset;
        for (const BenchTimings* r : mine) {
            process.push_back(r->t_process);
            prep.push_back(r->t_join_enrich);
            subset.push_back(r->t_obtain_subset);
        }
        m.t_process = median(std::move(process));
        m.t_join_enrich = median(std::move(prep));
        m.t_obtain_subset = median(std::move(subset));
        out.push_back(std::move(m));
    }
    return out;
}

BenchReport run_benchmark(const BenchConfig& config) {
    if (config.repetitions < 3)
        throw Error("InvalidArgument", "benchmark needs at least 3 repetitions");
    if (config.threads < 2)
        throw Error("InvalidArgument", "benchmark needs at least 2 partitioned threads");

    double t_process = 0.0;
    if (!config.raw_dir.empty()) {
        namespace fs = std::filesystem;
        const fs::path scratch =
            fs::path(config.store_dir) / ".bench_process";
        fs::remove_all(scratch);
        const auto start = Clock::now();
        OfflineStore store = OfflineStore::create(scratch.string());
        ingest_consumption(store, {(fs::path(config.raw_dir) / "consumption.csv").string()},
                           timeutil::pacific_time());
        ingest_weather(store, (fs::path(config.raw_dir) / "weather.csv").string(),
                       timeutil::pacific_time());
        ingest_metadata(store, (fs::path(config.raw_dir) / "metadata.csv").string());
        t_process = seconds_since(start);
        fs::remove_all(scratch);
    }

    BenchReport report;
    report.repetitions = config.repetitions;
    report.environment = environment_string();

    for (int rep = 0; rep < config.repetitions; ++rep) {
        auto [m, t] = run_eager(config.store_dir, config.query);
        t.t_process = t_process;
        report.runs.push_back(t);
    }
    for (int rep = 0; rep < config.repetitions; ++rep) {
        auto [m, t] = run_partitioned(config.store_dir, config.query, config.threads);
        t.t_process = t_process;
        report.runs.push_back(t);
    }
    for (int rep = 0; rep < config.repetitions; ++rep) {
        auto [m, t] = run_lazy(config.store_dir, config.registry_file, config.query);
        t.t_process = t_process;
        report.runs.push_back(t);
    }
    return report;
}

std::string bench_report_csv(const BenchReport& report) {
    std::string out = "strategy,t_process,t_join_enrich,t_obtain_subset,threads,rows_joined\n";
    for (const BenchTimings& m : report.medians())
        out += m.strategy + "," + format_double(m.t_process) + "," +
               format_double(m.t_join_enrich) + "," + format_double(m.t_obtain_subset) + "," +
               std::to_string(m.threads) + "," + std::to_string(m.rows_joined) + "\n";
    return out;
}

std::string bench_report_text(const BenchReport& report) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-12s %12s %15s %17s %8s %12s\n", "strategy", "process [s]",
                  "join+enrich [s]", "obtain subset [s]", "threads", "rows joined");
    std::string out = buf;
    out += std::string(81, '-') + "\n";
    for (const BenchTimings& m : report.medians()) {
        std::snprintf(buf, sizeof buf, "%-12s %12.3f %15.3f %17.3f %8d %12lld\n",
                      m.strategy.c_str(), m.t_process, m.t_join_enrich, m.t_obtain_subset,
                      m.threads, static_cast<long long>(m.rows_joined));
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "median of %d repetitions per strategy (first discarded); %s\n",
                  report.repetitions, report.environment.c_str());
    out += buf;
    return out;
}

}  // namespace featstore
