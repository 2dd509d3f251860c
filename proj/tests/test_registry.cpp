#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <random>

#include "featstore/core.hpp"
#include "featstore/errors.hpp"
#include "featstore/parquet.hpp"
#include "featstore/registry.hpp"
#include "featstore/store.hpp"
#include "featstore/timeutil.hpp"
#include "helpers.hpp"

using namespace featstore;

TEST_SUITE_BEGIN("registry");

namespace {

// A store whose only table carries plain passthrough observation columns.
struct ObsStore {
    testutil::TempDir dir{"reg"};
    OfflineStore store = OfflineStore::create(dir.sub("s"));

    struct Record {
        std::string id;
        int64_t ts;
        std::optional<double> temperature, humidity, pressure;
    };
    std::vector<Record> records;

    void write(const std::string& table) {
        ColumnTable t;
        auto& id = t.add_column("residential_id", ColType::Str);
        auto& ts = t.add_column("timestamp", ColType::I64);
        auto& te = t.add_column("temperature", ColType::F64);
        auto& hu = t.add_column("humidity", ColType::F64);
        auto& pr = t.add_column("pressure", ColType::F64);
        for (const auto& r : records) {
            id.push_str(r.id);
            ts.push_i64(r.ts);
            if (r.temperature) te.push_f64(*r.temperature); else te.push_null();
            if (r.humidity) hu.push_f64(*r.humidity); else hu.push_null();
            if (r.pressure) pr.push_f64(*r.pressure); else pr.push_null();
        }
        t.n_rows = records.size();
        store.write_table(table, t);
    }

    // Ground truth for one (entity, t, feature, ttl) lookup: the latest
    // record at or before t within the ttl window; missing when there is
    // no such record or its value is null.
    std::optional<double> oracle(const std::string& id, int64_t t, const std::string& feat,
                                 int64_t ttl) const {
        const Record* best = nullptr;
        for (const auto& r : records) {
            if (r.id != id || r.ts > t) continue;
            if (!best || r.ts > best->ts) best = &r;
        }
        if (!best || t - best->ts > ttl) return std::nullopt;
        if (feat == "temperature") return best->temperature;
        if (feat == "humidity") return best->humidity;
        return best->pressure;
    }
};

FeatureSpec catalog_spec(const std::string& name) {
    const FeatureSpec* s = energy_catalog().find(name);
    REQUIRE(s != nullptr);
    return *s;
}

FeatureView obs_view(const std::string& name, const std::string& table, int64_t ttl,
                     const std::vector<std::string>& feats) {
    FeatureView v;
    v.name = name;
    v.entity = "residential_id";
    v.source = table;
    v.ttl_seconds = ttl;
    for (const auto& f : feats) v.features.push_back(catalog_spec(f));
    return v;
}

}  // namespace

TEST_CASE("shipped registry file round-trips through the grammar") {
    const std::string text = testutil::read_text(testutil::registry_file());
    const auto views = parse_registry_text(text, energy_catalog());
    REQUIRE(views.size() == 4);
    CHECK(views[0].name == "residential_hourly_stats");
    CHECK(views[0].ttl_seconds == 3600);
    CHECK(views[3].source == "metadata");
    CHECK(views[3].features.size() == 18);

    const auto again = parse_registry_text(serialize_registry(views), energy_catalog());
    CHECK(again == views);
}

TEST_CASE("randomized views survive serialize/parse round-trips") {
    std::mt19937_64 rng(41);
    const auto& entries = energy_catalog().entries;
    std::uniform_int_distribution<size_t> pick(0, entries.size() - 1);
    std::uniform_int_distribution<int64_t> ttl(1, 4'000'000'000LL);
    std::uniform_int_distribution<int> nfeat(1, 8);

    for (int i = 0; i < 50; ++i) {
        std::vector<FeatureView> views;
        for (int v = 0; v < 3; ++v) {
            FeatureView view;
            view.name = "view_" + std::to_string(i) + "_" + std::to_string(v);
            view.entity = v % 2 ? "residential_id" : "station_id";
            view.source = v % 2 ? "consumption" : "weather";
            view.ttl_seconds = ttl(rng);
            std::set<std::string> used;
            const int n = nfeat(rng);
            while (static_cast<int>(view.features.size()) < n) {
                const FeatureSpec& s = entries[pick(rng)];
                if (used.insert(s.name).second) view.features.push_back(s);
            }
            views.push_back(std::move(view));
        }
        CHECK(parse_registry_text(serialize_registry(views), energy_catalog()) == views);
    }
}

TEST_CASE("registry grammar rejects malformed text") {
    const FeatureCatalog& cat = energy_catalog();
    auto reject = [&](const std::string& text) {
        CHECK_THROWS_WITH_AS((void)parse_registry_text(text, cat),
                             doctest::Contains("ParseError"), Error);
    };
    reject("feature energy float\n");                                 // indent w/o view
    reject("view v entity=e source=s\n");                             // missing ttl
    reject("view v entity=e source=s ttl=abc\n");                     // bad ttl
    reject("view v entity=e source=s ttl=10\n  feature energy\n");    // missing dtype
    reject("view v entity=e source=s ttl=10\n  feature e decimal\n"); // bad dtype
    reject("table t\n");                                              // unknown token
    reject("  view v entity=e source=s ttl=10\n");                    // indented view

    // Comments and blank lines are fine anywhere.
    const auto ok = parse_registry_text(
        "# header\n\nview v entity=e source=consumption ttl=10 # trailing\n"
        "  feature energy float\n\n", cat);
    REQUIRE(ok.size() == 1);
    CHECK(ok[0].features.size() == 1);
}

TEST_CASE("register_view validates, rejects duplicates and unknown sources") {
    testutil::TempDir dir("reg");
    const std::string store_dir = testutil::make_corpus(dir, 1, 2, 3);
    OfflineStore store = OfflineStore::open(store_dir);
    Registry reg(&store);

    FeatureView bad = obs_view("v", "consumption", 0, {"energy"});
    CHECK_THROWS_WITH_AS(reg.register_view(bad), doctest::Contains("nonpositive ttl"), Error);
    CHECK_THROWS_WITH_AS(reg.register_view(bad), doctest::Contains("InvalidView"), Error);

    FeatureView good = obs_view("v", "consumption", 3600, {"energy"});
    reg.register_view(good);
    CHECK_THROWS_WITH_AS(reg.register_view(good), doctest::Contains("DuplicateView"), Error);

    FeatureView orphan = obs_view("w", "telemetry", 3600, {"energy"});
    CHECK_THROWS_WITH_AS(reg.register_view(orphan), doctest::Contains("UnknownSource"), Error);

    CHECK(reg.find_view("v") != nullptr);
    CHECK(reg.find_view("w") == nullptr);
}

TEST_CASE("registration is metadata-only and never opens source files") {
    testutil::TempDir dir("reg");
    const std::string store_dir = testutil::make_corpus(dir, 2, 2, 9);
    OfflineStore store = OfflineStore::open(store_dir);

    parquet::reset_file_open_count();
    Registry reg = Registry::load(testutil::registry_file(), &store);
    CHECK(reg.views().size() == 4);
    CHECK(parquet::file_open_count() == 0);

    // Retrieval is what pays for materialization.
    const ColumnTable consumption = store.read_table("consumption");
    const int64_t t = consumption.find("timestamp")->i64[30];
    EntityQuery q;
    q.rows.push_back({{"residential_id", "house1"}, t});
    q.requested = {"energy"};
    (void)reg.point_in_time_join(q);
    CHECK(parquet::file_open_count() >= 1);
}

TEST_CASE("resolve handles qualified and bare names") {
    testutil::TempDir dir("reg");
    OfflineStore store = OfflineStore::open(testutil::make_corpus(dir, 1, 2, 3));
    Registry reg = Registry::load(testutil::registry_file(), &store);

    const auto [view, feat] = reg.resolve("household_weather:temperature");
    CHECK(view->name == "household_weather");
    CHECK(feat == "temperature");

    // Bare names resolve against views in registration order.
    CHECK(reg.resolve("energy").first->name == "residential_hourly_stats");
    CHECK(reg.resolve("latitude").first->name == "household_profile");

    CHECK_THROWS_WITH_AS((void)reg.resolve("voltage"),
                         doctest::Contains("UnknownFeature"), Error);
    CHECK_THROWS_WITH_AS((void)reg.resolve("household_weather:energy"),
                         doctest::Contains("UnknownFeature"), Error);
}

TEST_CASE("join honors the ttl boundary inclusively") {
    ObsStore os;
    const int64_t base = 1'600'000'000;
    os.records.push_back({"h1", base, 20.0, 50.0, 101.0});
    os.write("obs");

    Registry reg(&os.store);
    reg.register_view(obs_view("v", "obs", 3600, {"temperature"}));

    EntityQuery q;
    q.requested = {"temperature"};
    for (int64_t dt : {0, 1, 3599, 3600, 3601, 7200})
        q.rows.push_back({{"residential_id", "h1"}, base + dt});
    q.rows.push_back({{"residential_id", "h1"}, base - 1});  // before the record

    const TrainingMatrix m = reg.point_in_time_join(q);
    CHECK_FALSE(m.is_missing(0, 0));  // dt = 0
    CHECK_FALSE(m.is_missing(1, 0));  // dt = 1
    CHECK_FALSE(m.is_missing(2, 0));  // dt = 3599
    CHECK_FALSE(m.is_missing(3, 0));  // dt = 3600: inclusive at exactly the ttl
    CHECK(m.is_missing(4, 0));        // dt = 3601: expired
    CHECK(m.is_missing(5, 0));        // dt = 7200
    CHECK(m.is_missing(6, 0));        // t before every record
    CHECK(m.at(3, 0) == 20.0);
}

TEST_CASE("a null value in the freshest record masks the cell") {
    ObsStore os;
    const int64_t base = 1'600'000'000;
    os.records.push_back({"h1", base, 20.0, 50.0, 101.0});
    os.records.push_back({"h1", base + 3600, std::nullopt, 55.0, 101.2});
    os.write("obs");

    Registry reg(&os.store);
    reg.register_view(obs_view("v", "obs", 86400, {"temperature", "humidity"}));

    EntityQuery q;
    q.requested = {"temperature", "humidity"};
    q.rows.push_back({{"residential_id", "h1"}, base + 4000});

    const TrainingMatrix m = reg.point_in_time_join(q);
    // The freshest record wins even when null: no fallback to older rows.
    CHECK(m.is_missing(0, 0));
    CHECK_FALSE(m.is_missing(0, 1));
    CHECK(m.at(0, 1) == 55.0);
}

TEST_CASE("unknown entities and mismatched entity names mask silently") {
    ObsStore os;
    os.records.push_back({"h1", 1'600'000'000, 20.0, 50.0, 101.0});
    os.write("obs");

    Registry reg(&os.store);
    reg.register_view(obs_view("v", "obs", 86400, {"temperature"}));

    EntityQuery q;
    q.requested = {"temperature"};
    q.rows.push_back({{"residential_id", "ghost"}, 1'600'000'500});
    q.rows.push_back({{"station_id", "h1"}, 1'600'000'500});

    const TrainingMatrix m = reg.point_in_time_join(q);
    CHECK(m.is_missing(0, 0));
    CHECK(m.is_missing(1, 0));
}

TEST_CASE("randomized joins agree with a brute-force oracle") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> n_entities(1, 6);
    std::uniform_int_distribution<int> n_records(1, 40);
    std::uniform_int_distribution<int64_t> ttl_dist(1, 20'000);
    std::uniform_real_distribution<double> value(-50.0, 50.0);
    std::uniform_int_distribution<int> null_coin(0, 4);
    const int64_t base = 1'600'000'000;

    const std::vector<std::string> feats = {"temperature", "humidity", "pressure"};

    for (int instance = 0; instance < 40; ++instance) {
        ObsStore os;
        const int ne = n_entities(rng);
        std::vector<std::string> ids;
        for (int e = 0; e < ne; ++e) ids.push_back("h" + std::to_string(e));

        for (const auto& id : ids) {
            // Distinct timestamps per entity: sample then deduplicate.
            std::set<int64_t> stamps;
            const int nr = n_records(rng);
            std::uniform_int_distribution<int64_t> ts_dist(base, base + 50'000);
            for (int r = 0; r < nr; ++r) stamps.insert(ts_dist(rng));
            for (int64_t ts : stamps) {
                ObsStore::Record rec;
                rec.id = id;
                rec.ts = ts;
                if (null_coin(rng)) rec.temperature = value(rng);
                if (null_coin(rng)) rec.humidity = value(rng);
                if (null_coin(rng)) rec.pressure = value(rng);
                os.records.push_back(std::move(rec));
            }
        }
        os.write("obs");

        Registry reg(&os.store);
        std::uniform_int_distribution<int> n_views(1, 3);
        const int nv = n_views(rng);
        std::vector<int64_t> ttls;
        for (int v = 0; v < nv; ++v) {
            ttls.push_back(ttl_dist(rng));
            reg.register_view(obs_view("v" + std::to_string(v), "obs", ttls.back(), feats));
        }

        EntityQuery q;
        for (int v = 0; v < nv; ++v)
            for (const auto& f : feats)
                q.requested.push_back("v" + std::to_string(v) + ":" + f);
        std::uniform_int_distribution<int64_t> t_dist(base - 5'000, base + 80'000);
        std::uniform_int_distribution<size_t> id_pick(0, ids.size() - 1);
        std::uniform_int_distribution<int> ghost(0, 9);
        for (int r = 0; r < 30; ++r) {
            const std::string id = ghost(rng) == 0 ? "ghost" : ids[id_pick(rng)];
            q.rows.push_back({{"residential_id", id}, t_dist(rng)});
        }

        const TrainingMatrix m = reg.point_in_time_join(q);
        REQUIRE(m.n_rows() == q.rows.size());
        REQUIRE(m.n_cols() == q.requested.size());
        for (size_t r = 0; r < m.n_rows(); ++r) {
            for (int v = 0; v < nv; ++v) {
                for (size_t fi = 0; fi < feats.size(); ++fi) {
                    const size_t c = static_cast<size_t>(v) * feats.size() + fi;
                    const auto want = os.oracle(q.rows[r].first.value, q.rows[r].second,
                                                feats[fi], ttls[static_cast<size_t>(v)]);
                    if (want) {
                        REQUIRE_FALSE(m.is_missing(r, c));
                        REQUIRE(m.at(r, c) == *want);
                    } else {
                        REQUIRE(m.is_missing(r, c));
                    }
                }
            }
        }
    }
}

TEST_CASE("widening the ttl only ever reveals more values") {
    std::mt19937_64 rng(77);
    ObsStore os;
    std::uniform_real_distribution<double> value(-10.0, 10.0);
    std::set<int64_t> stamps;
    std::uniform_int_distribution<int64_t> ts_dist(0, 40'000);
    for (int r = 0; r < 30; ++r) stamps.insert(ts_dist(rng));
    for (int64_t ts : stamps) os.records.push_back({"h1", ts, value(rng), value(rng), value(rng)});
    os.write("obs");

    Registry narrow(&os.store), wide(&os.store);
    narrow.register_view(obs_view("v", "obs", 1'000, {"temperature"}));
    wide.register_view(obs_view("v", "obs", 10'000, {"temperature"}));

    EntityQuery q;
    q.requested = {"temperature"};
    for (int64_t t = 0; t <= 45'000; t += 777) q.rows.push_back({{"residential_id", "h1"}, t});

    const TrainingMatrix a = narrow.point_in_time_join(q);
    const TrainingMatrix b = wide.point_in_time_join(q);
    for (size_t r = 0; r < a.n_rows(); ++r) {
        if (!a.is_missing(r, 0)) {
            CHECK_FALSE(b.is_missing(r, 0));
            CHECK(a.at(r, 0) == b.at(r, 0));
        }
    }
    const auto count = [](const TrainingMatrix& m) {
        size_t n = 0;
        for (size_t r = 0; r < m.n_rows(); ++r) n += m.is_missing(r, 0) ? 0 : 1;
        return n;
    };
    CHECK(count(b) > count(a));
}

TEST_CASE("join output is independent of source row order") {
    std::mt19937_64 rng(55);
    ObsStore a;
    std::uniform_real_distribution<double> value(-10.0, 10.0);
    for (const std::string id : {"h1", "h2"}) {
        std::set<int64_t> stamps;
        std::uniform_int_distribution<int64_t> ts_dist(0, 30'000);
        for (int r = 0; r < 20; ++r) stamps.insert(ts_dist(rng));
        for (int64_t ts : stamps) a.records.push_back({id, ts, value(rng), value(rng), value(rng)});
    }
    ObsStore b;
    b.records = a.records;
    std::shuffle(b.records.begin(), b.records.end(), rng);
    a.write("obs");
    b.write("obs");

    Registry ra(&a.store), rb(&b.store);
    ra.register_view(obs_view("v", "obs", 5'000, {"temperature", "pressure"}));
    rb.register_view(obs_view("v", "obs", 5'000, {"temperature", "pressure"}));

    EntityQuery q;
    q.requested = {"temperature", "pressure"};
    for (const std::string id : {"h1", "h2", "h3"})
        for (int64_t t = 0; t <= 32'000; t += 501) q.rows.push_back({{"residential_id", id}, t});

    const TrainingMatrix ma = ra.point_in_time_join(q);
    const TrainingMatrix mb = rb.point_in_time_join(q);
    CHECK(ma.data == mb.data);
    CHECK(ma.missing == mb.missing);
}

TEST_CASE("get_subset queries every driving timestamp in range") {
    testutil::TempDir dir("reg");
    OfflineStore store = OfflineStore::open(testutil::make_corpus(dir, 2, 3, 21));
    Registry reg = Registry::load(testutil::registry_file(), &store);

    const ColumnTable consumption = store.read_table("consumption");
    const Column* ids = consumption.find("residential_id");
    const Column* ts = consumption.find("timestamp");
    // house1's first day of records.
    std::vector<int64_t> day;
    for (size_t r = 0; r < consumption.n_rows; ++r)
        if (ids->str[r] == "house1" && day.size() < 24) day.push_back(ts->i64[r]);
    REQUIRE(day.size() == 24);

    const std::vector<std::string> feats = {"energy", "temperature", "is_weekend"};
    const TrainingMatrix m = reg.get_subset({"house1"}, day.front(), day.back(), feats);
    CHECK(m.n_rows() == 24);
    CHECK(m.n_cols() == 3);
    CHECK(m.row_timestamps == day);
    for (size_t r = 0; r < m.n_rows(); ++r) CHECK_FALSE(m.is_missing(r, 0));

    // Same rows through the raw join give the same matrix.
    EntityQuery q;
    q.requested = feats;
    for (int64_t t : day) q.rows.push_back({{"residential_id", "house1"}, t});
    const TrainingMatrix direct = reg.point_in_time_join(q);
    CHECK(m.data == direct.data);
    CHECK(m.missing == direct.missing);

    CHECK_THROWS_WITH_AS((void)reg.get_subset({"house1"}, day.back(), day.front(), feats),
                         doctest::Contains("EmptyRange"), Error);
}

TEST_CASE("profile features pass through building metadata") {
    testutil::TempDir dir("reg");
    OfflineStore store = OfflineStore::open(testutil::make_corpus(dir, 3, 2, 13));
    Registry reg = Registry::load(testutil::registry_file(), &store);

    const ColumnTable meta = store.read_table("metadata");
    const Column* ids = meta.find("residential_id");
    const Column* fagf = meta.find("FAGF");
    const Column* lat = meta.find("latitude");

    EntityQuery q;
    q.requested = {"household_profile:FAGF", "household_profile:latitude"};
    const int64_t t = timeutil::to_epoch({2018, 1, 1, 12, 0, 0});
    for (size_t r = 0; r < meta.n_rows; ++r)
        q.rows.push_back({{"residential_id", ids->str[r]}, t});

    const TrainingMatrix m = reg.point_in_time_join(q);
    for (size_t r = 0; r < meta.n_rows; ++r) {
        REQUIRE_FALSE(m.is_missing(r, 0));
        CHECK(m.at(r, 0) == (fagf->boolean[r] ? 1.0 : 0.0));
        CHECK(m.at(r, 1) == lat->f64[r]);
    }
}

TEST_CASE("weather features reach households through their region") {
    testutil::TempDir dir("reg");
    OfflineStore store = OfflineStore::open(testutil::make_corpus(dir, 2, 2, 31));
    Registry reg = Registry::load(testutil::registry_file(), &store);

    const ColumnTable weather = store.read_table("weather");
    const ColumnTable meta = store.read_table("metadata");
    const std::string region = meta.find("region")->str[0];
    const std::string house = meta.find("residential_id")->str[0];

    // Query exactly at a weather timestamp of the household's region.
    const Column* wreg = weather.find("region");
    const Column* wts = weather.find("timestamp");
    const Column* wtemp = weather.find("temperature");
    size_t row = weather.n_rows;
    for (size_t r = 0; r < weather.n_rows; ++r)
        if (wreg->str[r] == region) { row = r; break; }
    REQUIRE(row < weather.n_rows);

    EntityQuery q;
    q.requested = {"household_weather:temperature"};
    q.rows.push_back({{"residential_id", house}, wts->i64[row]});
    const TrainingMatrix m = reg.point_in_time_join(q);
    REQUIRE_FALSE(m.is_missing(0, 0));
    CHECK(m.at(0, 0) == wtemp->f64[row]);
}

TEST_CASE("category codes are stable across materializations and runs") {
    testutil::TempDir dir("reg");
    testutil::write_text(dir.sub("m.csv"),
                         "residential_id,house_type,facing,RUs,region,latitude,longitude\n"
                         "h1,bungalow,S,0,YVR,49.25,-123.1\n"
                         "h2,character,,0,YVR,49.30,-123.2\n");

    const auto codes_once = [&](const std::string& store_name) {
        OfflineStore store = OfflineStore::create(dir.sub(store_name));
        ingest_metadata(store, dir.sub("m.csv"));
        Registry reg(&store);
        FeatureView v;
        v.name = "profile";
        v.entity = "residential_id";
        v.source = "metadata";
        v.ttl_seconds = 3'155'760'000LL;
        for (const auto& f : {"house_type", "facing"}) v.features.push_back(catalog_spec(f));
        reg.register_view(v);
        (void)materialize_view(store, *reg.find_view("profile"));
        return std::make_pair(store.categories().values_in_order,
                              testutil::read_text(dir.sub(store_name) + "/categories.json"));
    };

    const auto a = codes_once("s1");
    const auto b = codes_once("s2");
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    CHECK_FALSE(a.second.empty());

    // Missing facing ingested as the literal "unknown" category.
    OfflineStore store = OfflineStore::open(dir.sub("s1"));
    CHECK(store.categories().lookup("facing", "unknown") >= 0);

    // A second materialization on the same store changes nothing.
    Registry reg(&store);
    FeatureView v;
    v.name = "profile";
    v.entity = "residential_id";
    v.source = "metadata";
    v.ttl_seconds = 3'155'760'000LL;
    v.features.push_back(catalog_spec("facing"));
    reg.register_view(v);
    (void)materialize_view(store, *reg.find_view("profile"));
    CHECK(testutil::read_text(dir.sub("s1") + "/categories.json") == a.second);
}

TEST_SUITE_END();
