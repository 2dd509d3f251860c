#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "featstore/errors.hpp"
#include "featstore/ingest.hpp"
#include "featstore/store.hpp"
#include "featstore/timeutil.hpp"
#include "helpers.hpp"

using namespace featstore;

TEST_SUITE_BEGIN("ingest");

namespace {

const timeutil::WallClockZone& zone() {
    static const timeutil::WallClockZone z = timeutil::pacific_time();
    return z;
}

OfflineStore fresh_store(const testutil::TempDir& dir, const std::string& name) {
    return OfflineStore::create(dir.sub(name));
}

}  // namespace

TEST_CASE("consumption ingest validates, deduplicates, and sorts") {
    testutil::TempDir dir("ing");
    testutil::write_text(dir.sub("c.csv"),
                         "residential_id,date,hour,energy\n"
                         "h2,2018-01-15,0,1.25\n"
                         "h1,2018-01-15,1,0.5\n"
                         "h1,2018-01-15,0,0.75\n"
                         "h1,2018-01-15,0,9.99\n"    // duplicate key, second copy
                         "h1,2018-01-15,24,1.0\n"    // hour out of range
                         "h1,2018-01-16,2,-0.1\n"    // negative energy
                         "h1,2018-02-30,2,1.0\n");   // impossible date
    OfflineStore store = fresh_store(dir, "s");
    const StorageStats st = ingest_consumption(store, {dir.sub("c.csv")}, zone());

    CHECK(st.rows_in == 7);
    CHECK(st.rows_out == 3);
    CHECK(st.rows_dropped_duplicate == 1);
    CHECK(st.rows_dropped_invalid == 3);
    CHECK(st.rows_in == st.rows_out + st.rows_dropped_duplicate + st.rows_dropped_invalid);
    CHECK(st.gap_hours_filled == 0);

    const ColumnTable t = store.read_table("consumption");
    REQUIRE(t.n_rows == 3);
    const Column* id = t.find("residential_id");
    const Column* ts = t.find("timestamp");
    const Column* en = t.find("energy");
    // Sorted by id then timestamp.
    CHECK(id->str == std::vector<std::string>{"h1", "h1", "h2"});
    CHECK(std::is_sorted(ts->i64.begin(), ts->i64.begin() + 2));
    // Duplicate (h1, hour 0) kept the FIRST copy read.
    CHECK(en->f64[0] == 0.75);
    // Local 2018-01-15 00:00 PST = 08:00Z.
    CHECK(ts->i64[0] == timeutil::to_epoch({2018, 1, 15, 8, 0, 0}));
}

TEST_CASE("consumption files without an id column use the file stem") {
    testutil::TempDir dir("ing");
    testutil::write_text(dir.sub("house7.csv"),
                         "date,hour,energy\n"
                         "2018-01-15,0,1.0\n"
                         "2018-01-15,1,2.0\n");
    testutil::write_text(dir.sub("house8.csv"),
                         "date,hour,energy\n"
                         "2018-01-15,0,3.0\n");
    OfflineStore store = fresh_store(dir, "s");
    const StorageStats st =
        ingest_consumption(store, {dir.sub("house7.csv"), dir.sub("house8.csv")}, zone());
    CHECK(st.rows_out == 3);
    const ColumnTable t = store.read_table("consumption");
    CHECK(t.find("residential_id")->str ==
          std::vector<std::string>{"house7", "house7", "house8"});
}

TEST_CASE("consumption ingest reports missing columns and empty input") {
    testutil::TempDir dir("ing");
    OfflineStore store = fresh_store(dir, "s");

    testutil::write_text(dir.sub("noenergy.csv"), "residential_id,date,hour\nh1,2018-01-01,0\n");
    CHECK_THROWS_WITH_AS(ingest_consumption(store, {dir.sub("noenergy.csv")}, zone()),
                         doctest::Contains("MissingColumn"), Error);

    testutil::write_text(dir.sub("notime.csv"), "residential_id,energy\nh1,1.0\n");
    CHECK_THROWS_WITH_AS(ingest_consumption(store, {dir.sub("notime.csv")}, zone()),
                         doctest::Contains("MissingColumn"), Error);

    testutil::write_text(dir.sub("allbad.csv"),
                         "residential_id,date,hour,energy\nh1,2018-01-01,0,-5\n");
    CHECK_THROWS_WITH_AS(ingest_consumption(store, {dir.sub("allbad.csv")}, zone()),
                         doctest::Contains("EmptyInput"), Error);
}

TEST_CASE("weather ingest normalizes conditions and bounds humidity") {
    testutil::TempDir dir("ing");
    testutil::write_text(dir.sub("w.csv"),
                         "region,timestamp,temperature,humidity,pressure,weather\n"
                         "YVR,2018-01-15 00:00,4.5,80,101.3,\" Cloudy \"\n"
                         "YVR,2018-01-15 01:00,4.0,250,101.2,rain\n"   // humidity out of range
                         "YVR,2018-01-15 02:00,3.5,79,101.1,Rain\n"
                         "YVR,2018-01-15 00:00,9.9,50,101.0,fog\n");   // duplicate key
    OfflineStore store = fresh_store(dir, "s");
    const StorageStats st = ingest_weather(store, dir.sub("w.csv"), zone());
    CHECK(st.rows_in == 4);
    CHECK(st.rows_out == 2);
    CHECK(st.rows_dropped_invalid == 1);
    CHECK(st.rows_dropped_duplicate == 1);

    const ColumnTable t = store.read_table("weather");
    REQUIRE(t.n_rows == 2);
    CHECK(t.find("weather")->str == std::vector<std::string>{"cloudy", "rain"});
    CHECK(t.find("temperature")->f64[0] == 4.5);
    // Local wall-clock weather timestamps convert like consumption ones.
    CHECK(t.find("timestamp")->i64[0] == timeutil::to_epoch({2018, 1, 15, 8, 0, 0}));
}

TEST_CASE("metadata ingest fills defaults and rejects duplicate ids") {
    testutil::TempDir dir("ing");
    // No FAGF/GEOTH/... flag columns at all; facing empty on h2.
    testutil::write_text(dir.sub("m.csv"),
                         "residential_id,house_type,facing,RUs,region,latitude,longitude\n"
                         "h2,character,,1,YVR,49.25,-123.1\n"
                         "h1,bungalow,S,0,YVR,49.30,-123.2\n");
    OfflineStore store = fresh_store(dir, "s");
    const StorageStats st = ingest_metadata(store, dir.sub("m.csv"));
    CHECK(st.rows_out == 2);

    const ColumnTable t = store.read_table("metadata");
    REQUIRE(t.n_rows == 2);
    // Sorted by id.
    CHECK(t.find("residential_id")->str == std::vector<std::string>{"h1", "h2"});
    CHECK(t.find("facing")->str == std::vector<std::string>{"S", "unknown"});
    for (const auto& flag : metadata_flags()) {
        const Column* c = t.find(flag);
        REQUIRE(c != nullptr);
        CHECK(c->boolean == std::vector<uint8_t>{0, 0});
    }

    testutil::write_text(dir.sub("dup.csv"),
                         "residential_id,house_type,facing,RUs,region,latitude,longitude\n"
                         "h1,a,N,0,YVR,49.0,-123.0\n"
                         "h1,b,S,0,YVR,49.0,-123.0\n");
    OfflineStore store2 = fresh_store(dir, "s2");
    CHECK_THROWS_WITH_AS(ingest_metadata(store2, dir.sub("dup.csv")),
                         doctest::Contains("DuplicateEntity"), Error);
}

TEST_CASE("cleaned csv mirrors re-ingest to identical tables") {
    testutil::TempDir dir("ing");
    const std::string store_dir = testutil::make_corpus(dir, 2, 3, 11);
    OfflineStore store = OfflineStore::open(store_dir);

    const auto mirror = [&](const std::string& name) {
        return store.dir() + "/" + name + ".csv";
    };
    OfflineStore echo = fresh_store(dir, "echo");
    const StorageStats sc = ingest_consumption(echo, {mirror("consumption")}, zone());
    CHECK(sc.rows_dropped_duplicate == 0);
    CHECK(sc.rows_dropped_invalid == 0);
    const StorageStats sw = ingest_weather(echo, mirror("weather"), zone());
    CHECK(sw.rows_dropped_invalid == 0);
    ingest_metadata(echo, mirror("metadata"));

    for (const std::string name : {"consumption", "weather", "metadata"}) {
        const ColumnTable a = store.read_table(name);
        const ColumnTable b = echo.read_table(name);
        REQUIRE(a.n_rows == b.n_rows);
        REQUIRE(a.cols.size() == b.cols.size());
        CHECK(table_to_csv(a) == table_to_csv(b));
    }
}

TEST_CASE("synthetic corpus is deterministic for a fixed seed") {
    testutil::TempDir dir("ing");
    const SynthFiles a = generate_synthetic(2, 2, 7, dir.sub("a"));
    const SynthFiles b = generate_synthetic(2, 2, 7, dir.sub("b"));
    CHECK(testutil::read_text(a.consumption) == testutil::read_text(b.consumption));
    CHECK(testutil::read_text(a.weather) == testutil::read_text(b.weather));
    CHECK(testutil::read_text(a.metadata) == testutil::read_text(b.metadata));

    const SynthFiles c = generate_synthetic(2, 2, 8, dir.sub("c"));
    CHECK(testutil::read_text(a.consumption) != testutil::read_text(c.consumption));
}

TEST_CASE("synthetic corpus has the expected shape and signal") {
    testutil::TempDir dir("ing");
    const std::string store_dir = testutil::make_corpus(dir, 2, 3, 5);
    OfflineStore store = OfflineStore::open(store_dir);
    // 2 households x 3 days x 24 hours.
    CHECK(store.table_rows("consumption") == 144);
    CHECK(store.table_rows("metadata") == 2);

    // Weekday/weekend consumption levels differ: the generator plants a
    // weekend offset, measured here over two weeks of one household.
    const std::string one = testutil::make_corpus(dir, 1, 14, 1);
    const ColumnTable t = OfflineStore::open(one).read_table("consumption");
    const Column* ts = t.find("timestamp");
    const Column* en = t.find("energy");
    double sum_we = 0, sum_wd = 0;
    int n_we = 0, n_wd = 0;
    for (size_t r = 0; r < t.n_rows; ++r) {
        const auto cal = calendar_features(ts->i64[r], -8.0, HolidaySet{});
        if (cal.is_weekend) { sum_we += en->f64[r]; ++n_we; }
        else { sum_wd += en->f64[r]; ++n_wd; }
    }
    REQUIRE(n_we > 0);
    REQUIRE(n_wd > 0);
    CHECK(std::abs(sum_we / n_we - sum_wd / n_wd) > 0.01);
}

TEST_CASE("multiple consumption files merge into one sorted table") {
    testutil::TempDir dir("ing");
    testutil::write_text(dir.sub("x.csv"),
                         "residential_id,date,hour,energy\n"
                         "b,2018-01-15,0,1.0\n"
                         "a,2018-01-15,1,2.0\n");
    testutil::write_text(dir.sub("y.csv"),
                         "residential_id,date,hour,energy\n"
                         "a,2018-01-15,0,3.0\n");
    OfflineStore store = fresh_store(dir, "s");
    const StorageStats st =
        ingest_consumption(store, {dir.sub("x.csv"), dir.sub("y.csv")}, zone());
    CHECK(st.rows_out == 3);
    const ColumnTable t = store.read_table("consumption");
    CHECK(t.find("residential_id")->str == std::vector<std::string>{"a", "a", "b"});
    CHECK(t.find("energy")->f64 == std::vector<double>{3.0, 2.0, 1.0});
}

TEST_SUITE_END();
