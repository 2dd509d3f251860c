#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "featstore/bench.hpp"
#include "featstore/errors.hpp"
#include "featstore/store.hpp"
#include "helpers.hpp"

using namespace featstore;

TEST_SUITE_BEGIN("bench");

namespace {

void check_same_matrix(const TrainingMatrix& a, const TrainingMatrix& b) {
    REQUIRE(a.columns == b.columns);
    REQUIRE(a.n_rows() == b.n_rows());
    REQUIRE(a.row_entities == b.row_entities);
    REQUIRE(a.row_timestamps == b.row_timestamps);
    REQUIRE(a.missing == b.missing);
    for (size_t i = 0; i < a.data.size(); ++i) {
        if (a.missing[i]) continue;  // masked payloads are never compared
        REQUIRE(a.data[i] == b.data[i]);
    }
}

}  // namespace

TEST_CASE("canonical columns follow the registry order") {
    const auto& cols = canonical_feature_columns();
    CHECK(cols.size() == 33);
    CHECK(cols[0] == "energy");
    CHECK(cols[1] == "energy_mean");
    CHECK(cols[2] == "energy_std");
    CHECK(cols[3] == "temperature");
    CHECK(cols.back() == "GEOTH");
    const std::set<std::string> unique(cols.begin(), cols.end());
    CHECK(unique.size() == cols.size());
}

TEST_CASE("all three strategies produce the same enriched subset") {
    testutil::TempDir dir("bench");
    const std::string store_dir = testutil::make_corpus(dir, 4, 15, 77);

    SubsetQuery q;
    q.entity_ids = {"house1", "house3"};
    q.full_range = true;

    auto [eager, te] = run_eager(store_dir, q);
    auto [part, tp] = run_partitioned(store_dir, q, 2);
    auto [lazy, tl] = run_lazy(store_dir, testutil::registry_file(), q);

    eager.sort_canonical();
    part.sort_canonical();
    lazy.sort_canonical();

    CHECK(eager.n_rows() == 2 * 15 * 24);
    check_same_matrix(eager, part);
    check_same_matrix(eager, lazy);

    CHECK(te.strategy == "eager");
    CHECK(tp.strategy == "partitioned");
    CHECK(tl.strategy == "lazy");
    CHECK(tp.threads == 2);

    // rows_joined: the intermediate table for the up-front strategies, the
    // retrieved subset for the lazy one.
    CHECK(te.rows_joined == 4 * 15 * 24);
    CHECK(tp.rows_joined == 4 * 15 * 24);
    CHECK(tl.rows_joined == 2 * 15 * 24);
    CHECK(te.t_join_enrich > 0.0);
    CHECK(tl.t_obtain_subset > 0.0);
}

TEST_CASE("partitioned strategy requires at least two threads") {
    testutil::TempDir dir("bench");
    const std::string store_dir = testutil::make_corpus(dir, 1, 2, 5);
    SubsetQuery q;
    q.all_entities = true;
    q.full_range = true;
    CHECK_THROWS_WITH_AS((void)run_partitioned(store_dir, q, 1),
                         doctest::Contains("InvalidArgument"), Error);
}

TEST_CASE("an empty selection yields a zero-row matrix with timings") {
    testutil::TempDir dir("bench");
    const std::string store_dir = testutil::make_corpus(dir, 2, 2, 9);
    SubsetQuery q;  // no ids, all_entities=false: selects nothing
    q.full_range = true;

    auto [eager, te] = run_eager(store_dir, q);
    auto [lazy, tl] = run_lazy(store_dir, testutil::registry_file(), q);
    CHECK(eager.n_rows() == 0);
    CHECK(lazy.n_rows() == 0);
    CHECK(eager.columns == canonical_feature_columns());
    CHECK(te.rows_joined == 2 * 2 * 24);  // the intermediate is still built
    CHECK(tl.rows_joined == 0);
    CHECK(te.t_join_enrich > 0.0);
}

TEST_CASE("the eager intermediate is byte-identical across runs") {
    testutil::TempDir dir("bench");
    const std::string store_dir = testutil::make_corpus(dir, 2, 3, 13);
    SubsetQuery q;
    q.all_entities = true;
    q.full_range = true;

    (void)run_eager(store_dir, q);
    const std::string first = testutil::read_text(store_dir + "/intermediate_eager.parquet");
    REQUIRE_FALSE(first.empty());
    (void)run_eager(store_dir, q);
    CHECK(testutil::read_text(store_dir + "/intermediate_eager.parquet") == first);
}

TEST_CASE("a time window narrows every strategy identically") {
    testutil::TempDir dir("bench");
    const std::string store_dir = testutil::make_corpus(dir, 2, 4, 3);
    OfflineStore store = OfflineStore::open(store_dir);
    const ColumnTable consumption = store.read_table("consumption");
    const int64_t lo = consumption.find("timestamp")->i64[0];

    SubsetQuery q;
    q.all_entities = true;
    q.t0 = lo + 24 * 3600;
    q.t1 = lo + 48 * 3600 - 1;

    auto [eager, te] = run_eager(store_dir, q);
    auto [lazy, tl] = run_lazy(store_dir, testutil::registry_file(), q);
    eager.sort_canonical();
    lazy.sort_canonical();
    CHECK(eager.n_rows() == 2 * 24);
    check_same_matrix(eager, lazy);
    for (int64_t t : eager.row_timestamps) {
        CHECK(t >= q.t0);
        CHECK(t <= q.t1);
    }
}

TEST_CASE("inverted time ranges are rejected") {
    testutil::TempDir dir("bench");
    const std::string store_dir = testutil::make_corpus(dir, 1, 2, 3);
    SubsetQuery q;
    q.all_entities = true;
    q.t0 = 2'000'000'000;
    q.t1 = 1'999'999'999;  // t1 < t0
    CHECK_THROWS_WITH_AS((void)run_eager(store_dir, q),
                         doctest::Contains("EmptyRange"), Error);
    CHECK_THROWS_WITH_AS((void)run_lazy(store_dir, testutil::registry_file(), q),
                         doctest::Contains("EmptyRange"), Error);
}

TEST_CASE("medians drop the first repetition of each strategy") {
    BenchReport rep;
    rep.repetitions = 4;
    const auto row = [](const std::string& s, double join, double subset) {
        BenchTimings t;
        t.strategy = s;
        t.t_process = 1.0;
        t.t_join_enrich = join;
        t.t_obtain_subset = subset;
        t.threads = 1;
        t.rows_joined = 10;
        return t;
    };
    // First repetition (100.0) must not influence the median; the three
    // remaining values {10, 1, 3} have median 3; even-count medians use the
    // midpoint, checked via t_obtain_subset over {10, 1, 3} -> drop-first
    // leaves {1, 3} -> 2.0.
    rep.runs = {row("eager", 100.0, 5.0), row("eager", 10.0, 10.0),
                row("eager", 1.0, 1.0), row("eager", 3.0, 3.0),
                row("lazy", 9.0, 9.0), row("lazy", 7.0, 7.0)};

    const auto med = rep.medians();
    REQUIRE(med.size() == 2);
    CHECK(med[0].strategy == "eager");
    CHECK(med[0].t_join_enrich == 3.0);
    CHECK(med[0].t_obtain_subset == 3.0);
    // lazy: drop-first leaves {7} -> 7.
    CHECK(med[1].strategy == "lazy");
    CHECK(med[1].t_join_enrich == 7.0);

    BenchReport even;
    even.repetitions = 3;
    even.runs = {row("eager", 5.0, 10.0), row("eager", 5.0, 1.0), row("eager", 5.0, 3.0)};
    CHECK(even.medians()[0].t_obtain_subset == 2.0);
}

TEST_CASE("run_benchmark exercises every strategy the requested number of times") {
    testutil::TempDir dir("bench");
    BenchConfig cfg;
    cfg.store_dir = testutil::make_corpus(dir, 2, 3, 45);
    cfg.registry_file = testutil::registry_file();
    cfg.repetitions = 3;
    cfg.threads = 2;
    cfg.query.all_entities = true;
    cfg.query.full_range = true;

    const BenchReport rep = run_benchmark(cfg);
    CHECK(rep.repetitions == 3);
    CHECK(rep.runs.size() == 9);
    CHECK_FALSE(rep.environment.empty());
    int eager = 0, part = 0, lazy = 0;
    for (const auto& t : rep.runs) {
        if (t.strategy == "eager") ++eager;
        if (t.strategy == "partitioned") ++part;
        if (t.strategy == "lazy") ++lazy;
    }
    CHECK(eager == 3);
    CHECK(part == 3);
    CHECK(lazy == 3);

    const auto med = rep.medians();
    REQUIRE(med.size() == 3);

    const std::string csv = bench_report_csv(rep);
    std::istringstream ss(csv);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "strategy,t_process,t_join_enrich,t_obtain_subset,threads,rows_joined");
    int lines = 0;
    for (std::string l; std::getline(ss, l);) ++lines;
    CHECK(lines == 3);
    CHECK(bench_report_text(rep).find("lazy") != std::string::npos);

    BenchConfig bad = cfg;
    bad.repetitions = 2;
    CHECK_THROWS_WITH_AS((void)run_benchmark(bad), doctest::Contains("InvalidArgument"), Error);
}

TEST_SUITE_END();
