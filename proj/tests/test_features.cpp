#include <doctest.h>

#include <cmath>
#include <random>

#include "featstore/features.hpp"
#include "featstore/timeutil.hpp"
#include "helpers.hpp"

using namespace featstore;

TEST_SUITE_BEGIN("features");

namespace {

std::vector<std::pair<int64_t, double>> hourly(int64_t start, const std::vector<double>& vals) {
    std::vector<std::pair<int64_t, double>> s;
    for (size_t i = 0; i < vals.size(); ++i) s.emplace_back(start + 3600 * int64_t(i), vals[i]);
    return s;
}

}  // namespace

TEST_CASE("rolling stats over a constant series") {
    const auto out = rolling_stats(hourly(0, std::vector<double>(12, 2.0)), 10);
    REQUIRE(out.size() == 12);
    for (int i = 0; i < 9; ++i) {
        CHECK_FALSE(out[i].complete);
        CHECK(out[i].window == i + 1);
    }
    for (int i = 9; i < 12; ++i) {
        CHECK(out[i].complete);
        CHECK(out[i].window == 10);
        CHECK(out[i].mean == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(out[i].std == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("rolling stats match a naive recomputation") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(0.0, 5.0);
    std::vector<double> vals(100);
    for (auto& v : vals) v = dist(rng);
    const auto out = rolling_stats(hourly(7200, vals), 10);
    REQUIRE(out.size() == 100);
    for (size_t i = 9; i < 100; ++i) {
        double sum = 0.0;
        for (size_t j = i - 9; j <= i; ++j) sum += vals[j];
        const double mean = sum / 10.0;
        double ss = 0.0;
        for (size_t j = i - 9; j <= i; ++j) ss += (vals[j] - mean) * (vals[j] - mean);
        CHECK(out[i].complete);
        CHECK(out[i].mean == doctest::Approx(mean).epsilon(1e-9));
        CHECK(out[i].std == doctest::Approx(std::sqrt(ss / 10.0)).epsilon(1e-9));
    }
}

TEST_CASE("a gap inside the window marks rows incomplete") {
    std::vector<std::pair<int64_t, double>> s = hourly(0, std::vector<double>(6, 1.0));
    auto tail = hourly(s.back().first + 7200, std::vector<double>(12, 1.0));  // 2 h hole
    s.insert(s.end(), tail.begin(), tail.end());
    const auto out = rolling_stats(s, 10);
    // Rows 6..14 have the gap inside their 10-row trailing window.
    for (int i = 6; i < 15; ++i) CHECK_FALSE(out[i].complete);
    CHECK(out[15].complete);
    CHECK(out[17].complete);
}

TEST_CASE("adding a constant shifts the mean and keeps the std") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 2.0);
    std::vector<double> vals(40);
    for (auto& v : vals) v = dist(rng);
    std::vector<double> shifted(vals);
    for (auto& v : shifted) v += 100.0;
    const auto a = rolling_stats(hourly(0, vals), 10);
    const auto b = rolling_stats(hourly(0, shifted), 10);
    for (size_t i = 9; i < vals.size(); ++i) {
        CHECK(b[i].mean == doctest::Approx(a[i].mean + 100.0).epsilon(1e-9));
        CHECK(b[i].std == doctest::Approx(a[i].std).epsilon(1e-7));
    }
}

TEST_CASE("time features track the local clock") {
    // Local midnight at UTC-8 is 08:00Z.
    const int64_t jan2_midnight = timeutil::to_epoch({2018, 1, 2, 8, 0, 0});
    CHECK(time_features(jan2_midnight, -8.0).day_percent == doctest::Approx(0.0));
    const int64_t jan2_noon = timeutil::to_epoch({2018, 1, 2, 20, 0, 0});
    CHECK(time_features(jan2_noon, -8.0).day_percent == doctest::Approx(0.5));

    // July 2 is day index 182 of a non-leap year, 183 of a leap year.
    const int64_t jul2_2018 = timeutil::to_epoch({2018, 7, 2, 8, 0, 0});
    CHECK(time_features(jul2_2018, -8.0).year_percent == doctest::Approx(182.0 / 365.0));
    const int64_t jul2_2016 = timeutil::to_epoch({2016, 7, 2, 8, 0, 0});
    CHECK(time_features(jul2_2016, -8.0).year_percent == doctest::Approx(183.0 / 366.0));
}

TEST_CASE("day percent is periodic with a 24 hour shift") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int64_t> dist(0, 2'000'000'000);
    for (int i = 0; i < 300; ++i) {
        const int64_t t = dist(rng);
        const auto a = time_features(t, -8.0);
        const auto b = time_features(t + 86400, -8.0);
        CHECK(b.day_percent == doctest::Approx(a.day_percent).epsilon(1e-9));
    }
}

TEST_CASE("calendar features resolve holidays and weekends in local time") {
    const HolidaySet& holidays = builtin_bc_holidays();

    // 2018-01-01 (Monday) is a statutory holiday.
    const auto newyear = calendar_features(timeutil::to_epoch({2018, 1, 1, 8, 0, 0}),
                                           -8.0, holidays);
    CHECK(newyear.is_holiday);
    CHECK(newyear.weekday == 0);
    CHECK_FALSE(newyear.is_weekend);

    // Still Dec 31 local time one hour earlier.
    const auto before = calendar_features(timeutil::to_epoch({2018, 1, 1, 7, 0, 0}),
                                          -8.0, holidays);
    CHECK_FALSE(before.is_holiday);
    CHECK(before.weekday == 6);
    CHECK(before.is_weekend);

    // 2018-01-06 is a Saturday; 2018-01-03 a plain Wednesday.
    const auto sat = calendar_features(timeutil::to_epoch({2018, 1, 6, 12, 0, 0}),
                                       -8.0, holidays);
    CHECK(sat.weekday == 5);
    CHECK(sat.is_weekend);
    const auto wed = calendar_features(timeutil::to_epoch({2018, 1, 3, 12, 0, 0}),
                                       -8.0, holidays);
    CHECK_FALSE(wed.is_holiday);
    CHECK(wed.weekday == 2);
    CHECK_FALSE(wed.is_weekend);
}

TEST_CASE("builtin calendar matches the shipped data file") {
    const HolidaySet from_file = load_holidays(std::string(FEATSTORE_DATA_DIR) +
                                               "/holidays/bc.txt");
    CHECK(builtin_bc_holidays() == from_file);
    CHECK(from_file.size() > 20);
}

TEST_CASE("load_holidays skips comments and blank lines") {
    testutil::TempDir dir("hol");
    testutil::write_text(dir.sub("cal.txt"),
                         "# regional calendar\n"
                         "\n"
                         "2018-01-01\n"
                         "2018-12-25\n");
    const HolidaySet h = load_holidays(dir.sub("cal.txt"));
    CHECK(h == HolidaySet{20180101, 20181225});
}

TEST_CASE("category encoder assigns dense first-seen codes") {
    CategoryEncoder enc;
    CHECK(enc.encode("facing", "south") == 0);
    CHECK(enc.encode("facing", "north") == 1);
    CHECK(enc.encode("facing", "south") == 0);
    CHECK(enc.encode("region", "YVR") == 0);

    CHECK(enc.lookup("facing", "north") == 1);
    CHECK(enc.lookup("facing", "east") == -1);
    CHECK(enc.lookup("house_type", "duplex") == -1);

    REQUIRE(enc.decode("facing", 1) != nullptr);
    CHECK(*enc.decode("facing", 1) == "north");
    CHECK(enc.decode("facing", 5) == nullptr);

    const CategoryEncoder back = CategoryEncoder::from_json(enc.to_json());
    CHECK(back.values_in_order == enc.values_in_order);
    CHECK(back.lookup("region", "YVR") == 0);
}

TEST_SUITE_END();
