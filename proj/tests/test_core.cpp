#include <doctest.h>

#include <limits>

#include "shiftlab/core.hpp"
#include "shiftlab/rng.hpp"
#include "test_support.hpp"

using namespace shiftlab;

TEST_CASE("make_series basics") {
    TimeSeries s = make_series({1.0, 2.0, 3.0});
    CHECK(s.length() == 3);
    CHECK(s.at(1) == 1.0);
    CHECK(s.at(3) == 3.0);
}

TEST_CASE("make_series rejects empty input") {
    CHECK_THROWS_AS(make_series({}), Error);
    try {
        make_series({});
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EmptySeries);
    }
}

TEST_CASE("make_series rejects non-finite values with a 1-based index") {
    try {
        make_series({1.0, std::numeric_limits<double>::quiet_NaN()});
        FAIL("expected NonFiniteValue");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonFiniteValue);
        CHECK(std::string(e.what()).find("index 2") != std::string::npos);
    }
    CHECK_THROWS_AS(make_series({std::numeric_limits<double>::infinity()}), Error);
}

TEST_CASE("series date lookup") {
    TimeSeries s = make_series({1, 2, 3}, Date(2020, 3, 1));
    CHECK(s.date_of(1) == Date(2020, 3, 1));
    CHECK(s.date_of(3) == Date(2020, 3, 3));
}

TEST_CASE("date arithmetic and parsing") {
    Date d = Date::parse("2020-02-28");
    CHECK(d.plus_days(1) == Date(2020, 2, 29));  // leap year
    CHECK(d.plus_days(2) == Date(2020, 3, 1));
    CHECK(Date(2020, 3, 1).days_until(Date(2020, 3, 31)) == 30);
    CHECK(d.to_string() == "2020-02-28");
    CHECK_THROWS_AS(Date::parse("2020-13-01"), Error);
    CHECK_THROWS_AS(Date::parse("2019-02-29"), Error);
    CHECK_THROWS_AS(Date::parse("not-a-date"), Error);
}

TEST_CASE("segmentation validity") {
    Segmentation seg({4, 8}, 10);
    CHECK(seg.num_breaks() == 2);
    auto segments = seg.segments();
    REQUIRE(segments.size() == 3);
    CHECK(segments[0] == std::pair<int, int>{1, 4});
    CHECK(segments[1] == std::pair<int, int>{4, 8});
    CHECK(segments[2] == std::pair<int, int>{8, 11});

    CHECK_THROWS_AS(Segmentation({1}, 10), Error);   // break must be > 1
    CHECK_THROWS_AS(Segmentation({10}, 10), Error);  // break must be < T
    CHECK_THROWS_AS(Segmentation({5, 5}, 10), Error);
    CHECK_THROWS_AS(Segmentation({7, 3}, 10), Error);
}

TEST_CASE("segments partition 1..T for random valid segmentations") {
    auto gen = testsup::engine(20240817);
    for (int trial = 0; trial < 200; ++trial) {
        int T = 2 + static_cast<int>(rng::bounded(gen, 60));
        std::vector<int> breaks;
        for (int b = 2; b < T; ++b) {
            if (rng::uniform01(gen) < 0.3) breaks.push_back(b);
        }
        Segmentation seg(breaks, T);
        std::vector<int> covered(static_cast<std::size_t>(T) + 1, 0);
        for (auto [a, b] : seg.segments()) {
            CHECK(a < b);
            for (int t = a; t < b; ++t) covered[static_cast<std::size_t>(t)]++;
        }
        for (int t = 1; t <= T; ++t) CHECK(covered[static_cast<std::size_t>(t)] == 1);
    }
}

TEST_CASE("event record validation") {
    EventRecord e;
    e.date = Date(2020, 3, 15);
    e.attributes["age"] = "20-29";
    e.validate();

    EventRecord bad = e;
    bad.weight = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);

    EventRecord empty_level = e;
    empty_level.attributes["race"] = "";
    CHECK_THROWS_AS(empty_level.validate(), Error);
}

TEST_CASE("rng determinism and bounded draws") {
    auto g1 = rng::make_engine(rng::substream_seed(RngSeed{42}, 7));
    auto g2 = rng::make_engine(rng::substream_seed(RngSeed{42}, 7));
    for (int i = 0; i < 100; ++i) {
        CHECK(g1() == g2());
    }
    auto g3 = rng::make_engine(1);
    for (int i = 0; i < 1000; ++i) {
        auto v = rng::bounded(g3, 10);
        CHECK(v < 10);
    }
}
