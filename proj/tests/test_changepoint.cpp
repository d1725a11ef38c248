#include <doctest.h>

#include <cmath>

#include "shiftlab/changepoint.hpp"
#include "test_support.hpp"

using namespace shiftlab;

namespace {

TimeSeries step_series() {
    std::vector<double> v;
    for (int i = 0; i < 5; ++i) v.push_back(0.0);
    for (int i = 0; i < 5; ++i) v.push_back(10.0);
    return make_series(v);
}

}  // namespace

TEST_CASE("evaluate_segmentation on a constant series") {
    TimeSeries s = make_series(std::vector<double>(10, 5.0));
    CHECK(evaluate_segmentation(s, Segmentation({}, 10), CostModel::l2(), 1.0) == 0.0);
    // a needless break pays exactly beta
    CHECK(evaluate_segmentation(s, Segmentation({6}, 10), CostModel::l2(), 1.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evaluate_segmentation hand example") {
    TimeSeries s = step_series();
    CHECK(evaluate_segmentation(s, Segmentation({6}, 10), CostModel::l2(), 2.0) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(evaluate_segmentation(s, Segmentation({}, 10), CostModel::l2(), 2.0) ==
          doctest::Approx(250.0).epsilon(1e-12));
}

TEST_CASE("evaluate_segmentation rejects mismatched lengths") {
    TimeSeries s = step_series();
    CHECK_THROWS_AS(evaluate_segmentation(s, Segmentation({3}, 12), CostModel::l2(), 1.0),
                    Error);
}

TEST_CASE("constant series yields no breaks for any positive penalty") {
    TimeSeries s = make_series(std::vector<double>(30, 3.25));
    for (double beta : {1e-6, 0.5, 3.0, 100.0}) {
        auto r = detect_exact(s, CostModel::l2(), PenaltySpec::manual(beta), 2);
        CHECK(r.segmentation.num_breaks() == 0);
        CHECK(r.objective == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("noiseless step recovers the single break") {
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) v.push_back(0.0);
    for (int i = 0; i < 20; ++i) v.push_back(10.0);
    auto r = detect_exact(make_series(v), CostModel::l2(), PenaltySpec::manual(5.0), 2);
    REQUIRE(r.segmentation.num_breaks() == 1);
    CHECK(r.segmentation.breaks()[0] == 21);
}

TEST_CASE("series too short raises; short-but-valid returns K = 0") {
    TimeSeries tiny = make_series({1.0});
    CHECK_THROWS_AS(detect_exact(tiny, CostModel::normal_meanvar(),
                                 PenaltySpec::manual(1.0), 2),
                    Error);
    // T < 2*min_seg_len: no admissible break, single segment
    TimeSeries three = make_series({5.0, 9.0, 1.0});
    auto r = detect_exact(three, CostModel::l2(), PenaltySpec::manual(1.0), 2);
    CHECK(r.segmentation.num_breaks() == 0);
    CHECK(r.per_segment_costs.size() == 1);
}

TEST_CASE("exact solver matches the exhaustive oracle on random instances") {
    auto gen = testsup::engine(9001);
    int checked = 0;
    for (int trial = 0; trial < 250; ++trial) {
        int T = 4 + static_cast<int>(rng::bounded(gen, 11));  // 4..14
        int pick = static_cast<int>(rng::bounded(gen, 3));
        CostModel model = pick == 0   ? CostModel::l2()
                          : pick == 1 ? CostModel::normal_meanvar()
                                      : CostModel::poisson();
        int min_seg_len = model.min_segment_len() +
                          static_cast<int>(rng::bounded(gen, 2));  // model min or +1
        if (T < min_seg_len) continue;
        std::vector<double> v(static_cast<std::size_t>(T));
        if (model.kind == CostKind::Poisson) {
            for (auto& x : v) x = static_cast<double>(testsup::poisson(gen, 4.0));
        } else {
            for (auto& x : v) x = testsup::normal(gen, 0.0, 2.0);
        }
        double beta = 0.1 + 9.9 * rng::uniform01(gen);
        TimeSeries s = make_series(v);

        auto oracle = testsup::exhaustive_detect(s, model, beta, min_seg_len);
        auto got = detect_exact(s, model, PenaltySpec::manual(beta), min_seg_len);
        CHECK(got.objective ==
              doctest::Approx(oracle.objective).epsilon(1e-9));
        CHECK(got.segmentation.breaks() == oracle.breaks);
        ++checked;
    }
    CHECK(checked > 200);
}

TEST_CASE("pelt equals exact on random series") {
    auto gen = testsup::engine(4242);
    for (int trial = 0; trial < 60; ++trial) {
        int T = 20 + static_cast<int>(rng::bounded(gen, 181));  // 20..200
        bool use_normal = rng::uniform01(gen) < 0.5;
        CostModel model = use_normal ? CostModel::normal_meanvar() : CostModel::l2();
        std::vector<double> v(static_cast<std::size_t>(T));
        // occasional genuine shifts so K > 0 paths get exercised
        double mean = 0.0;
        for (auto& x : v) {
            if (rng::uniform01(gen) < 0.03) mean += testsup::normal(gen, 0.0, 6.0);
            x = testsup::normal(gen, mean, 1.0);
        }
        double beta = 0.5 + 20.0 * rng::uniform01(gen);
        TimeSeries s = make_series(v);
        auto exact = detect_exact(s, model, PenaltySpec::manual(beta), 2);
        auto pelt = detect_pelt(s, model, PenaltySpec::manual(beta), 2);
        CHECK(pelt.objective == doctest::Approx(exact.objective).epsilon(1e-9));
        CHECK(pelt.segmentation.breaks() == exact.segmentation.breaks());
    }
}

TEST_CASE("pelt prunes aggressively on a long planted series") {
    auto gen = testsup::engine(2718);
    std::vector<double> means = {0.0, 6.0, -3.0, 5.0, 0.0, 8.0};
    std::vector<int> lengths(6, 833);  // T = 4998
    TimeSeries s = make_series(testsup::piecewise_series(gen, means, lengths, 1.0));
    auto pelt = detect_pelt(s, CostModel::l2(), PenaltySpec::bic(), 2);
    auto exact = detect_exact(s, CostModel::l2(), PenaltySpec::bic(), 2);
    CHECK(pelt.objective == doctest::Approx(exact.objective).epsilon(1e-9));
    CHECK(pelt.segmentation.breaks() == exact.segmentation.breaks());
    // every planted shift is found (BIC may admit an occasional extra break)
    for (int truth : {834, 1667, 2500, 3333, 4166}) {
        bool hit = false;
        for (int b : pelt.segmentation.breaks()) {
            if (std::abs(b - truth) <= 2) hit = true;
        }
        CHECK(hit);
    }
    CHECK(pelt.segmentation.num_breaks() <= 12);
    CHECK(pelt.mean_candidates < static_cast<double>(s.length()) / 10.0);
}

TEST_CASE("objective equals segment costs plus beta * K") {
    auto gen = testsup::engine(5151);
    for (int trial = 0; trial < 30; ++trial) {
        TimeSeries s = make_series(testsup::normal_vector(gen, 80, 0.0, 2.0));
        double beta = 0.2 + 5.0 * rng::uniform01(gen);
        auto r = detect_pelt(s, CostModel::l2(), PenaltySpec::manual(beta), 2);
        double total = 0.0;
        for (double c : r.per_segment_costs) total += c;
        total += beta * r.segmentation.num_breaks();
        CHECK(r.objective == doctest::Approx(total).epsilon(1e-9));
        CHECK(r.beta == beta);
        for (auto [a, b] : r.segmentation.segments()) CHECK(b - a >= 2);
    }
}

TEST_CASE("optimal K is non-increasing in beta") {
    auto gen = testsup::engine(31337);
    for (int series_i = 0; series_i < 5; ++series_i) {
        std::vector<double> means = {0.0, 4.0, -2.0, 3.0};
        std::vector<int> lengths = {25, 25, 25, 25};
        TimeSeries s = make_series(testsup::piecewise_series(gen, means, lengths, 1.0));
        int prev_k = s.length();
        for (int i = 0; i < 25; ++i) {
            double beta = std::pow(10.0, -2.0 + 6.0 * i / 24.0);
            auto r = detect_exact(s, CostModel::l2(), PenaltySpec::manual(beta), 2);
            CHECK(r.segmentation.num_breaks() <= prev_k);
            prev_k = r.segmentation.num_breaks();
        }
        CHECK(prev_k == 0);  // beta = 1e4 swamps every shift here
    }
}

TEST_CASE("beta to zero with unit min segment takes every admissible break") {
    TimeSeries s = make_series({1.0, 7.0, 3.0, 9.0, 4.0, 11.0, 2.0});
    auto r = detect_exact(s, CostModel::l2(), PenaltySpec::manual(1e-9), 1);
    // breaks can sit at 2..T-1; the last segment keeps two points
    std::vector<int> expect = {2, 3, 4, 5, 6};
    CHECK(r.segmentation.breaks() == expect);
}

TEST_CASE("determinism: repeated runs give identical results") {
    auto gen = testsup::engine(8080);
    TimeSeries s = make_series(testsup::normal_vector(gen, 120, 0.0, 1.0));
    auto a = detect_pelt(s, CostModel::l2(), PenaltySpec::bic(), 2);
    auto b = detect_pelt(s, CostModel::l2(), PenaltySpec::bic(), 2);
    CHECK(a.segmentation.breaks() == b.segmentation.breaks());
    CHECK(a.objective == b.objective);
}

TEST_CASE("default_penalty formulas") {
    // NormalMeanVar: p = 2, scale = 1
    auto gen = testsup::engine(606);
    TimeSeries s = make_series(testsup::normal_vector(gen, 100, 0.0, 1.0));
    CHECK(default_penalty(s, CostModel::normal_meanvar(), PenaltyRule::BIC) ==
          doctest::Approx(2.0 * std::log(100.0)).epsilon(1e-12));
    CHECK(default_penalty(s, CostModel::poisson(), PenaltyRule::AIC) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(default_penalty(make_series({1.0}), CostModel::l2(), PenaltyRule::BIC),
                    Error);
}

TEST_CASE("L2 BIC penalty tracks log T on unit-variance noise") {
    auto gen = testsup::engine(112233);
    double total = 0.0;
    const int reps = 500;
    for (int i = 0; i < reps; ++i) {
        TimeSeries s = make_series(testsup::normal_vector(gen, 100, 0.0, 1.0));
        total += default_penalty(s, CostModel::l2(), PenaltyRule::BIC);
    }
    double mean = total / reps;
    CHECK(mean == doctest::Approx(std::log(100.0)).epsilon(0.15));
}

TEST_CASE("manual penalty must be positive") {
    CHECK_THROWS_AS(PenaltySpec::manual(0.0), Error);
    CHECK_THROWS_AS(PenaltySpec::manual(-3.0), Error);
}
