#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "cdcnn/eval.hpp"

using namespace cdcnn;
using eval::compute_metrics;

TEST_CASE("perfect predictions") {
    std::vector<double> pred{0.9, 0.1, 0.8, 0.2};
    std::vector<double> labels{1, 0, 1, 0};
    auto m = compute_metrics(pred, labels, 0.5);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.tp == 2);
    CHECK(m.tn == 2);
    CHECK(m.fp == 0);
    CHECK(m.fn == 0);
}

TEST_CASE("one of each confusion cell") {
    // tp, fp, fn, tn = 1 each: P = R = F1 = 0.5.
    std::vector<double> pred{0.9, 0.9, 0.1, 0.1};
    std::vector<double> labels{1, 0, 1, 0};
    auto m = compute_metrics(pred, labels, 0.5);
    CHECK(m.tp == 1);
    CHECK(m.fp == 1);
    CHECK(m.fn == 1);
    CHECK(m.tn == 1);
    CHECK(m.precision == doctest::Approx(0.5));
    CHECK(m.recall == doctest::Approx(0.5));
    CHECK(m.f1 == doctest::Approx(0.5));
}

TEST_CASE("counts always sum to the sample count") {
    std::vector<double> pred{0.1, 0.6, 0.5, 0.49, 0.51};
    std::vector<double> labels{0, 1, 1, 0, 0};
    auto m = compute_metrics(pred, labels, 0.5);
    CHECK(m.tp + m.fp + m.tn + m.fn == pred.size());
}

TEST_CASE("no positive predictions: precision 0 by convention, f1 0") {
    std::vector<double> pred{0.1, 0.2, 0.3};
    std::vector<double> labels{1, 1, 0};
    auto m = compute_metrics(pred, labels, 0.5);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
}

TEST_CASE("no true positives among positive predictions") {
    std::vector<double> pred{0.9, 0.9};
    std::vector<double> labels{0, 0};
    auto m = compute_metrics(pred, labels, 0.5);
    CHECK(m.precision == 0.0);
    CHECK(m.f1 == 0.0);
}

TEST_CASE("f1 is the harmonic mean when P + R > 0") {
    // P = 1/2, R = 1/3 -> F1 = 2PR/(P+R) = 0.4
    std::vector<double> pred{0.9, 0.9, 0.1, 0.1, 0.1};
    std::vector<double> labels{1, 0, 1, 1, 0};
    auto m = compute_metrics(pred, labels, 0.5);
    CHECK(m.precision == doctest::Approx(0.5));
    CHECK(m.recall == doctest::Approx(1.0 / 3.0));
    CHECK(m.f1 == doctest::Approx(0.4));
}

TEST_CASE("metrics reject empty and mismatched input") {
    std::vector<double> empty;
    CHECK_THROWS_AS(compute_metrics(empty, empty, 0.5), std::invalid_argument);
    std::vector<double> a{0.5};
    std::vector<double> b{1, 0};
    CHECK_THROWS_AS(compute_metrics(a, b, 0.5), std::invalid_argument);
}

TEST_CASE("majority baseline f1") {
    // p = 2/4: all-positive predictor scores 2p/(1+p) = 2/3.
    std::vector<double> labels{1, 1, 0, 0};
    CHECK(eval::majority_baseline_f1(labels) == doctest::Approx(2.0 / 3.0));
    std::vector<double> all_neg{0, 0, 0};
    CHECK(eval::majority_baseline_f1(all_neg) == 0.0);
}

TEST_CASE("calibration bins partition outputs and conserve counts") {
    std::vector<double> outputs{0.05, 0.15, 0.25, 0.55, 0.85, 0.95, 0.2, 0.8};
    std::vector<std::uint8_t> leaving{0, 1, 0, 1, 1, 1, 0, 0};
    auto table = eval::calibration_table(outputs, leaving);
    CHECK(table.total == outputs.size());
    std::size_t count_sum = 0, leave_sum = 0;
    for (const auto& b : table.bins) {
        count_sum += b.count;
        leave_sum += b.leaving;
        CHECK(b.hi > b.lo);
    }
    CHECK(count_sum == outputs.size());
    CHECK(leave_sum == 4);
    CHECK(table.bins[0].count == 2);  // 0.05, 0.15
    CHECK(table.bins[1].count == 2);  // 0.25, 0.2
    CHECK(table.bins[2].count == 1);  // 0.55
    CHECK(table.bins[3].count == 0);
    CHECK(table.bins[4].count == 3);  // 0.85, 0.95, 0.8
}

TEST_CASE("constant outputs collapse into one bin") {
    std::vector<double> outputs(10, 0.1);
    std::vector<std::uint8_t> leaving(10, 0);
    auto table = eval::calibration_table(outputs, leaving);
    CHECK(table.bins[0].count == 10);
    for (std::size_t b = 1; b < table.bins.size(); ++b)
        CHECK(table.bins[b].count == 0);
}

TEST_CASE("boundary 1.0 lands in the top bin") {
    std::vector<double> outputs{1.0, 0.0, 0.2, 0.4, 0.6, 0.8};
    std::vector<std::uint8_t> leaving(6, 0);
    auto table = eval::calibration_table(outputs, leaving);
    CHECK(table.bins[4].count == 2);  // 1.0 and 0.8
    CHECK(table.bins[0].count == 1);  // 0.0
    CHECK(table.bins[1].count == 1);
    CHECK(table.bins[2].count == 1);
    CHECK(table.bins[3].count == 1);
}

TEST_CASE("calibration rejects outputs outside [0, 1]") {
    std::vector<double> outputs{1.5};
    std::vector<std::uint8_t> leaving{0};
    CHECK_THROWS_AS(eval::calibration_table(outputs, leaving),
                    std::invalid_argument);
}
