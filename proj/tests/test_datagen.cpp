#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"

#include "cdcnn/datagen.hpp"
#include "cdcnn/eval.hpp"

using namespace cdcnn;
using namespace cdcnn::datagen;
namespace fs = std::filesystem;

namespace {

GenConfig small_gen(std::uint64_t seed = 11) {
    GenConfig g;
    g.grid_rows = 12;
    g.grid_cols = 12;
    g.n_residents = 200;
    g.labeled_fraction = 0.2;
    g.days = 3;
    g.downtown_center = {5, 5};
    g.ring_radius = 3;
    g.industrial_zones = {{1, 1}, {10, 10}};
    g.seed = seed;
    return g;
}

void check_sample_invariants(const GenConfig& g, const cnc::Sample& s,
                             const std::vector<std::uint8_t>& coverage) {
    REQUIRE(s.loc.shape() == std::vector<std::size_t>{2, g.grid_rows, g.grid_cols});
    REQUIRE(s.com.shape() == std::vector<std::size_t>{2, kHoursPerDay});
    for (double v : s.loc.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    for (double v : s.com.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // Per-period zone sums stay at or below one.
    const std::size_t zones = g.zone_count();
    double home = 0.0, work = 0.0;
    for (std::size_t z = 0; z < zones; ++z) {
        home += s.loc[z];
        work += s.loc[zones + z];
    }
    CHECK(home <= 1.0 + 1e-9);
    CHECK(work <= 1.0 + 1e-9);
    // Communication rows sum to one or are entirely zero.
    for (std::size_t row = 0; row < 2; ++row) {
        double sum = 0.0;
        for (std::size_t h = 0; h < kHoursPerDay; ++h) sum += s.com.at(row, h);
        if (sum > 0.0) CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    // Uncovered zones never appear.
    for (std::size_t z = 0; z < zones; ++z) {
        if (!coverage[z]) {
            CHECK(s.loc[z] == 0.0);
            CHECK(s.loc[zones + z] == 0.0);
        }
    }
}

}  // namespace

TEST_CASE("generated features satisfy bounds, sums and coverage invariants") {
    auto g = small_gen();
    auto coverage = make_coverage(g);
    auto ds = gen_dataset(g);
    for (const auto& s : ds.labeled)
        check_sample_invariants(g, {s.loc, s.com}, coverage);
    for (const auto& s : ds.pool) check_sample_invariants(g, s, coverage);
    for (const auto& s : ds.validation)
        check_sample_invariants(g, {s.loc, s.com}, coverage);
}

TEST_CASE("coverage mask has the configured density and truth zones are covered") {
    auto g = small_gen();
    auto coverage = make_coverage(g);
    std::size_t covered = 0;
    for (auto c : coverage) covered += c;
    CHECK(covered ==
          static_cast<std::size_t>(std::llround(g.station_coverage * g.zone_count())));

    auto ds = gen_dataset(g);
    auto check_truth = [&](const ResidentTruth& t) {
        CHECK(t.home_zone.row < g.grid_rows);
        CHECK(t.home_zone.col < g.grid_cols);
        CHECK(coverage[t.home_zone.row * g.grid_cols + t.home_zone.col]);
        CHECK(coverage[t.work_zone.row * g.grid_cols + t.work_zone.col]);
        CHECK(t.call_peak_hour < kHoursPerDay);
        CHECK(t.sms_peak_hour < kHoursPerDay);
    };
    for (const auto& t : ds.labeled_truths) check_truth(t);
    for (const auto& t : ds.pool_truths) check_truth(t);
    for (const auto& t : ds.validation_truths) check_truth(t);
}

TEST_CASE("splits are disjoint, sized by config, and the labeled split is stratified") {
    auto g = small_gen();
    auto ds = gen_dataset(g);
    const std::size_t want_labeled =
        static_cast<std::size_t>(std::llround(g.labeled_fraction * g.n_residents));
    CHECK(ds.labeled.size() == want_labeled);
    CHECK(ds.pool.size() == g.n_residents - want_labeled);
    CHECK(ds.validation.size() ==
          static_cast<std::size_t>(std::llround(g.val_fraction * g.n_residents)));

    // Stratification: labeled positives match the migrant prior to one sample.
    std::size_t pos = 0;
    for (const auto& s : ds.labeled) pos += s.label > 0.5;
    const double want_pos = g.migrant_prior * static_cast<double>(want_labeled);
    CHECK(std::abs(static_cast<double>(pos) - want_pos) <= 1.0);

    // Samples are distinct across splits (feature tensors differ).
    std::set<std::vector<double>> seen;
    auto key = [](const Tensor& loc, const Tensor& com) {
        std::vector<double> k(loc.values().begin(), loc.values().end());
        k.insert(k.end(), com.values().begin(), com.values().end());
        return k;
    };
    for (const auto& s : ds.labeled) CHECK(seen.insert(key(s.loc, s.com)).second);
    for (const auto& s : ds.pool) CHECK(seen.insert(key(s.loc, s.com)).second);
    for (const auto& s : ds.validation)
        CHECK(seen.insert(key(s.loc, s.com)).second);
}

TEST_CASE("noise 0, one day puts all presence mass on the truth zones") {
    auto g = small_gen();
    g.noise_level = 0.0;
    g.days = 1;
    g.station_coverage = 1.0;
    auto coverage = make_coverage(g);
    const std::size_t zones = g.zone_count();
    for (std::size_t i = 0; i < 10; ++i) {
        auto truth = gen_truth(g, coverage, i, i % 2 == 0);
        auto s = gen_features(g, coverage, i, truth);
        const std::size_t home = truth.home_zone.row * g.grid_cols + truth.home_zone.col;
        const std::size_t work = truth.work_zone.row * g.grid_cols + truth.work_zone.col;
        for (std::size_t z = 0; z < zones; ++z) {
            CHECK(s.loc[z] == (z == home ? 1.0 : 0.0));
            CHECK(s.loc[zones + z] == (z == work ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("generation is deterministic in the seed") {
    auto g = small_gen(77);
    auto a = gen_dataset(g);
    auto b = gen_dataset(g);
    CHECK(a == b);
    g.seed = 78;
    auto c = gen_dataset(g);
    CHECK(!(a == c));
}

TEST_CASE("labeled_fraction 1 yields an empty pool") {
    auto g = small_gen();
    g.labeled_fraction = 1.0;
    auto ds = gen_dataset(g);
    CHECK(ds.pool.empty());
    CHECK(ds.labeled.size() == g.n_residents);
}

TEST_CASE("too small a labeled split cannot stratify") {
    auto g = small_gen();
    g.labeled_fraction = 0.001;  // 0.2 residents, rounds below 2
    CHECK_THROWS_AS(gen_dataset(g), std::invalid_argument);
}

TEST_CASE("migrant call peaks trail native peaks by the configured shift") {
    auto g = small_gen();
    g.n_residents = 2000;
    g.peak_shift_hours = 2.0;
    auto coverage = make_coverage(g);
    auto mean_peak = [&](bool migrant) {
        double sum = 0.0;
        const std::size_t n = 1000;
        for (std::size_t i = 0; i < n; ++i) {
            auto truth = gen_truth(g, coverage, i + (migrant ? 100000 : 0), migrant);
            auto s = gen_features(g, coverage, i, truth);
            std::size_t arg = 0;
            for (std::size_t h = 1; h < kHoursPerDay; ++h)
                if (s.com.at(0, h) > s.com.at(0, arg)) arg = h;
            sum += static_cast<double>(arg);
        }
        return sum / static_cast<double>(n);
    };
    const double native = mean_peak(false);
    const double migrant = mean_peak(true);
    CHECK(migrant - native >= 1.0);
}

TEST_CASE("leaving rate increases with migrant-ness") {
    auto g = small_gen();
    g.n_residents = 1500;
    auto ds = gen_dataset(g);
    std::size_t mig = 0, mig_leave = 0, nat = 0, nat_leave = 0;
    auto tally = [&](const ResidentTruth& t) {
        if (t.is_migrant) {
            ++mig;
            mig_leave += t.leaving;
        } else {
            ++nat;
            nat_leave += t.leaving;
        }
    };
    for (const auto& t : ds.labeled_truths) tally(t);
    for (const auto& t : ds.pool_truths) tally(t);
    REQUIRE(mig > 0);
    REQUIRE(nat > 0);
    CHECK(static_cast<double>(mig_leave) / mig >
          static_cast<double>(nat_leave) / nat);
}

TEST_CASE("null-signal config erases class asymmetries in expectation") {
    GenConfig g = small_gen();
    g.n_residents = 600;
    g.ring_radius = 0;
    g.industrial_zones.clear();
    g.peak_shift_hours = 0.0;
    g.leaving_slope = 0.0;
    auto coverage = make_coverage(g);
    // Identical spatial priors: truths for the two classes at the same index
    // differ at most through the class-conditional streams, so compare
    // distributionally via mean peak hour.
    double mig_peak = 0.0, nat_peak = 0.0;
    const std::size_t n = 400;
    for (std::size_t i = 0; i < n; ++i) {
        mig_peak += static_cast<double>(gen_truth(g, coverage, i, true).call_peak_hour);
        nat_peak += static_cast<double>(gen_truth(g, coverage, i, false).call_peak_hour);
    }
    CHECK(std::abs(mig_peak - nat_peak) / static_cast<double>(n) < 0.5);
}

TEST_CASE("dataset file round-trips bitwise") {
    auto g = small_gen();
    auto ds = gen_dataset(g);
    const fs::path path =
        fs::temp_directory_path() /
        ("cdcnn_rt_" + std::to_string(std::random_device{}()) + ".cdds");
    export_dataset(ds, path);
    auto back = import_dataset(path);
    CHECK(back == ds);
    fs::remove(path);
}

TEST_CASE("malformed dataset files fail with the section named") {
    auto g = small_gen();
    g.n_residents = 60;
    g.labeled_fraction = 0.2;
    auto ds = gen_dataset(g);
    const fs::path path =
        fs::temp_directory_path() /
        ("cdcnn_bad_" + std::to_string(std::random_device{}()) + ".cdds");
    export_dataset(ds, path);

    SUBCASE("magic mismatch") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("NOPE", 4);
        f.close();
        CHECK_THROWS_WITH_AS(import_dataset(path), doctest::Contains("magic"),
                             std::runtime_error);
    }
    SUBCASE("bad version") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const char bytes[4] = {(char)0xFF, 0, 0, 0};
        f.write(bytes, 4);
        f.close();
        CHECK_THROWS_WITH_AS(import_dataset(path), doctest::Contains("version"),
                             std::runtime_error);
    }
    SUBCASE("truncated mid-record") {
        fs::resize_file(path, fs::file_size(path) - 9);
        CHECK_THROWS_WITH_AS(import_dataset(path), doctest::Contains("record"),
                             std::runtime_error);
    }
    SUBCASE("trailing garbage") {
        std::ofstream f(path, std::ios::app | std::ios::binary);
        f.put('x');
        f.close();
        CHECK_THROWS_WITH_AS(import_dataset(path), doctest::Contains("trailing"),
                             std::runtime_error);
    }
    SUBCASE("corrupt config block") {
        // The config JSON starts right after magic+version+length; smash it.
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(16);
        f.write("!!!!", 4);
        f.close();
        CHECK_THROWS_WITH_AS(import_dataset(path), doctest::Contains("config"),
                             std::runtime_error);
    }
    fs::remove(path);
}

TEST_CASE("config validation rejects out-of-grid zones and bad fractions") {
    auto g = small_gen();
    g.industrial_zones = {{20, 2}};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = small_gen();
    g.migrant_prior = 0.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = small_gen();
    g.labeled_fraction = 1.5;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = small_gen();
    g.station_coverage = 0.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = small_gen();
    g.days = 0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}
