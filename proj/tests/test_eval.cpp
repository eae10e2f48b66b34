// Harness-level behavior on a deliberately tiny profile: subset selection,
// report assembly, and parallel-run determinism.
#include <set>

#include "doctest.h"

#include "cdcnn/datagen.hpp"
#include "cdcnn/eval.hpp"
#include "cdcnn/profiles.hpp"

using namespace cdcnn;

namespace {

profiles::RunProfile tiny_profile() {
    profiles::RunProfile p = profiles::builtin_profile("desk-default");
    p.name = "tiny";
    p.gen.grid_rows = 12;
    p.gen.grid_cols = 12;
    p.gen.n_residents = 240;
    p.gen.labeled_fraction = 0.25;
    p.gen.days = 3;
    p.gen.downtown_center = {5, 5};
    p.gen.ring_radius = 3;
    p.gen.industrial_zones = {{1, 1}, {10, 10}};
    p.gen.seed = 21;
    p.model.grid_rows = 12;
    p.model.grid_cols = 12;
    p.model.loc_filters = 2;
    p.model.com_filters = 1;
    p.model.fusion_width = 4;
    p.train.pretrain_epochs = 2;
    p.train.finetune_epochs = 2;
    p.train.cotrain_epochs = 1;
    p.train.cotrain_batch = 16;
    p.train.max_rounds = 1;
    p.eval.seeds = {1, 2};
    p.eval.label_sizes = {60, 30};
    p.eval.days_points = {1, 2};
    return p;
}

}  // namespace

TEST_CASE("subsample_labeled is stratified, order-preserving and deterministic") {
    auto p = tiny_profile();
    auto ds = datagen::gen_dataset(p.gen);
    REQUIRE(ds.labeled.size() == 60);

    auto sub = eval::subsample_labeled(ds, 30);
    REQUIRE(sub.size() == 30);
    std::size_t pos = 0;
    for (const auto& s : sub) pos += s.label > 0.5;
    // Half migrants in the full split -> half in the subset, within a sample.
    CHECK(std::abs(static_cast<double>(pos) - 15.0) <= 1.0);

    // Order preserved: subset appears in the same relative order as the split.
    std::size_t cursor = 0;
    for (const auto& s : sub) {
        while (cursor < ds.labeled.size() && !(ds.labeled[cursor] == s)) ++cursor;
        CHECK(cursor < ds.labeled.size());
        ++cursor;
    }

    auto again = eval::subsample_labeled(ds, 30);
    CHECK(again == sub);

    auto full = eval::subsample_labeled(ds, 60);
    CHECK(full == ds.labeled);

    CHECK_THROWS_AS(eval::subsample_labeled(ds, 61), std::invalid_argument);
}

TEST_CASE("run_ablation emits five variants per seed with shared validation") {
    auto p = tiny_profile();
    auto ds = datagen::gen_dataset(p.gen);
    auto rep = eval::run_ablation(ds, p, p.eval.seeds, {});

    CHECK(rep.seeds == p.eval.seeds);
    REQUIRE(rep.rows.size() == 5 * p.eval.seeds.size());
    std::set<std::pair<std::string, std::uint64_t>> seen;
    for (const auto& row : rep.rows) {
        seen.insert({row.variant, row.seed});
        CHECK(row.days == p.gen.days);
        CHECK(row.label_size == ds.labeled.size());
        CHECK(row.wall_clock_s == 0.0);  // timing defaults off
        CHECK(row.metrics.tp + row.metrics.fp + row.metrics.tn + row.metrics.fn ==
              ds.validation.size());
    }
    CHECK(seen.size() == rep.rows.size());

    auto summaries = eval::summarize(rep);
    CHECK(summaries.size() == 5);
    for (const auto& s : summaries) CHECK(s.runs == p.eval.seeds.size());

    CHECK(eval::mean_f1(rep, "cdcnn") >= 0.0);
    CHECK_THROWS_AS(eval::mean_f1(rep, "missing-variant"), std::invalid_argument);
}

TEST_CASE("ablation is identical across jobs settings") {
    auto p = tiny_profile();
    auto ds = datagen::gen_dataset(p.gen);
    eval::RunOptions serial;
    serial.jobs = 1;
    eval::RunOptions parallel;
    parallel.jobs = 4;
    auto a = eval::run_ablation(ds, p, p.eval.seeds, serial);
    auto b = eval::run_ablation(ds, p, p.eval.seeds, parallel);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].variant == b.rows[i].variant);
        CHECK(a.rows[i].seed == b.rows[i].seed);
        CHECK(a.rows[i].metrics.f1 == b.rows[i].metrics.f1);
        CHECK(a.rows[i].metrics.precision == b.rows[i].metrics.precision);
    }
}

TEST_CASE("sweep_labels emits cdcnn and noco per size per seed") {
    auto p = tiny_profile();
    auto ds = datagen::gen_dataset(p.gen);
    auto rep = eval::sweep_labels(ds, p, p.eval.label_sizes, p.eval.seeds, {});
    REQUIRE(rep.rows.size() == 2 * p.eval.label_sizes.size() * p.eval.seeds.size());
    std::set<std::size_t> sizes_seen;
    for (const auto& row : rep.rows) {
        sizes_seen.insert(row.label_size);
        CHECK((row.variant == "cdcnn" || row.variant == "noco"));
    }
    CHECK(sizes_seen == std::set<std::size_t>{60, 30});

    std::vector<std::size_t> ascending{30, 60};
    CHECK_THROWS_AS(eval::sweep_labels(ds, p, ascending, p.eval.seeds, {}),
                    std::invalid_argument);
}

TEST_CASE("sweep_days regenerates per point and tags rows with the day count") {
    auto p = tiny_profile();
    auto rep = eval::sweep_days(p, p.eval.days_points, p.eval.seeds, {});
    REQUIRE(rep.rows.size() == p.eval.days_points.size() * p.eval.seeds.size());
    for (const auto& row : rep.rows) {
        CHECK(row.variant == "cdcnn");
        CHECK((row.days == 1 || row.days == 2));
    }
}

TEST_CASE("calibration_for bins every scored resident") {
    auto p = tiny_profile();
    auto ds = datagen::gen_dataset(p.gen);
    auto run = eval::train_seed(ds, ds.labeled, p, 1, false, false);
    auto table = eval::calibration_for(run.cdcnn, ds);
    CHECK(table.total == ds.validation.size() + ds.pool.size());
    std::size_t sum = 0;
    for (const auto& b : table.bins) sum += b.count;
    CHECK(sum == table.total);
}

TEST_CASE("separability oracle beats the trivial baseline on planted signal") {
    auto p = tiny_profile();
    p.gen.n_residents = 600;
    auto ds = datagen::gen_dataset(p.gen);
    auto m = eval::separability_oracle(ds);
    std::vector<double> labels;
    for (const auto& s : ds.validation) labels.push_back(s.label);
    CHECK(m.f1 > eval::majority_baseline_f1(labels));
}
