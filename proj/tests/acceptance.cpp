// Acceptance harness: numbered end-to-end properties of the shipped system,
// one pass/fail line each. Usage: acceptance <number>... [cli-path]
// The cli-path argument is consumed by criterion 8, which shells out to the
// command-line binary.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cdcnn/datagen.hpp"
#include "cdcnn/eval.hpp"
#include "cdcnn/gradcheck.hpp"
#include "cdcnn/model.hpp"
#include "cdcnn/nncore.hpp"
#include "cdcnn/profiles.hpp"

using namespace cdcnn;
namespace fs = std::filesystem;

namespace {

// Pinned gates. Changing any of these changes what the suite certifies.
constexpr double kGradTolerance = 1e-4;      // max relative error, analytic vs FD
constexpr double kGradEpsilon = 1e-5;        // central-difference step (checker default)
constexpr std::size_t kGradMinCases = 20;
constexpr double kGradBudgetSeconds = 60.0;
constexpr std::size_t kRandomConfigs = 100;  // shape and balancer property trials
constexpr double kOracleMinF1 = 0.9;         // planted-signal certification
constexpr double kCdcnnMinF1 = 0.85;         // headline model floor, desk scale
constexpr double kAblationBudgetSeconds = 600.0;
constexpr double kNullSignalMargin = 0.05;   // allowed excess over the baseline

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Line {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// ---------------------------------------------------------------- criterion 1

Line criterion_gradients() {
    const double t0 = now_s();
    auto report = gradcheck::run(3, 20260814);
    const double elapsed = now_s() - t0;
    Line line;
    line.pass = report.cases.size() >= kGradMinCases &&
                report.worst < kGradTolerance && elapsed < kGradBudgetSeconds;
    line.detail = "worst rel err " + fmt(report.worst) + " (" + report.worst_case +
                  "), " + std::to_string(report.cases.size()) + " configs, " +
                  std::to_string(report.total_checks) + " components, eps " +
                  fmt(kGradEpsilon) + ", " + fmt(elapsed) + "s";
    return line;
}

// ---------------------------------------------------------------- criterion 2

Line criterion_shapes_balancer() {
    std::mt19937_64 rng(8833);
    std::size_t bad = 0;
    std::uniform_int_distribution<std::size_t> gdist(2, 40);
    for (std::size_t trial = 0; trial < kRandomConfigs; ++trial) {
        const std::size_t rows = gdist(rng), cols = gdist(rng);
        std::uniform_int_distribution<std::size_t> mdist(1, rows), ndist(1, cols);
        const std::size_t m = mdist(rng), n = ndist(rng);
        std::uniform_int_distribution<std::size_t> wdist(1, 8);
        const std::size_t w = wdist(rng);

        Tensor input({2, rows, cols});
        std::vector<Conv2DFilter> filters(1);
        filters[0].weights = Tensor({m, n, 2});
        auto conv = conv2d_two_channel(input, filters, Activation::Identity);
        if (conv[0].dim(0) != rows - m + 1 || conv[0].dim(1) != cols - n + 1) ++bad;
        Tensor pooled = avg_pool2d(conv[0], w);
        if (pooled.dim(0) != (conv[0].dim(0) + w - 1) / w ||
            pooled.dim(1) != (conv[0].dim(1) + w - 1) / w)
            ++bad;

        std::uniform_int_distribution<std::size_t> hdist(1, 24);
        const std::size_t h = hdist(rng);
        Tensor seq({2, 24});
        std::vector<Conv1DFilter> f1(1);
        f1[0].weights = Tensor({2, h});
        auto conv1 = conv1d_two_row(seq, f1, Activation::Identity);
        if (conv1[0].dim(0) != 24 - h + 1) ++bad;
        Tensor p1 = avg_pool1d(conv1[0], w);
        if (p1.dim(0) != (conv1[0].dim(0) + w - 1) / w) ++bad;
    }

    std::uniform_int_distribution<std::size_t> dim_dist(1, 4096);
    for (std::size_t trial = 0; trial < kRandomConfigs; ++trial) {
        std::size_t a = dim_dist(rng), b = dim_dist(rng);
        const std::size_t loc = std::max(a, b), com = std::min(a, b);
        auto spec = build_balancer(loc, com);
        bool ok = !spec.loc_widths.empty() && !spec.com_widths.empty() &&
                  spec.loc_widths.front() == loc && spec.com_widths.front() == com &&
                  spec.loc_widths.back() == spec.shared_width &&
                  spec.com_widths.back() == spec.shared_width &&
                  spec.shared_width >= com && spec.shared_width <= loc;
        for (std::size_t i = 1; ok && i < spec.loc_widths.size(); ++i) {
            if (spec.loc_widths[i] >= spec.loc_widths[i - 1]) ok = false;
            if (i + 1 < spec.loc_widths.size() &&
                spec.loc_widths[i] != spec.loc_widths[i - 1] / 2)
                ok = false;
        }
        for (std::size_t i = 1; ok && i < spec.com_widths.size(); ++i) {
            if (spec.com_widths[i] <= spec.com_widths[i - 1]) ok = false;
            if (i + 1 < spec.com_widths.size() &&
                spec.com_widths[i] != spec.com_widths[i - 1] * 2)
                ok = false;
        }
        if (!ok) ++bad;
    }

    Line line;
    line.pass = bad == 0;
    line.detail = std::to_string(kRandomConfigs) + " shape configs + " +
                  std::to_string(kRandomConfigs) + " balancer pairs, " +
                  std::to_string(bad) + " violations";
    return line;
}

// ---------------------------------------------------------------- criterion 3

std::uint64_t sample_hash(const Tensor& loc, const Tensor& com) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const Tensor& t) {
        for (double v : t.values()) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            h ^= bits;
            h *= 1099511628211ull;
        }
    };
    mix(loc);
    mix(com);
    return h;
}

bool scan_sample(const datagen::GenConfig& g, const Tensor& loc, const Tensor& com,
                 const std::vector<std::uint8_t>& coverage, std::string& why) {
    const std::size_t zones = g.zone_count();
    double home = 0.0, work = 0.0;
    for (std::size_t z = 0; z < zones; ++z) {
        const double vh = loc[z], vw = loc[zones + z];
        if (vh < 0.0 || vh > 1.0 || vw < 0.0 || vw > 1.0) {
            why = "presence value outside [0,1]";
            return false;
        }
        if (!coverage[z] && (vh != 0.0 || vw != 0.0)) {
            why = "nonzero presence in an uncovered zone";
            return false;
        }
        home += vh;
        work += vw;
    }
    if (home > 1.0 + 1e-9 || work > 1.0 + 1e-9) {
        why = "per-period zone sum exceeds 1";
        return false;
    }
    for (std::size_t row = 0; row < 2; ++row) {
        double sum = 0.0;
        for (std::size_t h = 0; h < kHoursPerDay; ++h) {
            const double v = com.at(row, h);
            if (v < 0.0 || v > 1.0) {
                why = "communication value outside [0,1]";
                return false;
            }
            sum += v;
        }
        if (sum != 0.0 && std::abs(sum - 1.0) > 1e-9) {
            why = "communication row sum differs from 1";
            return false;
        }
    }
    return true;
}

Line criterion_generator() {
    auto prof = profiles::builtin_profile("desk-default");
    auto ds = datagen::gen_dataset(prof.gen);
    auto coverage = datagen::make_coverage(prof.gen);

    Line line;
    std::string why;
    std::set<std::uint64_t> hashes;
    auto visit = [&](const Tensor& loc, const Tensor& com) {
        if (!line.detail.empty()) return;
        if (!scan_sample(prof.gen, loc, com, coverage, why)) line.detail = why;
        if (!hashes.insert(sample_hash(loc, com)).second)
            line.detail = "duplicate sample across splits";
    };
    for (const auto& s : ds.labeled) visit(s.loc, s.com);
    for (const auto& s : ds.pool) visit(s.loc, s.com);
    for (const auto& s : ds.validation) visit(s.loc, s.com);
    if (!line.detail.empty()) {
        line.pass = false;
        return line;
    }

    const std::size_t want_labeled = static_cast<std::size_t>(
        std::llround(prof.gen.labeled_fraction *
                     static_cast<double>(prof.gen.n_residents)));
    if (ds.labeled.size() != want_labeled ||
        ds.labeled.size() + ds.pool.size() != prof.gen.n_residents) {
        line.pass = false;
        line.detail = "split sizes disagree with the config";
        return line;
    }

    auto oracle = eval::separability_oracle(ds);
    line.pass = oracle.f1 >= kOracleMinF1;
    line.detail = std::to_string(ds.labeled.size() + ds.pool.size() +
                                 ds.validation.size()) +
                  " samples scanned, oracle F1 " + fmt(oracle.f1) + " (floor " +
                  fmt(kOracleMinF1) + ")";
    return line;
}

// ------------------------------------------------------- criteria 4 and 7

struct AblationOutcome {
    Line ordering;     // criterion 4
    Line calibration;  // criterion 7
};

AblationOutcome run_desk_ablation() {
    auto prof = profiles::builtin_profile("desk-default");
    const double t0 = now_s();
    auto ds = datagen::gen_dataset(prof.gen);

    // The generator certificate is a precondition for every model claim.
    auto oracle = eval::separability_oracle(ds);
    AblationOutcome out;
    if (oracle.f1 < kOracleMinF1) {
        out.ordering.pass = out.calibration.pass = false;
        out.ordering.detail = out.calibration.detail =
            "separability oracle below floor: " + fmt(oracle.f1);
        return out;
    }

    std::map<std::string, std::vector<double>> f1s;
    std::vector<double> val_labels;
    for (const auto& s : ds.validation) val_labels.push_back(s.label);

    bool calibration_ok = true;
    std::string calibration_note;
    for (std::uint64_t seed : prof.eval.seeds) {
        auto run = eval::train_seed(ds, ds.labeled, prof, seed, false, true);
        auto record = [&](const char* name, const auto& params) {
            auto m = eval::compute_metrics(eval::predict_all(params, ds.validation),
                                           val_labels, prof.eval.threshold);
            f1s[name].push_back(m.f1);
        };
        record(eval::kVariantCDCNN, run.cdcnn);
        record(eval::kVariantNoCo, run.noco);
        record(eval::kVariantNoBal, run.nobal);
        record(eval::kVariantLN, run.ln);
        record(eval::kVariantCN, run.cn);

        // Criterion 7 on the same trained model: leaving rates must be
        // weakly increasing across occupied confidence bins.
        auto table = eval::calibration_for(run.cdcnn, ds);
        double prev = -1.0;
        for (const auto& bin : table.bins) {
            if (bin.count == 0) continue;
            if (bin.leaving_rate < prev - 1e-12) {
                calibration_ok = false;
                calibration_note = "seed " + std::to_string(seed) +
                                   " breaks monotonicity at bin [" + fmt(bin.lo) +
                                   "," + fmt(bin.hi) + ")";
            }
            prev = bin.leaving_rate;
        }
    }
    const double elapsed = now_s() - t0;

    const double cdcnn = mean_of(f1s[eval::kVariantCDCNN]);
    const double noco = mean_of(f1s[eval::kVariantNoCo]);
    const double nobal = mean_of(f1s[eval::kVariantNoBal]);
    const double ln = mean_of(f1s[eval::kVariantLN]);
    const double cn = mean_of(f1s[eval::kVariantCN]);

    out.ordering.pass = cdcnn >= noco && cdcnn >= nobal && cdcnn >= ln &&
                        ln >= cn && cdcnn >= kCdcnnMinF1 &&
                        elapsed < kAblationBudgetSeconds;
    out.ordering.detail = "mean F1 cdcnn " + fmt(cdcnn) + ", noco " + fmt(noco) +
                          ", nobal " + fmt(nobal) + ", ln " + fmt(ln) + ", cn " +
                          fmt(cn) + ", " + fmt(elapsed) + "s";

    out.calibration.pass = calibration_ok;
    out.calibration.detail = calibration_ok
                                 ? "leaving rates weakly increasing on all " +
                                       std::to_string(prof.eval.seeds.size()) +
                                       " seeds"
                                 : calibration_note;
    return out;
}

// ---------------------------------------------------------------- criterion 5

Line criterion_label_scarcity() {
    auto prof = profiles::builtin_profile("desk-default");
    auto ds = datagen::gen_dataset(prof.gen);
    auto rep = eval::sweep_labels(ds, prof, prof.eval.label_sizes, prof.eval.seeds,
                                  {});
    std::map<std::size_t, std::vector<double>> cdcnn, noco;
    for (const auto& row : rep.rows) {
        if (row.variant == eval::kVariantCDCNN)
            cdcnn[row.label_size].push_back(row.metrics.f1);
        else if (row.variant == eval::kVariantNoCo)
            noco[row.label_size].push_back(row.metrics.f1);
    }
    const std::size_t largest = prof.eval.label_sizes.front();
    const std::size_t smallest = prof.eval.label_sizes.back();
    const double gap_large = mean_of(cdcnn[largest]) - mean_of(noco[largest]);
    const double gap_small = mean_of(cdcnn[smallest]) - mean_of(noco[smallest]);

    Line line;
    line.pass = gap_small >= gap_large;
    line.detail = "cdcnn-noco gap at " + std::to_string(smallest) + " labels " +
                  fmt(gap_small) + " vs at " + std::to_string(largest) + " labels " +
                  fmt(gap_large);
    return line;
}

// ---------------------------------------------------------------- criterion 6

Line criterion_days_trend() {
    auto prof = profiles::builtin_profile("desk-default");
    auto rep = eval::sweep_days(prof, prof.eval.days_points, prof.eval.seeds, {});
    std::map<std::size_t, std::vector<double>> per_day;
    for (const auto& row : rep.rows) per_day[row.days].push_back(row.metrics.f1);

    std::map<std::size_t, double> m;
    for (auto& [d, v] : per_day) m[d] = mean_of(v);

    const bool rising = m[1] <= m[5] && m[5] <= m[10];
    const double early_gain = m[5] - m[1];
    const double late_gain = m[20] - m[15];
    Line line;
    line.pass = rising && late_gain <= early_gain;
    std::ostringstream os;
    os << "mean F1 by days";
    for (auto& [d, f1] : m) os << " " << d << ":" << fmt(f1);
    os << "; gain 15->20 " << fmt(late_gain) << " vs 1->5 " << fmt(early_gain);
    line.detail = os.str();
    return line;
}

// ---------------------------------------------------------------- criterion 8

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Line criterion_determinism(const std::string& cli) {
    Line line;
    if (cli.empty()) {
        line.pass = false;
        line.detail = "no cli path given (pass the binary as the last argument)";
        return line;
    }
    const fs::path dir =
        fs::temp_directory_path() /
        ("cdcnn_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);

    auto prof = profiles::builtin_profile("desk-default");
    prof.name = "determinism-check";
    prof.gen.grid_rows = prof.model.grid_rows = 12;
    prof.gen.grid_cols = prof.model.grid_cols = 12;
    prof.model.loc_pool = 2;  // keep the location feature dim dominant at 12x12
    prof.gen.n_residents = 800;
    prof.gen.labeled_fraction = 0.25;
    prof.gen.days = 3;
    prof.gen.downtown_center = {5, 5};
    prof.gen.ring_radius = 3;
    prof.gen.industrial_zones = {{1, 1}, {10, 10}};
    prof.train.pretrain_epochs = 4;
    prof.train.finetune_epochs = 3;
    prof.train.cotrain_epochs = 1;
    prof.train.max_rounds = 2;
    prof.eval.seeds = {1, 2, 3, 4};
    const fs::path profile_path = dir / "profile.json";
    {
        std::ofstream out(profile_path);
        out << profiles::to_json(prof).dump(2) << "\n";
    }

    auto run = [&](const char* tag, int jobs) -> fs::path {
        const fs::path out_path = dir / (std::string("report_") + tag + ".csv");
        std::ostringstream cmd;
        cmd << "\"" << cli << "\" ablate --profile \"" << profile_path.string()
            << "\" --report \"" << out_path.string() << "\" --jobs " << jobs << " > \""
            << (dir / (std::string("stdout_") + tag)).string() << "\" 2>&1";
        if (std::system(cmd.str().c_str()) != 0) return {};
        return out_path;
    };

    const fs::path a = run("a_jobs1", 1);
    const fs::path b = run("b_jobs1", 1);
    const fs::path c = run("c_jobs4", 4);
    if (a.empty() || b.empty() || c.empty()) {
        line.pass = false;
        line.detail = "ablate command failed (see " + dir.string() + ")";
        return line;
    }
    const std::string ra = read_file(a), rb = read_file(b), rc = read_file(c);
    line.pass = !ra.empty() && ra == rb && ra == rc;
    line.detail = line.pass ? "reports byte-identical across reruns and jobs {1,4}"
                            : "reports differ (kept in " + dir.string() + ")";
    if (line.pass) {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    return line;
}

// ---------------------------------------------------------------- criterion 9

Line criterion_null_signal() {
    auto prof = profiles::builtin_profile("null-signal");
    auto ds = datagen::gen_dataset(prof.gen);
    std::vector<double> val_labels;
    for (const auto& s : ds.validation) val_labels.push_back(s.label);
    const double baseline = eval::majority_baseline_f1(val_labels);

    auto rep = eval::run_ablation(ds, prof, prof.eval.seeds, {});
    auto summaries = eval::summarize(rep);
    double worst_excess = -1.0;
    std::string worst_variant;
    for (const auto& s : summaries) {
        const double excess = s.mean_f1 - baseline;
        if (excess > worst_excess) {
            worst_excess = excess;
            worst_variant = s.variant;
        }
    }
    Line line;
    line.pass = worst_excess <= kNullSignalMargin;
    line.detail = "baseline F1 " + fmt(baseline) + ", largest excess " +
                  fmt(worst_excess) + " (" + worst_variant + "), margin " +
                  fmt(kNullSignalMargin);
    return line;
}

void print_line(int criterion, const char* name, const Line& line) {
    std::printf("criterion %d (%s): %s [%s]\n", criterion, name,
                line.pass ? "PASS" : "FAIL", line.detail.c_str());
    std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    std::string cli_path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (!arg.empty() && arg[0] >= '1' && arg[0] <= '9' && arg.size() == 1)
            wanted.push_back(arg[0] - '0');
        else
            cli_path = arg;
    }
    if (wanted.empty()) {
        for (int c = 1; c <= 9; ++c) wanted.push_back(c);
    }
    std::sort(wanted.begin(), wanted.end());

    bool all_pass = true;
    AblationOutcome shared;
    bool shared_ready = false;
    for (int c : wanted) {
        Line line;
        switch (c) {
            case 1: line = criterion_gradients(); print_line(1, "gradient suite", line); break;
            case 2: line = criterion_shapes_balancer(); print_line(2, "shape and balancer laws", line); break;
            case 3: line = criterion_generator(); print_line(3, "generator invariants and separability", line); break;
            case 4:
                if (!shared_ready) { shared = run_desk_ablation(); shared_ready = true; }
                line = shared.ordering;
                print_line(4, "ablation ordering", line);
                break;
            case 5: line = criterion_label_scarcity(); print_line(5, "label scarcity gap", line); break;
            case 6: line = criterion_days_trend(); print_line(6, "collecting-days trend", line); break;
            case 7:
                if (!shared_ready) { shared = run_desk_ablation(); shared_ready = true; }
                line = shared.calibration;
                print_line(7, "calibration monotonicity", line);
                break;
            case 8: line = criterion_determinism(cli_path); print_line(8, "report determinism", line); break;
            case 9: line = criterion_null_signal(); print_line(9, "null-signal control", line); break;
            default:
                std::fprintf(stderr, "unknown criterion %d\n", c);
                return 2;
        }
        all_pass = all_pass && line.pass;
    }
    return all_pass ? 0 : 1;
}
