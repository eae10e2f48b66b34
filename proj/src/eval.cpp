#include "cdcnn/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cdcnn::eval {
namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Runs body(0..n-1) on up to `jobs` threads. Each call writes its own output
// slot, so results are independent of the schedule; the first exception wins.
void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& body) {
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<double> validation_labels(const datagen::Dataset& dataset) {
    std::vector<double> labels;
    labels.reserve(dataset.validation.size());
    for (const auto& s : dataset.validation) labels.push_back(s.label);
    return labels;
}

ReportRow make_row(const char* variant, std::uint64_t seed, std::size_t days,
                   std::size_t label_size, const Metrics& m, double wall) {
    ReportRow row;
    row.variant = variant;
    row.seed = seed;
    row.days = days;
    row.label_size = label_size;
    row.metrics = m;
    row.wall_clock_s = wall;
    return row;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc{})
        throw std::runtime_error("failed to format a floating-point value");
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& ctx) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw std::runtime_error(ctx + ": not a number: '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& ctx) {
    std::uint64_t v = 0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw std::runtime_error(ctx + ": not a nonnegative integer: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(line.substr(start));
            return parts;
        }
        parts.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

constexpr const char* kCsvHeader =
    "variant,seed,days,label_size,precision,recall,f1,wall_clock_s";

}  // namespace

Metrics compute_metrics(std::span<const double> predictions,
                        std::span<const double> labels, double threshold) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("compute_metrics: prediction/label size mismatch");
    if (predictions.empty())
        throw std::invalid_argument("compute_metrics: empty input");
    Metrics m;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool predicted = predictions[i] >= threshold;
        const bool actual = labels[i] > 0.5;
        if (predicted && actual) ++m.tp;
        else if (predicted && !actual) ++m.fp;
        else if (!predicted && actual) ++m.fn;
        else ++m.tn;
    }
    m.precision = (m.tp + m.fp) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = (m.precision + m.recall > 0.0)
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

double majority_baseline_f1(std::span<const double> labels) {
    if (labels.empty()) return 0.0;
    std::size_t positives = 0;
    for (double y : labels)
        if (y > 0.5) ++positives;
    const double p = static_cast<double>(positives) / static_cast<double>(labels.size());
    return 2.0 * p / (1.0 + p);  // all-positive beats all-negative for any p > 0
}

std::vector<VariantSummary> summarize(const AblationReport& report) {
    std::vector<VariantSummary> out;
    for (const auto& row : report.rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const VariantSummary& s) {
            return s.variant == row.variant;
        });
        if (it == out.end()) {
            out.push_back({row.variant, 0.0, 0.0, 0});
            it = out.end() - 1;
        }
        it->mean_f1 += row.metrics.f1;
        ++it->runs;
    }
    for (auto& s : out) s.mean_f1 /= static_cast<double>(s.runs);
    for (auto& s : out) {
        double var = 0.0;
        for (const auto& row : report.rows)
            if (row.variant == s.variant) {
                const double d = row.metrics.f1 - s.mean_f1;
                var += d * d;
            }
        s.sd_f1 = std::sqrt(var / static_cast<double>(s.runs));
    }
    return out;
}

double mean_f1(const AblationReport& report, const std::string& variant) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& row : report.rows)
        if (row.variant == variant) {
            sum += row.metrics.f1;
            ++n;
        }
    if (n == 0)
        throw std::invalid_argument("mean_f1: no rows for variant '" + variant + "'");
    return sum / static_cast<double>(n);
}

std::vector<double> predict_all(const CDCNNParams& params,
                                std::span<const cnc::LabeledSample> samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(cdcnn_forward(params, s.loc, s.com));
    return out;
}

std::vector<double> predict_all(const LNParams& params,
                                std::span<const cnc::LabeledSample> samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(ln_forward(params, s.loc));
    return out;
}

std::vector<double> predict_all(const CNParams& params,
                                std::span<const cnc::LabeledSample> samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(cn_forward(params, s.com));
    return out;
}

SeedRun train_seed(const datagen::Dataset& dataset,
                   std::span<const cnc::LabeledSample> labeled,
                   const profiles::RunProfile& profile, std::uint64_t seed,
                   bool timing, bool want_nobal) {
    SeedRun run;
    run.seed = seed;
    cnc::TrainConfig tc = profile.train;
    tc.seed = seed;
    const ModelConfig& mc = profile.model;
    cnc::TrainLog log;

    double t0 = now_seconds();
    cnc::PretrainResult pre = cnc::pretrain(labeled, mc, tc, log);
    const double t_pre = now_seconds() - t0;
    run.ln = pre.ln;
    run.cn = pre.cn;

    t0 = now_seconds();
    run.noco = cnc::finetune(mc, pre.ln.loc, pre.cn.com, labeled, tc, log);
    const double t_noco = now_seconds() - t0;

    t0 = now_seconds();
    cnc::UnlabeledPool pool(dataset.pool);
    cnc::CotrainResult co = cnc::cotrain(pre.ln, pre.cn, pool, tc, log);
    run.cotrain_rounds = co.rounds;
    run.cdcnn = cnc::finetune(mc, co.ln.loc, co.cn.com, labeled, tc, log);
    const double t_cdcnn = now_seconds() - t0;

    double t_nobal = 0.0;
    if (want_nobal) {
        ModelConfig flat = mc;
        flat.use_balancer = false;
        t0 = now_seconds();
        cnc::TrainFullResult full = cnc::train_full(labeled, dataset.pool, flat, tc, log);
        t_nobal = now_seconds() - t0;
        run.nobal = std::move(full.params);
    }

    if (timing) {
        run.wall_ln = t_pre;
        run.wall_cn = t_pre;
        run.wall_noco = t_pre + t_noco;
        run.wall_cdcnn = t_pre + t_cdcnn;
        run.wall_nobal = t_nobal;
    }
    return run;
}

AblationReport run_ablation(const datagen::Dataset& dataset,
                            const profiles::RunProfile& profile,
                            std::span<const std::uint64_t> seeds,
                            const RunOptions& options) {
    if (seeds.empty())
        throw std::invalid_argument("run_ablation: need at least one seed");
    AblationReport report;
    report.profile_echo = profiles::to_json(profile);
    report.seeds.assign(seeds.begin(), seeds.end());

    std::vector<SeedRun> runs(seeds.size());
    parallel_for(seeds.size(), options.jobs, [&](std::size_t i) {
        runs[i] = train_seed(dataset, dataset.labeled, profile, seeds[i],
                             options.timing, /*want_nobal=*/true);
    });

    const std::vector<double> labels = validation_labels(dataset);
    const double threshold = profile.eval.threshold;
    const std::size_t days = dataset.config.days;
    const std::size_t label_size = dataset.labeled.size();
    for (const SeedRun& run : runs) {
        auto score = [&](const auto& params) {
            return compute_metrics(predict_all(params, dataset.validation), labels,
                                   threshold);
        };
        report.rows.push_back(make_row(kVariantCDCNN, run.seed, days, label_size,
                                       score(run.cdcnn), run.wall_cdcnn));
        report.rows.push_back(make_row(kVariantNoCo, run.seed, days, label_size,
                                       score(run.noco), run.wall_noco));
        report.rows.push_back(make_row(kVariantNoBal, run.seed, days, label_size,
                                       score(run.nobal), run.wall_nobal));
        report.rows.push_back(
            make_row(kVariantLN, run.seed, days, label_size, score(run.ln), run.wall_ln));
        report.rows.push_back(
            make_row(kVariantCN, run.seed, days, label_size, score(run.cn), run.wall_cn));
    }
    return report;
}

std::vector<cnc::LabeledSample> subsample_labeled(const datagen::Dataset& dataset,
                                                  std::size_t size) {
    const auto& labeled = dataset.labeled;
    if (size > labeled.size())
        throw std::invalid_argument("subsample_labeled: requested size exceeds the labeled split");
    if (size == labeled.size()) return labeled;

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labeled.size(); ++i)
        (labeled[i].label > 0.5 ? pos : neg).push_back(i);

    // Keep the class ratio; clamp so both takes stay feasible.
    std::size_t take_pos = static_cast<std::size_t>(std::llround(
        static_cast<double>(size) * static_cast<double>(pos.size()) /
        static_cast<double>(labeled.size())));
    take_pos = std::min(take_pos, pos.size());
    take_pos = std::max(take_pos, size - std::min(size, neg.size()));
    const std::size_t take_neg = size - take_pos;

    std::mt19937_64 rng(mix_seed(dataset.config.seed,
                                 (std::uint64_t{3} << 32) + size));
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    std::vector<std::size_t> keep(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(take_pos));
    keep.insert(keep.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(take_neg));
    std::sort(keep.begin(), keep.end());

    std::vector<cnc::LabeledSample> out;
    out.reserve(size);
    for (std::size_t idx : keep) out.push_back(labeled[idx]);
    return out;
}

AblationReport sweep_labels(const datagen::Dataset& dataset,
                            const profiles::RunProfile& profile,
                            std::span<const std::size_t> sizes,
                            std::span<const std::uint64_t> seeds,
                            const RunOptions& options) {
    if (sizes.empty() || seeds.empty())
        throw std::invalid_argument("sweep_labels: need at least one size and one seed");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] >= sizes[i - 1])
            throw std::invalid_argument("sweep_labels: sizes must be strictly descending");

    AblationReport report;
    report.profile_echo = profiles::to_json(profile);
    report.seeds.assign(seeds.begin(), seeds.end());

    std::vector<std::vector<cnc::LabeledSample>> subsets;
    subsets.reserve(sizes.size());
    for (std::size_t size : sizes) subsets.push_back(subsample_labeled(dataset, size));

    const std::size_t cells = sizes.size() * seeds.size();
    std::vector<SeedRun> runs(cells);
    parallel_for(cells, options.jobs, [&](std::size_t cell) {
        const std::size_t si = cell / seeds.size();
        const std::size_t ki = cell % seeds.size();
        runs[cell] = train_seed(dataset, subsets[si], profile, seeds[ki],
                                options.timing, /*want_nobal=*/false);
    });

    const std::vector<double> labels = validation_labels(dataset);
    const double threshold = profile.eval.threshold;
    const std::size_t days = dataset.config.days;
    for (std::size_t si = 0; si < sizes.size(); ++si)
        for (std::size_t ki = 0; ki < seeds.size(); ++ki) {
            const SeedRun& run = runs[si * seeds.size() + ki];
            auto score = [&](const auto& params) {
                return compute_metrics(predict_all(params, dataset.validation), labels,
                                       threshold);
            };
            report.rows.push_back(make_row(kVariantCDCNN, run.seed, days, sizes[si],
                                           score(run.cdcnn), run.wall_cdcnn));
            report.rows.push_back(make_row(kVariantNoCo, run.seed, days, sizes[si],
                                           score(run.noco), run.wall_noco));
        }
    return report;
}

AblationReport sweep_days(const profiles::RunProfile& profile,
                          std::span<const std::size_t> days_points,
                          std::span<const std::uint64_t> seeds,
                          const RunOptions& options) {
    if (days_points.empty() || seeds.empty())
        throw std::invalid_argument("sweep_days: need at least one days point and one seed");

    AblationReport report;
    report.profile_echo = profiles::to_json(profile);
    report.seeds.assign(seeds.begin(), seeds.end());

    for (std::size_t days : days_points) {
        datagen::GenConfig gen = profile.gen;
        gen.days = days;
        const datagen::Dataset dataset = datagen::gen_dataset(gen);

        std::vector<SeedRun> runs(seeds.size());
        parallel_for(seeds.size(), options.jobs, [&](std::size_t ki) {
            runs[ki] = train_seed(dataset, dataset.labeled, profile, seeds[ki],
                                  options.timing, /*want_nobal=*/false);
        });

        const std::vector<double> labels = validation_labels(dataset);
        for (const SeedRun& run : runs) {
            const Metrics m = compute_metrics(predict_all(run.cdcnn, dataset.validation),
                                              labels, profile.eval.threshold);
            report.rows.push_back(make_row(kVariantCDCNN, run.seed, days,
                                           dataset.labeled.size(), m, run.wall_cdcnn));
        }
    }
    return report;
}

CalibrationTable calibration_table(std::span<const double> outputs,
                                   std::span<const std::uint8_t> leaving) {
    if (outputs.size() != leaving.size())
        throw std::invalid_argument("calibration_table: output/flag size mismatch");
    CalibrationTable table;
    for (std::size_t b = 0; b < table.bins.size(); ++b) {
        table.bins[b].lo = 0.2 * static_cast<double>(b);
        table.bins[b].hi = 0.2 * static_cast<double>(b + 1);
    }
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const double y = outputs[i];
        if (!(y >= 0.0) || !(y <= 1.0))
            throw std::invalid_argument("calibration_table: output outside [0, 1]");
        const auto b = std::min<std::size_t>(4, static_cast<std::size_t>(y * 5.0));
        ++table.bins[b].count;
        if (leaving[i]) ++table.bins[b].leaving;
    }
    for (auto& bin : table.bins) {
        bin.leaving_rate = bin.count
                               ? static_cast<double>(bin.leaving) /
                                     static_cast<double>(bin.count)
                               : 0.0;
        table.total += bin.count;
    }
    return table;
}

CalibrationTable calibration_for(const CDCNNParams& params,
                                 const datagen::Dataset& dataset) {
    std::vector<double> outputs;
    std::vector<std::uint8_t> leaving;
    outputs.reserve(dataset.validation.size() + dataset.pool.size());
    leaving.reserve(outputs.capacity());
    for (std::size_t i = 0; i < dataset.validation.size(); ++i) {
        outputs.push_back(cdcnn_forward(params, dataset.validation[i].loc,
                                        dataset.validation[i].com));
        leaving.push_back(dataset.validation_truths[i].leaving ? 1 : 0);
    }
    for (std::size_t i = 0; i < dataset.pool.size(); ++i) {
        outputs.push_back(
            cdcnn_forward(params, dataset.pool[i].loc, dataset.pool[i].com));
        leaving.push_back(dataset.pool_truths[i].leaving ? 1 : 0);
    }
    return calibration_table(outputs, leaving);
}

Metrics separability_oracle(const datagen::Dataset& dataset) {
    const std::size_t zones = dataset.config.zone_count();
    const std::size_t dim = zones + 2 * kHoursPerDay;

    struct Item {
        std::size_t home, call, sms;
        double y;
    };
    auto featurize = [&](const datagen::ResidentTruth& t, double y) {
        return Item{t.home_zone.row * dataset.config.grid_cols + t.home_zone.col,
                    zones + t.call_peak_hour, zones + kHoursPerDay + t.sms_peak_hour,
                    y};
    };
    std::vector<Item> train;
    train.reserve(dataset.labeled_truths.size() + dataset.pool_truths.size());
    for (const auto& t : dataset.labeled_truths)
        train.push_back(featurize(t, t.is_migrant ? 1.0 : 0.0));
    for (const auto& t : dataset.pool_truths)
        train.push_back(featurize(t, t.is_migrant ? 1.0 : 0.0));
    if (train.empty())
        throw std::invalid_argument("separability_oracle: no training residents");

    // Full-batch logistic regression on three one-hot features per resident.
    // The iteration budget is sized for convergence: sparse one-hot zone
    // weights each see only their own residents' gradient mass, so they need
    // far more full-batch steps than a dense model would.
    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    std::vector<double> gw(dim, 0.0);
    const double lr = 2.0;
    const double inv_n = 1.0 / static_cast<double>(train.size());
    for (int iter = 0; iter < 3000; ++iter) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (const Item& it : train) {
            const double z = w[it.home] + w[it.call] + w[it.sms] + b;
            const double e = 1.0 / (1.0 + std::exp(-z)) - it.y;
            gw[it.home] += e;
            gw[it.call] += e;
            gw[it.sms] += e;
            gb += e;
        }
        for (std::size_t k = 0; k < dim; ++k) w[k] -= lr * gw[k] * inv_n;
        b -= lr * gb * inv_n;
    }

    std::vector<double> preds, labels;
    preds.reserve(dataset.validation_truths.size());
    labels.reserve(dataset.validation_truths.size());
    for (const auto& t : dataset.validation_truths) {
        const Item it = featurize(t, 0.0);
        const double z = w[it.home] + w[it.call] + w[it.sms] + b;
        preds.push_back(1.0 / (1.0 + std::exp(-z)));
        labels.push_back(t.is_migrant ? 1.0 : 0.0);
    }
    return compute_metrics(preds, labels, 0.5);
}

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json-lines") return ReportFormat::JsonLines;
    throw std::invalid_argument("unknown report format '" + name +
                                "' (expected 'csv' or 'json-lines')");
}

void write_report(const AblationReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open report file for writing: " + path.string());
    if (format == ReportFormat::Csv) {
        out << "# profile: " << report.profile_echo.dump() << "\n";
        out << "# seeds: ";
        for (std::size_t i = 0; i < report.seeds.size(); ++i)
            out << (i ? "," : "") << report.seeds[i];
        out << "\n" << kCsvHeader << "\n";
        for (const auto& row : report.rows)
            out << row.variant << ',' << row.seed << ',' << row.days << ','
                << row.label_size << ',' << format_double(row.metrics.precision) << ','
                << format_double(row.metrics.recall) << ','
                << format_double(row.metrics.f1) << ','
                << format_double(row.wall_clock_s) << "\n";
    } else {
        nlohmann::json header{{"type", "header"},
                              {"profile", report.profile_echo},
                              {"seeds", report.seeds}};
        out << header.dump() << "\n";
        for (const auto& row : report.rows) {
            nlohmann::json j{{"type", "row"},
                             {"variant", row.variant},
                             {"seed", row.seed},
                             {"days", row.days},
                             {"label_size", row.label_size},
                             {"precision", row.metrics.precision},
                             {"recall", row.metrics.recall},
                             {"f1", row.metrics.f1},
                             {"wall_clock_s", row.wall_clock_s}};
            out << j.dump() << "\n";
        }
    }
    if (!out) throw std::runtime_error("failed writing report: " + path.string());
}

AblationReport read_report(const std::filesystem::path& path, ReportFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report file: " + path.string());
    AblationReport report;
    report.profile_echo = nlohmann::json::object();
    std::string line;
    std::size_t lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string ctx = "report line " + std::to_string(lineno);
        if (format == ReportFormat::Csv) {
            if (line.rfind("# profile: ", 0) == 0) {
                report.profile_echo = nlohmann::json::parse(line.substr(11));
                continue;
            }
            if (line.rfind("# seeds: ", 0) == 0) {
                const std::string rest = line.substr(9);
                if (!rest.empty())
                    for (const auto& part : split(rest, ','))
                        report.seeds.push_back(parse_u64(part, ctx));
                continue;
            }
            if (line[0] == '#') continue;
            if (!saw_header) {
                if (line != kCsvHeader)
                    throw std::runtime_error(ctx + ": unexpected column header");
                saw_header = true;
                continue;
            }
            const auto parts = split(line, ',');
            if (parts.size() != 8)
                throw std::runtime_error(ctx + ": expected 8 columns, got " +
                                         std::to_string(parts.size()));
            ReportRow row;
            row.variant = parts[0];
            row.seed = parse_u64(parts[1], ctx);
            row.days = static_cast<std::size_t>(parse_u64(parts[2], ctx));
            row.label_size = static_cast<std::size_t>(parse_u64(parts[3], ctx));
            row.metrics.precision = parse_double(parts[4], ctx);
            row.metrics.recall = parse_double(parts[5], ctx);
            row.metrics.f1 = parse_double(parts[6], ctx);
            row.wall_clock_s = parse_double(parts[7], ctx);
            report.rows.push_back(std::move(row));
        } else {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const std::exception& e) {
                throw std::runtime_error(ctx + ": malformed JSON: " + e.what());
            }
            const std::string type = j.value("type", "");
            if (type == "header") {
                report.profile_echo = j.value("profile", nlohmann::json::object());
                report.seeds = j.value("seeds", std::vector<std::uint64_t>{});
            } else if (type == "row") {
                ReportRow row;
                row.variant = j.at("variant").get<std::string>();
                row.seed = j.at("seed").get<std::uint64_t>();
                row.days = j.at("days").get<std::size_t>();
                row.label_size = j.at("label_size").get<std::size_t>();
                row.metrics.precision = j.at("precision").get<double>();
                row.metrics.recall = j.at("recall").get<double>();
                row.metrics.f1 = j.at("f1").get<double>();
                row.wall_clock_s = j.at("wall_clock_s").get<double>();
                report.rows.push_back(std::move(row));
            } else {
                throw std::runtime_error(ctx + ": unknown record type '" + type + "'");
            }
        }
    }
    return report;
}

}  // namespace cdcnn::eval
