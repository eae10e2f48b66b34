#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cdcnn/checkpoint.hpp"
#include "cdcnn/cnc.hpp"
#include "cdcnn/datagen.hpp"
#include "cdcnn/eval.hpp"
#include "cdcnn/gradcheck.hpp"
#include "cdcnn/profiles.hpp"

namespace {

using cdcnn::profiles::RunProfile;

// --report paths without a directory component land in CDCNN_REPORT_DIR when
// that variable is set.
std::filesystem::path resolve_report_path(const std::string& report) {
    std::filesystem::path path(report);
    if (path.is_relative() && path.parent_path().empty())
        if (const char* dir = std::getenv("CDCNN_REPORT_DIR"))
            return std::filesystem::path(dir) / path;
    return path;
}

std::size_t jobs_default() {
    const char* env = std::getenv("CDCNN_JOBS");
    if (!env) return 1;
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v == 0)
        throw std::invalid_argument("CDCNN_JOBS must be a positive integer");
    return static_cast<std::size_t>(v);
}

void check_grid(const cdcnn::ModelConfig& model, const cdcnn::datagen::GenConfig& gen,
                const std::string& data_path) {
    if (model.grid_rows != gen.grid_rows || model.grid_cols != gen.grid_cols)
        throw std::invalid_argument(
            "model grid " + std::to_string(model.grid_rows) + "x" +
            std::to_string(model.grid_cols) + " does not match dataset " + data_path +
            " grid " + std::to_string(gen.grid_rows) + "x" +
            std::to_string(gen.grid_cols));
}

std::vector<std::uint64_t> pick_seeds(const std::vector<std::uint64_t>& flag,
                                      const RunProfile& profile) {
    return flag.empty() ? profile.eval.seeds : flag;
}

struct GenDataArgs {
    std::string profile = "desk-default";
    std::string out;
    std::optional<std::uint64_t> seed;
};

int run_gen_data(const GenDataArgs& args) {
    RunProfile profile = cdcnn::profiles::load_profile(args.profile);
    if (args.seed) profile.gen.seed = *args.seed;
    profile.gen.validate();
    const cdcnn::datagen::Dataset dataset = cdcnn::datagen::gen_dataset(profile.gen);
    cdcnn::datagen::export_dataset(dataset, args.out);
    std::cout << "gen-data: wrote " << args.out << " (labeled " << dataset.labeled.size()
              << ", pool " << dataset.pool.size() << ", validation "
              << dataset.validation.size() << "; seed " << profile.gen.seed << ")\n";
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string profile = "desk-default";
    std::string out_checkpoint;
    std::string log_path;
    std::optional<std::size_t> max_rounds;
    std::optional<std::uint64_t> seed;
    bool no_cotrain = false;
    bool timing = false;
};

int run_train(const TrainArgs& args) {
    RunProfile profile = cdcnn::profiles::load_profile(args.profile);
    const cdcnn::datagen::Dataset dataset = cdcnn::datagen::import_dataset(args.data);
    check_grid(profile.model, dataset.config, args.data);

    cdcnn::cnc::TrainConfig tc = profile.train;
    if (args.seed) tc.seed = *args.seed;
    if (args.max_rounds) tc.max_rounds = *args.max_rounds;
    if (args.no_cotrain) tc.max_rounds = 0;
    tc.validate();

    cdcnn::cnc::TrainLog log;
    if (args.timing) log.enable_timing();
    const cdcnn::cnc::TrainFullResult result =
        cdcnn::cnc::train_full(dataset.labeled, dataset.pool, profile.model, tc, log);

    const nlohmann::json metadata{{"profile", profile.name},
                                  {"data", args.data},
                                  {"train", cdcnn::profiles::to_json(tc)},
                                  {"cotrain_rounds", result.rounds}};
    cdcnn::save_checkpoint(args.out_checkpoint, profile.model, result.params, metadata);
    const std::string log_path =
        args.log_path.empty() ? args.out_checkpoint + ".train.jsonl" : args.log_path;
    cdcnn::cnc::write_train_log(log, log_path);
    std::cout << "train: wrote " << args.out_checkpoint << " (cotrain rounds "
              << result.rounds << ", params " << cdcnn::param_count(result.params)
              << ", log " << log_path << ")\n";
    return 0;
}

struct EvalArgs {
    std::string data;
    std::string checkpoint;
    std::string report;
    std::string format = "csv";
};

int run_eval(const EvalArgs& args) {
    const cdcnn::datagen::Dataset dataset = cdcnn::datagen::import_dataset(args.data);
    const cdcnn::Checkpoint ck = cdcnn::load_checkpoint(args.checkpoint);
    check_grid(ck.config, dataset.config, args.data);

    std::vector<double> labels;
    labels.reserve(dataset.validation.size());
    for (const auto& s : dataset.validation) labels.push_back(s.label);
    const std::vector<double> preds =
        cdcnn::eval::predict_all(ck.params, dataset.validation);
    const cdcnn::eval::Metrics m = cdcnn::eval::compute_metrics(preds, labels);

    cdcnn::eval::AblationReport report;
    report.profile_echo = nlohmann::json{{"checkpoint", args.checkpoint},
                                         {"data", args.data},
                                         {"model", cdcnn::profiles::to_json(ck.config)},
                                         {"metadata", ck.metadata}};
    std::uint64_t seed = 0;
    if (ck.metadata.contains("train") && ck.metadata["train"].contains("seed"))
        seed = ck.metadata["train"]["seed"].get<std::uint64_t>();
    report.seeds = {seed};
    cdcnn::eval::ReportRow row;
    row.variant = cdcnn::eval::kVariantCDCNN;
    row.seed = seed;
    row.days = dataset.config.days;
    row.label_size = dataset.labeled.size();
    row.metrics = m;
    report.rows.push_back(row);

    const auto path = resolve_report_path(args.report);
    cdcnn::eval::write_report(report, path,
                              cdcnn::eval::report_format_from_string(args.format));
    std::cout << "eval: precision " << m.precision << ", recall " << m.recall << ", F1 "
              << m.f1 << " on " << preds.size() << " validation residents -> "
              << path.string() << "\n";
    return 0;
}

struct AblateArgs {
    std::string profile = "desk-default";
    std::string data;
    std::string report;
    std::string format = "csv";
    std::vector<std::uint64_t> seeds;
    std::size_t jobs = 1;
    bool timing = false;
};

int run_ablate(const AblateArgs& args) {
    const RunProfile profile = cdcnn::profiles::load_profile(args.profile);
    cdcnn::datagen::Dataset dataset;
    if (args.data.empty()) {
        dataset = cdcnn::datagen::gen_dataset(profile.gen);
    } else {
        dataset = cdcnn::datagen::import_dataset(args.data);
        check_grid(profile.model, dataset.config, args.data);
    }
    const std::vector<std::uint64_t> seeds = pick_seeds(args.seeds, profile);
    const cdcnn::eval::RunOptions options{args.timing, args.jobs};
    const cdcnn::eval::AblationReport report =
        cdcnn::eval::run_ablation(dataset, profile, seeds, options);
    const auto path = resolve_report_path(args.report);
    cdcnn::eval::write_report(report, path,
                              cdcnn::eval::report_format_from_string(args.format));
    std::cout << "ablate: cdcnn mean F1 "
              << cdcnn::eval::mean_f1(report, cdcnn::eval::kVariantCDCNN) << " over "
              << seeds.size() << " seeds -> " << path.string() << "\n";
    return 0;
}

struct SweepArgs {
    std::string profile = "desk-default";
    std::string axis;
    std::string data;
    std::string report;
    std::string format = "csv";
    std::vector<std::uint64_t> points;
    std::vector<std::uint64_t> seeds;
    std::size_t jobs = 1;
    bool timing = false;
};

int run_sweep(const SweepArgs& args) {
    const RunProfile profile = cdcnn::profiles::load_profile(args.profile);
    const std::vector<std::uint64_t> seeds = pick_seeds(args.seeds, profile);
    const cdcnn::eval::RunOptions options{args.timing, args.jobs};

    cdcnn::eval::AblationReport report;
    if (args.axis == "labels") {
        cdcnn::datagen::Dataset dataset;
        if (args.data.empty()) {
            dataset = cdcnn::datagen::gen_dataset(profile.gen);
        } else {
            dataset = cdcnn::datagen::import_dataset(args.data);
            check_grid(profile.model, dataset.config, args.data);
        }
        std::vector<std::size_t> sizes;
        for (std::uint64_t p : args.points) sizes.push_back(static_cast<std::size_t>(p));
        if (sizes.empty())
            sizes.assign(profile.eval.label_sizes.begin(), profile.eval.label_sizes.end());
        report = cdcnn::eval::sweep_labels(dataset, profile, sizes, seeds, options);
    } else if (args.axis == "days") {
        std::vector<std::size_t> days;
        for (std::uint64_t p : args.points) days.push_back(static_cast<std::size_t>(p));
        if (days.empty())
            days.assign(profile.eval.days_points.begin(), profile.eval.days_points.end());
        report = cdcnn::eval::sweep_days(profile, days, seeds, options);
    } else {
        throw std::invalid_argument("--axis must be 'labels' or 'days', got '" +
                                    args.axis + "'");
    }
    const auto path = resolve_report_path(args.report);
    cdcnn::eval::write_report(report, path,
                              cdcnn::eval::report_format_from_string(args.format));
    std::cout << "sweep " << args.axis << ": " << report.rows.size() << " rows over "
              << seeds.size() << " seeds -> " << path.string() << "\n";
    return 0;
}

struct GradCheckArgs {
    std::size_t trials = 20;
    double tolerance = 1e-4;
    std::uint64_t seed = 7;
};

int run_grad_check(const GradCheckArgs& args) {
    const cdcnn::gradcheck::Report report = cdcnn::gradcheck::run(args.trials, args.seed);
    const bool ok = report.passed(args.tolerance);
    std::cout << "grad-check: worst relative error " << report.worst << " ("
              << report.worst_case << ") across " << report.cases.size() << " cases / "
              << report.total_checks << " components; tolerance " << args.tolerance
              << " -> " << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t env_jobs = 1;
    try {
        env_jobs = jobs_default();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"Cross-domain urban-resident classification toolkit"};
    app.require_subcommand(1);

    GenDataArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic resident dataset");
    gen->add_option("--profile", gen_args.profile,
                    "Built-in profile name or profile JSON path")
        ->capture_default_str();
    gen->add_option("--out", gen_args.out, "Output dataset file")->required();
    gen->add_option("--seed", gen_args.seed, "Override the generator seed");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "Train the full network on a dataset");
    train->add_option("--data", train_args.data, "Dataset file from gen-data")->required();
    train->add_option("--profile", train_args.profile,
                      "Built-in profile name or profile JSON path")
        ->capture_default_str();
    train->add_option("--out-checkpoint", train_args.out_checkpoint, "Checkpoint file")
        ->required();
    train->add_option("--log", train_args.log_path,
                      "Training log path (default: <checkpoint>.train.jsonl)");
    train->add_option("--max-rounds", train_args.max_rounds,
                      "Override the co-training round cap");
    train->add_flag("--no-cotrain", train_args.no_cotrain,
                    "Skip co-training (alias for --max-rounds 0)");
    train->add_option("--seed", train_args.seed, "Override the training seed");
    train->add_flag("--timing", train_args.timing,
                    "Record wall-clock stamps in the training log");

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset");
    eval->add_option("--data", eval_args.data, "Dataset file")->required();
    eval->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
    eval->add_option("--report", eval_args.report, "Report output path")->required();
    eval->add_option("--format", eval_args.format, "Report format: csv or json-lines")
        ->capture_default_str();

    AblateArgs ablate_args;
    ablate_args.jobs = env_jobs;
    CLI::App* ablate =
        app.add_subcommand("ablate", "Train and evaluate all five model variants");
    ablate->add_option("--profile", ablate_args.profile,
                       "Built-in profile name or profile JSON path")
        ->capture_default_str();
    ablate->add_option("--data", ablate_args.data,
                       "Reuse a dataset file instead of regenerating");
    ablate->add_option("--report", ablate_args.report, "Report output path")->required();
    ablate->add_option("--format", ablate_args.format, "Report format: csv or json-lines")
        ->capture_default_str();
    ablate->add_option("--seeds", ablate_args.seeds,
                       "Training seeds (default: the profile's seed list)")
        ->delimiter(',');
    ablate->add_option("--jobs", ablate_args.jobs,
                       "Concurrent seed cells (env CDCNN_JOBS)")
        ->capture_default_str();
    ablate->add_flag("--timing", ablate_args.timing,
                     "Record wall-clock seconds in report rows");

    SweepArgs sweep_args;
    sweep_args.jobs = env_jobs;
    CLI::App* sweep = app.add_subcommand("sweep", "Sweep label sizes or observation days");
    sweep->add_option("--profile", sweep_args.profile,
                      "Built-in profile name or profile JSON path")
        ->capture_default_str();
    sweep->add_option("--axis", sweep_args.axis, "Sweep axis: labels or days")->required();
    sweep->add_option("--points", sweep_args.points,
                      "Axis points (default: the profile's eval settings)")
        ->delimiter(',');
    sweep->add_option("--data", sweep_args.data,
                      "Reuse a dataset file (labels axis only)");
    sweep->add_option("--report", sweep_args.report, "Report output path")->required();
    sweep->add_option("--format", sweep_args.format, "Report format: csv or json-lines")
        ->capture_default_str();
    sweep->add_option("--seeds", sweep_args.seeds,
                      "Training seeds (default: the profile's seed list)")
        ->delimiter(',');
    sweep->add_option("--jobs", sweep_args.jobs, "Concurrent cells (env CDCNN_JOBS)")
        ->capture_default_str();
    sweep->add_flag("--timing", sweep_args.timing,
                    "Record wall-clock seconds in report rows");

    GradCheckArgs grad_args;
    CLI::App* grad = app.add_subcommand(
        "grad-check", "Compare analytic gradients against finite differences");
    grad->add_option("--trials", grad_args.trials, "Random configurations per layer kind")
        ->capture_default_str();
    grad->add_option("--tolerance", grad_args.tolerance, "Maximum relative error")
        ->capture_default_str();
    grad->add_option("--seed", grad_args.seed, "Configuration seed")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return run_gen_data(gen_args);
        if (train->parsed()) return run_train(train_args);
        if (eval->parsed()) return run_eval(eval_args);
        if (ablate->parsed()) return run_ablate(ablate_args);
        if (sweep->parsed()) return run_sweep(sweep_args);
        if (grad->parsed()) return run_grad_check(grad_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;  // unreachable with require_subcommand(1)
}
