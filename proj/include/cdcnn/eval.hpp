#ifndef CDCNN_EVAL_HPP
#define CDCNN_EVAL_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cdcnn/cnc.hpp"
#include "cdcnn/datagen.hpp"
#include "cdcnn/model.hpp"
#include "cdcnn/profiles.hpp"

namespace cdcnn::eval {

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Confusion-matrix metrics with the migrant (label 1) as positive class.
/// Precision is 0 by convention when there are no positive predictions.
Metrics compute_metrics(std::span<const double> predictions,
                        std::span<const double> labels, double threshold = 0.5);

/// F1 of the better constant predictor: all-positive scores 2p/(1+p) where p
/// is the positive fraction; all-negative scores 0.
double majority_baseline_f1(std::span<const double> labels);

struct ReportRow {
    std::string variant;
    std::uint64_t seed = 0;
    std::size_t days = 0;
    std::size_t label_size = 0;
    Metrics metrics;
    double wall_clock_s = 0.0;
};

struct AblationReport {
    nlohmann::json profile_echo;
    std::vector<std::uint64_t> seeds;
    std::vector<ReportRow> rows;
};

struct VariantSummary {
    std::string variant;
    double mean_f1 = 0.0;
    double sd_f1 = 0.0;
    std::size_t runs = 0;
};

std::vector<VariantSummary> summarize(const AblationReport& report);
double mean_f1(const AblationReport& report, const std::string& variant);

struct RunOptions {
    bool timing = false;   // when false, wall_clock_s stays 0 for reproducibility
    std::size_t jobs = 1;  // upper bound on concurrent (seed) cells
};

inline constexpr const char* kVariantCDCNN = "cdcnn";
inline constexpr const char* kVariantNoCo = "noco";
inline constexpr const char* kVariantNoBal = "nobal";
inline constexpr const char* kVariantLN = "ln";
inline constexpr const char* kVariantCN = "cn";

/// Everything trained for one seed on one dataset. The pretrained heads
/// double as the LN/CN variants; the NoCo variant shares their pretraining.
struct SeedRun {
    std::uint64_t seed = 0;
    CDCNNParams cdcnn;
    CDCNNParams noco;
    CDCNNParams nobal;
    LNParams ln;
    CNParams cn;
    std::size_t cotrain_rounds = 0;
    double wall_cdcnn = 0.0, wall_noco = 0.0, wall_nobal = 0.0;
    double wall_ln = 0.0, wall_cn = 0.0;
};

/// Trains all five variants for one seed; labeled may be a subset of the
/// dataset's labeled split (label sweeps pass one).
SeedRun train_seed(const datagen::Dataset& dataset,
                   std::span<const cnc::LabeledSample> labeled,
                   const profiles::RunProfile& profile, std::uint64_t seed,
                   bool timing, bool want_nobal);

std::vector<double> predict_all(const CDCNNParams& params,
                                std::span<const cnc::LabeledSample> samples);
std::vector<double> predict_all(const LNParams& params,
                                std::span<const cnc::LabeledSample> samples);
std::vector<double> predict_all(const CNParams& params,
                                std::span<const cnc::LabeledSample> samples);

/// Five-variant ablation on one dataset; every variant within a seed is
/// evaluated on the dataset's validation split.
AblationReport run_ablation(const datagen::Dataset& dataset,
                            const profiles::RunProfile& profile,
                            std::span<const std::uint64_t> seeds,
                            const RunOptions& options = {});

/// Stratified, order-preserving subset of the labeled split; size equal to
/// the split returns it unchanged. Deterministic in (dataset seed, size).
std::vector<cnc::LabeledSample> subsample_labeled(const datagen::Dataset& dataset,
                                                  std::size_t size);

/// Trains cdcnn and noco at each label size (descending); rows carry the
/// size in label_size.
AblationReport sweep_labels(const datagen::Dataset& dataset,
                            const profiles::RunProfile& profile,
                            std::span<const std::size_t> sizes,
                            std::span<const std::uint64_t> seeds,
                            const RunOptions& options = {});

/// Regenerates the dataset per observation-day count (same seed lineage) and
/// trains cdcnn; rows carry the day count.
AblationReport sweep_days(const profiles::RunProfile& profile,
                          std::span<const std::size_t> days_points,
                          std::span<const std::uint64_t> seeds,
                          const RunOptions& options = {});

struct CalibrationBin {
    double lo = 0.0, hi = 0.0;
    std::size_t count = 0;
    std::size_t leaving = 0;
    double leaving_rate = 0.0;
};

struct CalibrationTable {
    std::array<CalibrationBin, 5> bins;  // [0,0.2) ... [0.8,1.0]
    std::size_t total = 0;
};

CalibrationTable calibration_table(std::span<const double> outputs,
                                   std::span<const std::uint8_t> leaving);

/// Scores validation + pool residents with the model and bins them against
/// the holiday-leaving ground truth.
CalibrationTable calibration_for(const CDCNNParams& params,
                                 const datagen::Dataset& dataset);

/// Logistic regression on ground-truth one-hot home zone + peak-hour
/// features: certifies the planted class signal independently of the
/// networks. Fit on labeled + pool truths, scored on validation.
Metrics separability_oracle(const datagen::Dataset& dataset);

enum class ReportFormat { Csv, JsonLines };

ReportFormat report_format_from_string(const std::string& name);

/// Deterministic column order; floating-point values round-trip exactly.
void write_report(const AblationReport& report, const std::filesystem::path& path,
                  ReportFormat format);

/// Re-parses a written report (either format); used by round-trip checks.
AblationReport read_report(const std::filesystem::path& path, ReportFormat format);

}  // namespace cdcnn::eval

#endif
