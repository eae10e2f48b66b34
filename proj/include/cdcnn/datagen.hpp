#ifndef CDCNN_DATAGEN_HPP
#define CDCNN_DATAGEN_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cdcnn/cnc.hpp"
#include "cdcnn/tensor.hpp"

namespace cdcnn::datagen {

struct Zone {
    std::uint32_t row = 0;
    std::uint32_t col = 0;

    bool operator==(const Zone&) const = default;
};

struct GenConfig {
    std::size_t grid_rows = 24;
    std::size_t grid_cols = 24;
    std::size_t n_residents = 20000;
    double labeled_fraction = 0.1;
    double migrant_prior = 0.5;
    std::size_t days = 20;
    Zone downtown_center{11, 11};
    std::size_t ring_radius = 6;         // migrant residential ring around downtown
    std::vector<Zone> industrial_zones{{4, 4}, {4, 19}, {19, 4}, {19, 19}};
    double peak_shift_hours = 2.0;       // migrant evening-peak delay
    double noise_level = 0.15;
    double station_coverage = 0.9;       // fraction of zones with base stations
    double leaving_slope = 0.7;          // holiday-leaving probability coupling
    double val_fraction = 0.1;           // extra residents held out for validation
    std::uint64_t seed = 42;

    void validate() const;
    std::size_t zone_count() const { return grid_rows * grid_cols; }

    bool operator==(const GenConfig&) const = default;
};

struct ResidentTruth {
    bool is_migrant = false;
    Zone home_zone;
    Zone work_zone;
    std::size_t call_peak_hour = 19;
    std::size_t sms_peak_hour = 20;
    bool leaving = false;          // absent during the holiday window
    std::size_t call_events = 0;   // total events over the observation window
    std::size_t sms_events = 0;

    bool has_calls() const { return call_events > 0; }
    bool has_sms() const { return sms_events > 0; }
    bool operator==(const ResidentTruth&) const = default;
};

/// Ground truth is carried alongside the feature splits for evaluation only;
/// training code receives just the sample vectors.
struct Dataset {
    GenConfig config;
    std::vector<cnc::LabeledSample> labeled;
    std::vector<cnc::Sample> pool;
    std::vector<cnc::LabeledSample> validation;
    std::vector<ResidentTruth> labeled_truths;
    std::vector<ResidentTruth> pool_truths;
    std::vector<ResidentTruth> validation_truths;

    bool operator==(const Dataset&) const = default;
};

/// Zone coverage mask, row-major; exactly round(coverage * zones) entries
/// (at least one) are set, chosen by a dataset-level stream.
std::vector<std::uint8_t> make_coverage(const GenConfig& config);

/// Ground truth for one resident; deterministic in (config, index, class).
ResidentTruth gen_truth(const GenConfig& config,
                        const std::vector<std::uint8_t>& coverage,
                        std::size_t resident_index, bool is_migrant);

/// Features for one resident: presence-fraction matrices accumulated over
/// one zone per hour slice per day (home period 19:00-7:00, working period
/// 7:00-19:00), and hourly call/SMS fractions from unimodal daily profiles
/// peaked at the truth's peak hours. Uncovered zones stay zero.
cnc::Sample gen_features(const GenConfig& config,
                         const std::vector<std::uint8_t>& coverage,
                         std::size_t resident_index, const ResidentTruth& truth);

Dataset gen_dataset(const GenConfig& config);

void export_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset import_dataset(const std::filesystem::path& path);

}  // namespace cdcnn::datagen

#endif
