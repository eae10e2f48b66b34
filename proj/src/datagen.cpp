#include "cdcnn/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdcnn/nncore.hpp"
#include "cdcnn/profiles.hpp"

#include "binio.hpp"

namespace cdcnn::datagen {
namespace {

constexpr std::uint64_t kCoverageStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kTruthSpace = std::uint64_t{1} << 32;
constexpr std::uint64_t kFeatureSpace = std::uint64_t{2} << 32;

constexpr std::size_t kPeriodHours = 12;  // home 19:00-7:00, working 7:00-19:00
constexpr double kBaseLeaveRate = 0.05;
constexpr double kCallsPerDay = 5.0;
constexpr double kSmsPerDay = 3.0;
constexpr double kPeakSigma = 2.5;     // hour-profile spread
constexpr double kPeakFloor = 0.05;    // off-peak activity floor
constexpr double kPeakJitterSd = 1.3;  // per-resident peak-hour variation
constexpr int kKernelRadius = 3;       // mobility kernel truncation

// Fractions of residents who do not live in their class's districts but are
// scattered over the mid-town area between downtown and the ring. The two
// scattered populations differ only by a small radial offset, so location
// carries a weak, sample-hungry signal for them while communication rhythm
// stays fully informative. That keeps the two views complementary instead
// of redundant, without creating residents the location net would be
// confidently wrong about.
constexpr double kScatteredMigrantFraction = 0.10;
constexpr double kScatteredNativeFraction = 0.08;
constexpr double kScatteredSigma = 2.5;
constexpr double kScatteredMigrantRadius = 0.45;  // fraction of ring_radius
constexpr double kScatteredNativeRadius = 0.25;

std::size_t clamp_hour(double h) {
    const long v = std::lround(h);
    return static_cast<std::size_t>(std::clamp(v, 0L, 23L));
}

bool covered_at(const std::vector<std::uint8_t>& coverage, const GenConfig& cfg,
                const Zone& z) {
    return coverage[z.row * cfg.grid_cols + z.col] != 0;
}

Zone clamp_zone(const GenConfig& cfg, long row, long col) {
    row = std::clamp(row, 0L, static_cast<long>(cfg.grid_rows) - 1);
    col = std::clamp(col, 0L, static_cast<long>(cfg.grid_cols) - 1);
    return Zone{static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(col)};
}

Zone nearest_covered(const GenConfig& cfg, const std::vector<std::uint8_t>& coverage,
                     const Zone& from) {
    long best_dist = -1;
    Zone best = from;
    for (std::size_t r = 0; r < cfg.grid_rows; ++r)
        for (std::size_t c = 0; c < cfg.grid_cols; ++c) {
            if (!coverage[r * cfg.grid_cols + c]) continue;
            const long dist = std::labs(static_cast<long>(r) - static_cast<long>(from.row)) +
                              std::labs(static_cast<long>(c) - static_cast<long>(from.col));
            if (best_dist < 0 || dist < best_dist) {
                best_dist = dist;
                best = Zone{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)};
            }
        }
    if (best_dist < 0) throw std::logic_error("coverage mask has no covered zone");
    return best;
}

// Draws candidates until one has a base station; falls back to the nearest
// covered zone so anchor zones always satisfy the truth invariant.
template <class Draw>
Zone pick_covered(const GenConfig& cfg, const std::vector<std::uint8_t>& coverage,
                  std::mt19937_64& rng, Draw&& draw) {
    Zone z{};
    for (int attempt = 0; attempt < 16; ++attempt) {
        z = draw(rng);
        if (covered_at(coverage, cfg, z)) return z;
    }
    return nearest_covered(cfg, coverage, z);
}

Zone gaussian_zone(const GenConfig& cfg, const Zone& center, double sigma,
                   std::mt19937_64& rng) {
    std::normal_distribution<double> offset(0.0, sigma);
    const double dr = offset(rng);
    const double dc = offset(rng);
    return clamp_zone(cfg, static_cast<long>(center.row) + std::lround(dr),
                      static_cast<long>(center.col) + std::lround(dc));
}

// Residents live in one of a few fixed districts rather than one shared
// blob: natives in the downtown core and four inner neighborhoods, ring
// dwellers in enclaves spaced around the ring. A small labeled set rarely
// covers every district, which is what leaves room for the unlabeled pool
// to matter during co-training.
constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kNativeNeighborhoods = 5;
constexpr std::size_t kMigrantEnclaves = 8;
constexpr double kHomeSigma = 1.2;
constexpr double kWorkSigma = 2.0;
constexpr double kIndustrialBias = 0.55;  // ring dwellers with industrial jobs

Zone polar_zone(const GenConfig& cfg, double radius, double angle) {
    return clamp_zone(
        cfg,
        static_cast<long>(cfg.downtown_center.row) + std::lround(radius * std::cos(angle)),
        static_cast<long>(cfg.downtown_center.col) + std::lround(radius * std::sin(angle)));
}

struct HomePrior {
    Zone anchor;
    double sigma;
};

HomePrior home_prior(const GenConfig& cfg, bool is_migrant, bool scattered,
                     double cluster_draw) {
    if (scattered) {
        const double frac =
            is_migrant ? kScatteredMigrantRadius : kScatteredNativeRadius;
        return {polar_zone(cfg, frac * static_cast<double>(cfg.ring_radius),
                           2.0 * kPi * cluster_draw),
                kScatteredSigma};
    }
    if (is_migrant) {
        const auto k = static_cast<std::size_t>(
            std::min(cluster_draw * kMigrantEnclaves,
                     static_cast<double>(kMigrantEnclaves) - 1.0));
        return {polar_zone(cfg, static_cast<double>(cfg.ring_radius),
                           2.0 * kPi * static_cast<double>(k) / kMigrantEnclaves),
                kHomeSigma};
    }
    const auto k = static_cast<std::size_t>(
        std::min(cluster_draw * kNativeNeighborhoods,
                 static_cast<double>(kNativeNeighborhoods) - 1.0));
    if (k == 0) return {cfg.downtown_center, kHomeSigma};
    return {polar_zone(cfg, 0.4 * static_cast<double>(cfg.ring_radius),
                       2.0 * kPi * static_cast<double>(k - 1) / 4.0 + kPi / 4.0),
            kHomeSigma};
}

Zone sample_home(const GenConfig& cfg, const std::vector<std::uint8_t>& coverage,
                 bool is_migrant, bool scattered, double cluster_draw,
                 std::mt19937_64& rng) {
    const HomePrior prior = home_prior(cfg, is_migrant, scattered, cluster_draw);
    return pick_covered(cfg, coverage, rng, [&](std::mt19937_64& r) {
        return gaussian_zone(cfg, prior.anchor, prior.sigma, r);
    });
}

Zone sample_work(const GenConfig& cfg, const std::vector<std::uint8_t>& coverage,
                 bool is_migrant, bool scattered, double cluster_draw,
                 double work_draw, std::mt19937_64& rng) {
    const Zone home = home_prior(cfg, is_migrant, scattered, cluster_draw).anchor;
    if (!scattered && is_migrant && !cfg.industrial_zones.empty() &&
        work_draw < kIndustrialBias) {
        // Job in the industrial park closest to the home enclave.
        const Zone* best = &cfg.industrial_zones.front();
        long best_d = -1;
        for (const Zone& z : cfg.industrial_zones) {
            const long d = std::labs(static_cast<long>(z.row) - static_cast<long>(home.row)) +
                           std::labs(static_cast<long>(z.col) - static_cast<long>(home.col));
            if (best_d < 0 || d < best_d) {
                best_d = d;
                best = &z;
            }
        }
        const Zone anchor = *best;
        return pick_covered(cfg, coverage, rng, [&](std::mt19937_64& r) {
            return gaussian_zone(cfg, anchor, kHomeSigma, r);
        });
    }
    // Local service job: between the home district and downtown.
    const Zone anchor = clamp_zone(
        cfg,
        (static_cast<long>(home.row) + static_cast<long>(cfg.downtown_center.row)) / 2,
        (static_cast<long>(home.col) + static_cast<long>(cfg.downtown_center.col)) / 2);
    return pick_covered(cfg, coverage, rng, [&](std::mt19937_64& r) {
        return gaussian_zone(cfg, anchor, kWorkSigma, r);
    });
}

// Truncated discrete Gaussian over zone offsets, tabulated once per resident.
struct OffsetKernel {
    std::vector<long> dr, dc;
    std::vector<double> cdf;
    double total = 0.0;
};

OffsetKernel make_kernel(double sigma) {
    OffsetKernel k;
    if (sigma <= 0.0) {
        k.dr = {0};
        k.dc = {0};
        k.cdf = {1.0};
        k.total = 1.0;
        return k;
    }
    double acc = 0.0;
    for (long r = -kKernelRadius; r <= kKernelRadius; ++r)
        for (long c = -kKernelRadius; c <= kKernelRadius; ++c) {
            const double w = std::exp(-static_cast<double>(r * r + c * c) /
                                      (2.0 * sigma * sigma));
            acc += w;
            k.dr.push_back(r);
            k.dc.push_back(c);
            k.cdf.push_back(acc);
        }
    k.total = acc;
    return k;
}

Zone kernel_zone(const GenConfig& cfg, const OffsetKernel& k, const Zone& anchor,
                 std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, k.total);
    const auto it = std::lower_bound(k.cdf.begin(), k.cdf.end(), u(rng));
    const std::size_t idx =
        std::min(static_cast<std::size_t>(it - k.cdf.begin()), k.cdf.size() - 1);
    return clamp_zone(cfg, static_cast<long>(anchor.row) + k.dr[idx],
                      static_cast<long>(anchor.col) + k.dc[idx]);
}

// Unimodal hourly activity profile peaked at `peak`.
struct HourProfile {
    double cdf[24];
    double total = 0.0;
};

HourProfile make_hour_profile(std::size_t peak) {
    HourProfile p;
    double acc = 0.0;
    for (int h = 0; h < 24; ++h) {
        const double d = static_cast<double>(h) - static_cast<double>(peak);
        acc += std::exp(-d * d / (2.0 * kPeakSigma * kPeakSigma)) + kPeakFloor;
        p.cdf[h] = acc;
    }
    p.total = acc;
    return p;
}

std::size_t draw_hour(const HourProfile& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, p.total);
    const double x = u(rng);
    for (int h = 0; h < 24; ++h)
        if (x <= p.cdf[h]) return static_cast<std::size_t>(h);
    return 23;
}

// The split plan is a pure function of the config, so importers can rebuild
// class assignments and block membership without storing them in the file.
struct SplitPlan {
    std::vector<std::uint8_t> migrant;      // base block, indexed by resident
    std::vector<std::size_t> labeled_ids;   // ascending
    std::vector<std::size_t> pool_ids;      // ascending
    std::vector<std::uint8_t> val_migrant;  // validation block, resident n + k
};

SplitPlan make_split(const GenConfig& cfg) {
    const std::size_t n = cfg.n_residents;
    const auto n_migrants =
        static_cast<std::size_t>(std::llround(cfg.migrant_prior * static_cast<double>(n)));
    const auto n_labeled = static_cast<std::size_t>(
        std::llround(cfg.labeled_fraction * static_cast<double>(n)));
    if (n_labeled < 2)
        throw std::invalid_argument(
            "gen_dataset: labeled_fraction * n_residents < 2, cannot stratify");

    std::mt19937_64 rng(mix_seed(cfg.seed, kSplitStream));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    SplitPlan plan;
    plan.migrant.assign(n, 0);
    for (std::size_t k = 0; k < n_migrants && k < n; ++k) plan.migrant[order[k]] = 1;

    std::vector<std::size_t> migrant_ids, native_ids;
    for (std::size_t i = 0; i < n; ++i)
        (plan.migrant[i] ? migrant_ids : native_ids).push_back(i);

    auto labeled_migrants = static_cast<std::size_t>(
        std::llround(cfg.migrant_prior * static_cast<double>(n_labeled)));
    labeled_migrants = std::min(labeled_migrants, migrant_ids.size());
    std::size_t labeled_natives = n_labeled - labeled_migrants;
    if (labeled_natives > native_ids.size()) {
        labeled_natives = native_ids.size();
        labeled_migrants = std::min(n_labeled - labeled_natives, migrant_ids.size());
    }
    if (labeled_migrants + labeled_natives != n_labeled)
        throw std::invalid_argument(
            "gen_dataset: stratified labeled split impossible for this migrant_prior");

    std::shuffle(migrant_ids.begin(), migrant_ids.end(), rng);
    std::shuffle(native_ids.begin(), native_ids.end(), rng);

    std::vector<std::uint8_t> in_labeled(n, 0);
    for (std::size_t k = 0; k < labeled_migrants; ++k) in_labeled[migrant_ids[k]] = 1;
    for (std::size_t k = 0; k < labeled_natives; ++k) in_labeled[native_ids[k]] = 1;
    for (std::size_t i = 0; i < n; ++i)
        (in_labeled[i] ? plan.labeled_ids : plan.pool_ids).push_back(i);

    const auto n_val = static_cast<std::size_t>(
        std::llround(cfg.val_fraction * static_cast<double>(n)));
    const auto val_migrants = static_cast<std::size_t>(
        std::llround(cfg.migrant_prior * static_cast<double>(n_val)));
    std::vector<std::size_t> val_order(n_val);
    std::iota(val_order.begin(), val_order.end(), std::size_t{0});
    std::shuffle(val_order.begin(), val_order.end(), rng);
    plan.val_migrant.assign(n_val, 0);
    for (std::size_t k = 0; k < val_migrants && k < n_val; ++k)
        plan.val_migrant[val_order[k]] = 1;

    return plan;
}

}  // namespace

void GenConfig::validate() const {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(std::string("GenConfig: ") + msg);
    };
    require(grid_rows >= 1 && grid_cols >= 1, "grid dimensions must be positive");
    require(n_residents >= 1, "n_residents must be positive");
    require(labeled_fraction >= 0.0 && labeled_fraction <= 1.0,
            "labeled_fraction must be in [0, 1]");
    require(migrant_prior > 0.0 && migrant_prior < 1.0,
            "migrant_prior must be in (0, 1)");
    require(days >= 1, "days must be positive");
    require(downtown_center.row < grid_rows && downtown_center.col < grid_cols,
            "downtown_center outside the grid");
    for (const Zone& z : industrial_zones)
        require(z.row < grid_rows && z.col < grid_cols,
                "industrial zone outside the grid");
    require(peak_shift_hours >= 0.0, "peak_shift_hours must be nonnegative");
    require(noise_level >= 0.0 && noise_level <= 1.0, "noise_level must be in [0, 1]");
    require(station_coverage > 0.0 && station_coverage <= 1.0,
            "station_coverage must be in (0, 1]");
    require(leaving_slope >= 0.0 && leaving_slope <= 1.0,
            "leaving_slope must be in [0, 1]");
    require(val_fraction >= 0.0 && val_fraction <= 1.0,
            "val_fraction must be in [0, 1]");
}

std::vector<std::uint8_t> make_coverage(const GenConfig& config) {
    const std::size_t zones = config.zone_count();
    const auto covered = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(config.station_coverage * static_cast<double>(zones))));
    std::vector<std::size_t> order(zones);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(config.seed, kCoverageStream));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::uint8_t> mask(zones, 0);
    for (std::size_t k = 0; k < covered && k < zones; ++k) mask[order[k]] = 1;
    return mask;
}

ResidentTruth gen_truth(const GenConfig& config,
                        const std::vector<std::uint8_t>& coverage,
                        std::size_t resident_index, bool is_migrant) {
    std::mt19937_64 rng(mix_seed(config.seed, kTruthSpace + resident_index));
    ResidentTruth truth;
    truth.is_migrant = is_migrant;
    // All three draws happen for every resident so the per-resident stream
    // layout does not depend on the class label.
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double mobility_draw = unit(rng);
    const double cluster_draw = unit(rng);
    const double work_draw = unit(rng);
    const bool scattered = mobility_draw < (is_migrant ? kScatteredMigrantFraction
                                                       : kScatteredNativeFraction);
    truth.home_zone =
        sample_home(config, coverage, is_migrant, scattered, cluster_draw, rng);
    truth.work_zone = sample_work(config, coverage, is_migrant, scattered,
                                  cluster_draw, work_draw, rng);

    const double shift = is_migrant ? config.peak_shift_hours : 0.0;
    std::normal_distribution<double> jitter(0.0, kPeakJitterSd);
    truth.call_peak_hour = clamp_hour(19.0 + shift + jitter(rng));
    truth.sms_peak_hour = clamp_hour(20.0 + shift + jitter(rng));

    const double p_leave =
        std::min(1.0, kBaseLeaveRate + config.leaving_slope * (is_migrant ? 1.0 : 0.0));
    truth.leaving = std::bernoulli_distribution(p_leave)(rng);

    const double d = static_cast<double>(config.days);
    truth.call_events = static_cast<std::size_t>(
        std::poisson_distribution<long>(kCallsPerDay * d)(rng));
    truth.sms_events = static_cast<std::size_t>(
        std::poisson_distribution<long>(kSmsPerDay * d)(rng));
    return truth;
}

cnc::Sample gen_features(const GenConfig& config,
                         const std::vector<std::uint8_t>& coverage,
                         std::size_t resident_index, const ResidentTruth& truth) {
    std::mt19937_64 rng(mix_seed(config.seed, kFeatureSpace + resident_index));

    cnc::Sample sample;
    sample.loc = Tensor({2, config.grid_rows, config.grid_cols});
    sample.com = Tensor({2, kHoursPerDay});

    const OffsetKernel kernel = make_kernel(3.0 * config.noise_level);
    const double slice_weight =
        1.0 / (static_cast<double>(kPeriodHours) * static_cast<double>(config.days));
    for (std::size_t day = 0; day < config.days; ++day) {
        for (std::size_t slice = 0; slice < kPeriodHours; ++slice) {
            const Zone z = kernel_zone(config, kernel, truth.home_zone, rng);
            if (covered_at(coverage, config, z))
                sample.loc.at(0, z.row, z.col) += slice_weight;
        }
        for (std::size_t slice = 0; slice < kPeriodHours; ++slice) {
            const Zone z = kernel_zone(config, kernel, truth.work_zone, rng);
            if (covered_at(coverage, config, z))
                sample.loc.at(1, z.row, z.col) += slice_weight;
        }
    }

    const HourProfile calls = make_hour_profile(truth.call_peak_hour);
    for (std::size_t e = 0; e < truth.call_events; ++e)
        sample.com.at(0, draw_hour(calls, rng)) += 1.0;
    if (truth.call_events > 0)
        for (std::size_t h = 0; h < kHoursPerDay; ++h)
            sample.com.at(0, h) /= static_cast<double>(truth.call_events);

    const HourProfile sms = make_hour_profile(truth.sms_peak_hour);
    for (std::size_t e = 0; e < truth.sms_events; ++e)
        sample.com.at(1, draw_hour(sms, rng)) += 1.0;
    if (truth.sms_events > 0)
        for (std::size_t h = 0; h < kHoursPerDay; ++h)
            sample.com.at(1, h) /= static_cast<double>(truth.sms_events);

    return sample;
}

Dataset gen_dataset(const GenConfig& config) {
    config.validate();
    const std::vector<std::uint8_t> coverage = make_coverage(config);
    const SplitPlan plan = make_split(config);

    Dataset ds;
    ds.config = config;

    for (std::size_t id : plan.labeled_ids) {
        const bool migrant = plan.migrant[id] != 0;
        ResidentTruth truth = gen_truth(config, coverage, id, migrant);
        cnc::Sample s = gen_features(config, coverage, id, truth);
        ds.labeled.push_back(
            {std::move(s.loc), std::move(s.com), migrant ? 1.0 : 0.0});
        ds.labeled_truths.push_back(truth);
    }
    for (std::size_t id : plan.pool_ids) {
        const bool migrant = plan.migrant[id] != 0;
        ResidentTruth truth = gen_truth(config, coverage, id, migrant);
        ds.pool.push_back(gen_features(config, coverage, id, truth));
        ds.pool_truths.push_back(truth);
    }
    for (std::size_t k = 0; k < plan.val_migrant.size(); ++k) {
        const std::size_t id = config.n_residents + k;
        const bool migrant = plan.val_migrant[k] != 0;
        ResidentTruth truth = gen_truth(config, coverage, id, migrant);
        cnc::Sample s = gen_features(config, coverage, id, truth);
        ds.validation.push_back(
            {std::move(s.loc), std::move(s.com), migrant ? 1.0 : 0.0});
        ds.validation_truths.push_back(truth);
    }
    return ds;
}

namespace {

constexpr char kMagic[4] = {'C', 'D', 'D', 'S'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint8_t kUnlabeledByte = 255;

void write_sparse_channel(std::ostream& out, const Tensor& loc, std::size_t channel,
                          std::size_t zones) {
    std::uint32_t nnz = 0;
    const double* base = loc.data() + channel * zones;
    for (std::size_t i = 0; i < zones; ++i)
        if (base[i] != 0.0) ++nnz;
    binio::put_u32(out, nnz);
    for (std::size_t i = 0; i < zones; ++i)
        if (base[i] != 0.0) {
            binio::put_u32(out, static_cast<std::uint32_t>(i));
            binio::put_f64(out, base[i]);
        }
}

void write_record(std::ostream& out, std::uint8_t label, const ResidentTruth& truth,
                  const Tensor& loc, const Tensor& com, std::size_t zones) {
    binio::put_u8(out, label);
    binio::put_u8(out, truth.leaving ? 1 : 0);
    write_sparse_channel(out, loc, 0, zones);
    write_sparse_channel(out, loc, 1, zones);
    for (double v : com.values()) binio::put_f64(out, v);
}

struct RecordData {
    std::uint8_t label = 0;
    std::uint8_t leaving = 0;
    Tensor loc;
    Tensor com;
};

RecordData read_record(std::istream& in, const GenConfig& cfg, std::size_t record_idx) {
    const std::string where = "record " + std::to_string(record_idx);
    RecordData rec;
    rec.label = binio::get_u8(in, where.c_str());
    if (rec.label != 0 && rec.label != 1 && rec.label != kUnlabeledByte)
        throw std::runtime_error(where + ": invalid label byte " +
                                 std::to_string(rec.label));
    rec.leaving = binio::get_u8(in, where.c_str());
    if (rec.leaving > 1)
        throw std::runtime_error(where + ": invalid leaving byte");

    const std::size_t zones = cfg.zone_count();
    rec.loc = Tensor({2, cfg.grid_rows, cfg.grid_cols});
    for (std::size_t channel = 0; channel < 2; ++channel) {
        const std::uint32_t nnz = binio::get_u32(in, where.c_str());
        if (nnz > zones)
            throw std::runtime_error(where + ": sparse entry count exceeds zone count");
        double* base = rec.loc.data() + channel * zones;
        for (std::uint32_t k = 0; k < nnz; ++k) {
            const std::uint32_t idx = binio::get_u32(in, where.c_str());
            if (idx >= zones)
                throw std::runtime_error(where + ": zone index out of range");
            base[idx] = binio::get_f64(in, where.c_str());
        }
    }
    rec.com = Tensor({2, kHoursPerDay});
    for (auto& v : rec.com.values()) v = binio::get_f64(in, where.c_str());
    return rec;
}

}  // namespace

void export_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open dataset file for writing: " +
                                 path.string());
    out.write(kMagic, 4);
    binio::put_u32(out, kFormatVersion);

    const std::string cfg = profiles::to_json(dataset.config).dump();
    binio::put_u64(out, cfg.size());
    binio::put_bytes(out, cfg.data(), cfg.size());

    binio::put_u64(out, dataset.labeled.size());
    binio::put_u64(out, dataset.pool.size());
    binio::put_u64(out, dataset.validation.size());

    const std::size_t zones = dataset.config.zone_count();
    for (std::size_t i = 0; i < dataset.labeled.size(); ++i)
        write_record(out, dataset.labeled[i].label > 0.5 ? 1 : 0,
                     dataset.labeled_truths[i], dataset.labeled[i].loc,
                     dataset.labeled[i].com, zones);
    for (std::size_t i = 0; i < dataset.pool.size(); ++i)
        write_record(out, kUnlabeledByte, dataset.pool_truths[i],
                     dataset.pool[i].loc, dataset.pool[i].com, zones);
    for (std::size_t i = 0; i < dataset.validation.size(); ++i)
        write_record(out, dataset.validation[i].label > 0.5 ? 1 : 0,
                     dataset.validation_truths[i], dataset.validation[i].loc,
                     dataset.validation[i].com, zones);
    if (!out) throw std::runtime_error("failed writing dataset file: " + path.string());
}

Dataset import_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open dataset file: " + path.string());

    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("dataset header: magic mismatch (not a CDDS file)");
    const std::uint32_t version = binio::get_u32(in, "dataset header");
    if (version != kFormatVersion)
        throw std::runtime_error("dataset header: unsupported format version " +
                                 std::to_string(version));

    const std::uint64_t cfg_len = binio::get_u64(in, "dataset header");
    const std::string cfg_text = binio::get_bytes(in, cfg_len, "config block");
    GenConfig config;
    try {
        config = profiles::gen_config_from_json(nlohmann::json::parse(cfg_text));
        config.validate();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("config block: ") + e.what());
    }

    const std::uint64_t n_labeled = binio::get_u64(in, "counts");
    const std::uint64_t n_pool = binio::get_u64(in, "counts");
    const std::uint64_t n_val = binio::get_u64(in, "counts");

    const std::vector<std::uint8_t> coverage = make_coverage(config);
    const SplitPlan plan = make_split(config);
    if (n_labeled != plan.labeled_ids.size() || n_pool != plan.pool_ids.size() ||
        n_val != plan.val_migrant.size())
        throw std::runtime_error(
            "counts: section sizes do not match the embedded config");

    Dataset ds;
    ds.config = config;
    std::size_t record_idx = 0;

    auto check_truth = [&](const RecordData& rec, const ResidentTruth& truth,
                           std::uint8_t expected_label) {
        const std::string where = "record " + std::to_string(record_idx);
        if (rec.label != expected_label)
            throw std::runtime_error(
                where + ": label disagrees with the embedded config's split");
        if ((rec.leaving != 0) != truth.leaving)
            throw std::runtime_error(
                where + ": leaving flag disagrees with the embedded config");
    };

    for (std::size_t k = 0; k < n_labeled; ++k, ++record_idx) {
        const std::size_t id = plan.labeled_ids[k];
        const bool migrant = plan.migrant[id] != 0;
        RecordData rec = read_record(in, config, record_idx);
        ResidentTruth truth = gen_truth(config, coverage, id, migrant);
        check_truth(rec, truth, migrant ? 1 : 0);
        ds.labeled.push_back(
            {std::move(rec.loc), std::move(rec.com), migrant ? 1.0 : 0.0});
        ds.labeled_truths.push_back(truth);
    }
    for (std::size_t k = 0; k < n_pool; ++k, ++record_idx) {
        const std::size_t id = plan.pool_ids[k];
        const bool migrant = plan.migrant[id] != 0;
        RecordData rec = read_record(in, config, record_idx);
        ResidentTruth truth = gen_truth(config, coverage, id, migrant);
        check_truth(rec, truth, kUnlabeledByte);
        ds.pool.push_back({std::move(rec.loc), std::move(rec.com)});
        ds.pool_truths.push_back(truth);
    }
    for (std::size_t k = 0; k < n_val; ++k, ++record_idx) {
        const std::size_t id = config.n_residents + k;
        const bool migrant = plan.val_migrant[k] != 0;
        RecordData rec = read_record(in, config, record_idx);
        ResidentTruth truth = gen_truth(config, coverage, id, migrant);
        check_truth(rec, truth, migrant ? 1 : 0);
        ds.validation.push_back(
            {std::move(rec.loc), std::move(rec.com), migrant ? 1.0 : 0.0});
        ds.validation_truths.push_back(truth);
    }

    if (in.peek() != EOF)
        throw std::runtime_error("trailing bytes after record " +
                                 std::to_string(record_idx));
    return ds;
}

}  // namespace cdcnn::datagen
