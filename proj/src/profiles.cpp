#include "cdcnn/profiles.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace cdcnn::profiles {
namespace {

using nlohmann::json;

// Reads one JSON object and rejects keys that were never asked for, so a
// typo in a profile fails loudly instead of silently keeping a default.
class ObjectReader {
  public:
    ObjectReader(const json& j, std::string what) : j_(j), what_(std::move(what)) {
        if (!j_.is_object())
            throw std::invalid_argument(what_ + ": expected a JSON object");
    }

    template <class F>
    void field(const char* key, F&& apply) {
        known_.emplace_back(key);
        if (j_.contains(key)) apply(j_.at(key), what_ + "." + key);
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (std::find(known_.begin(), known_.end(), item.key()) == known_.end())
                throw std::invalid_argument(what_ + ": unknown key '" + item.key() +
                                            "'");
    }

  private:
    const json& j_;
    std::string what_;
    std::vector<std::string> known_;
};

std::size_t as_size(const json& v, const std::string& ctx) {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0)
        return static_cast<std::size_t>(v.get<long long>());
    throw std::invalid_argument(ctx + ": expected a nonnegative integer");
}

std::uint64_t as_u64(const json& v, const std::string& ctx) {
    return static_cast<std::uint64_t>(as_size(v, ctx));
}

double as_real(const json& v, const std::string& ctx) {
    if (!v.is_number()) throw std::invalid_argument(ctx + ": expected a number");
    return v.get<double>();
}

bool as_bool(const json& v, const std::string& ctx) {
    if (!v.is_boolean()) throw std::invalid_argument(ctx + ": expected a boolean");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& ctx) {
    if (!v.is_string()) throw std::invalid_argument(ctx + ": expected a string");
    return v.get<std::string>();
}

datagen::Zone as_zone(const json& v, const std::string& ctx) {
    if (!v.is_array() || v.size() != 2)
        throw std::invalid_argument(ctx + ": expected a [row, col] pair");
    return datagen::Zone{static_cast<std::uint32_t>(as_size(v[0], ctx)),
                         static_cast<std::uint32_t>(as_size(v[1], ctx))};
}

template <class T>
std::vector<T> as_list(const json& v, const std::string& ctx,
                       T (*convert)(const json&, const std::string&)) {
    if (!v.is_array()) throw std::invalid_argument(ctx + ": expected an array");
    std::vector<T> out;
    for (const auto& item : v) out.push_back(convert(item, ctx));
    return out;
}

json zone_json(const datagen::Zone& z) { return json::array({z.row, z.col}); }

}  // namespace

void EvalConfig::validate() const {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(std::string("EvalConfig: ") + msg);
    };
    require(!seeds.empty(), "need at least one seed");
    require(!label_sizes.empty(), "need at least one label size");
    for (std::size_t i = 1; i < label_sizes.size(); ++i)
        require(label_sizes[i] < label_sizes[i - 1],
                "label_sizes must be strictly descending");
    require(!days_points.empty(), "need at least one days point");
    require(report_format == "csv" || report_format == "json-lines",
            "report_format must be 'csv' or 'json-lines'");
    require(threshold > 0.0 && threshold < 1.0, "threshold must be in (0, 1)");
}

void RunProfile::validate() const {
    gen.validate();
    model.validate();
    train.validate();
    eval.validate();
    if (model.grid_rows != gen.grid_rows || model.grid_cols != gen.grid_cols)
        throw std::invalid_argument(
            "RunProfile: model grid does not match the generator grid");
}

nlohmann::json to_json(const datagen::GenConfig& c) {
    json zones = json::array();
    for (const auto& z : c.industrial_zones) zones.push_back(zone_json(z));
    return json{{"grid_rows", c.grid_rows},
                {"grid_cols", c.grid_cols},
                {"n_residents", c.n_residents},
                {"labeled_fraction", c.labeled_fraction},
                {"migrant_prior", c.migrant_prior},
                {"days", c.days},
                {"downtown_center", zone_json(c.downtown_center)},
                {"ring_radius", c.ring_radius},
                {"industrial_zones", zones},
                {"peak_shift_hours", c.peak_shift_hours},
                {"noise_level", c.noise_level},
                {"station_coverage", c.station_coverage},
                {"leaving_slope", c.leaving_slope},
                {"val_fraction", c.val_fraction},
                {"seed", c.seed}};
}

nlohmann::json to_json(const ModelConfig& c) {
    return json{{"grid_rows", c.grid_rows},
                {"grid_cols", c.grid_cols},
                {"loc_filters", c.loc_filters},
                {"loc_filter_rows", c.loc_filter_rows},
                {"loc_filter_cols", c.loc_filter_cols},
                {"loc_pool", c.loc_pool},
                {"com_filters", c.com_filters},
                {"com_filter_width", c.com_filter_width},
                {"com_pool", c.com_pool},
                {"fusion_width", c.fusion_width},
                {"use_balancer", c.use_balancer}};
}

nlohmann::json to_json(const cnc::TrainConfig& c) {
    return json{
        {"learning_rate", c.learning_rate},
        {"l2_lambda", c.l2_lambda},
        {"batch_size", c.batch_size},
        {"pretrain_epochs", c.pretrain_epochs},
        {"finetune_epochs", c.finetune_epochs},
        {"cotrain_epochs", c.cotrain_epochs},
        {"cotrain_batch", c.cotrain_batch},
        {"max_rounds", c.max_rounds},
        {"convergence_tol", c.convergence_tol},
        {"pseudo_label_mode",
         c.pseudo_label_mode == cnc::PseudoLabelMode::Continuous ? "continuous"
                                                                 : "hard"},
        {"loss", c.loss == cnc::LossKind::Squared ? "squared" : "cross_entropy"},
        {"seed", c.seed}};
}

nlohmann::json to_json(const EvalConfig& c) {
    return json{{"seeds", c.seeds},
                {"label_sizes", c.label_sizes},
                {"days_points", c.days_points},
                {"report_format", c.report_format},
                {"threshold", c.threshold}};
}

nlohmann::json to_json(const RunProfile& p) {
    return json{{"name", p.name},
                {"gen", to_json(p.gen)},
                {"model", to_json(p.model)},
                {"train", to_json(p.train)},
                {"eval", to_json(p.eval)}};
}

datagen::GenConfig gen_config_from_json(const nlohmann::json& j) {
    datagen::GenConfig c;
    ObjectReader r(j, "gen");
    r.field("grid_rows", [&](const json& v, const std::string& x) { c.grid_rows = as_size(v, x); });
    r.field("grid_cols", [&](const json& v, const std::string& x) { c.grid_cols = as_size(v, x); });
    r.field("n_residents", [&](const json& v, const std::string& x) { c.n_residents = as_size(v, x); });
    r.field("labeled_fraction", [&](const json& v, const std::string& x) { c.labeled_fraction = as_real(v, x); });
    r.field("migrant_prior", [&](const json& v, const std::string& x) { c.migrant_prior = as_real(v, x); });
    r.field("days", [&](const json& v, const std::string& x) { c.days = as_size(v, x); });
    r.field("downtown_center", [&](const json& v, const std::string& x) { c.downtown_center = as_zone(v, x); });
    r.field("ring_radius", [&](const json& v, const std::string& x) { c.ring_radius = as_size(v, x); });
    r.field("industrial_zones", [&](const json& v, const std::string& x) {
        c.industrial_zones = as_list<datagen::Zone>(v, x, as_zone);
    });
    r.field("peak_shift_hours", [&](const json& v, const std::string& x) { c.peak_shift_hours = as_real(v, x); });
    r.field("noise_level", [&](const json& v, const std::string& x) { c.noise_level = as_real(v, x); });
    r.field("station_coverage", [&](const json& v, const std::string& x) { c.station_coverage = as_real(v, x); });
    r.field("leaving_slope", [&](const json& v, const std::string& x) { c.leaving_slope = as_real(v, x); });
    r.field("val_fraction", [&](const json& v, const std::string& x) { c.val_fraction = as_real(v, x); });
    r.field("seed", [&](const json& v, const std::string& x) { c.seed = as_u64(v, x); });
    r.finish();
    return c;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    ObjectReader r(j, "model");
    r.field("grid_rows", [&](const json& v, const std::string& x) { c.grid_rows = as_size(v, x); });
    r.field("grid_cols", [&](const json& v, const std::string& x) { c.grid_cols = as_size(v, x); });
    r.field("loc_filters", [&](const json& v, const std::string& x) { c.loc_filters = as_size(v, x); });
    r.field("loc_filter_rows", [&](const json& v, const std::string& x) { c.loc_filter_rows = as_size(v, x); });
    r.field("loc_filter_cols", [&](const json& v, const std::string& x) { c.loc_filter_cols = as_size(v, x); });
    r.field("loc_pool", [&](const json& v, const std::string& x) { c.loc_pool = as_size(v, x); });
    r.field("com_filters", [&](const json& v, const std::string& x) { c.com_filters = as_size(v, x); });
    r.field("com_filter_width", [&](const json& v, const std::string& x) { c.com_filter_width = as_size(v, x); });
    r.field("com_pool", [&](const json& v, const std::string& x) { c.com_pool = as_size(v, x); });
    r.field("fusion_width", [&](const json& v, const std::string& x) { c.fusion_width = as_size(v, x); });
    r.field("use_balancer", [&](const json& v, const std::string& x) { c.use_balancer = as_bool(v, x); });
    r.finish();
    return c;
}

cnc::TrainConfig train_config_from_json(const nlohmann::json& j) {
    cnc::TrainConfig c;
    ObjectReader r(j, "train");
    r.field("learning_rate", [&](const json& v, const std::string& x) { c.learning_rate = as_real(v, x); });
    r.field("l2_lambda", [&](const json& v, const std::string& x) { c.l2_lambda = as_real(v, x); });
    r.field("batch_size", [&](const json& v, const std::string& x) { c.batch_size = as_size(v, x); });
    r.field("pretrain_epochs", [&](const json& v, const std::string& x) { c.pretrain_epochs = as_size(v, x); });
    r.field("finetune_epochs", [&](const json& v, const std::string& x) { c.finetune_epochs = as_size(v, x); });
    r.field("cotrain_epochs", [&](const json& v, const std::string& x) { c.cotrain_epochs = as_size(v, x); });
    r.field("cotrain_batch", [&](const json& v, const std::string& x) { c.cotrain_batch = as_size(v, x); });
    r.field("max_rounds", [&](const json& v, const std::string& x) { c.max_rounds = as_size(v, x); });
    r.field("convergence_tol", [&](const json& v, const std::string& x) { c.convergence_tol = as_real(v, x); });
    r.field("pseudo_label_mode", [&](const json& v, const std::string& x) {
        const std::string mode = as_string(v, x);
        if (mode == "continuous") c.pseudo_label_mode = cnc::PseudoLabelMode::Continuous;
        else if (mode == "hard") c.pseudo_label_mode = cnc::PseudoLabelMode::Hard;
        else throw std::invalid_argument(x + ": expected 'continuous' or 'hard'");
    });
    r.field("loss", [&](const json& v, const std::string& x) {
        const std::string kind = as_string(v, x);
        if (kind == "squared") c.loss = cnc::LossKind::Squared;
        else if (kind == "cross_entropy") c.loss = cnc::LossKind::CrossEntropy;
        else throw std::invalid_argument(x + ": expected 'squared' or 'cross_entropy'");
    });
    r.field("seed", [&](const json& v, const std::string& x) { c.seed = as_u64(v, x); });
    r.finish();
    return c;
}

EvalConfig eval_config_from_json(const nlohmann::json& j) {
    EvalConfig c;
    ObjectReader r(j, "eval");
    r.field("seeds", [&](const json& v, const std::string& x) {
        c.seeds = as_list<std::uint64_t>(v, x, as_u64);
    });
    r.field("label_sizes", [&](const json& v, const std::string& x) {
        c.label_sizes = as_list<std::size_t>(v, x, as_size);
    });
    r.field("days_points", [&](const json& v, const std::string& x) {
        c.days_points = as_list<std::size_t>(v, x, as_size);
    });
    r.field("report_format", [&](const json& v, const std::string& x) { c.report_format = as_string(v, x); });
    r.field("threshold", [&](const json& v, const std::string& x) { c.threshold = as_real(v, x); });
    r.finish();
    return c;
}

RunProfile profile_from_json(const nlohmann::json& j) {
    RunProfile p;
    p.name = "custom";
    ObjectReader r(j, "profile");
    r.field("name", [&](const json& v, const std::string& x) { p.name = as_string(v, x); });
    r.field("gen", [&](const json& v, const std::string&) { p.gen = gen_config_from_json(v); });
    r.field("model", [&](const json& v, const std::string&) { p.model = model_config_from_json(v); });
    r.field("train", [&](const json& v, const std::string&) { p.train = train_config_from_json(v); });
    r.field("eval", [&](const json& v, const std::string&) { p.eval = eval_config_from_json(v); });
    r.finish();
    p.validate();
    return p;
}

std::vector<std::string> builtin_profile_names() {
    return {"desk-default", "null-signal", "paper-scale"};
}

RunProfile builtin_profile(const std::string& name) {
    RunProfile p;
    p.name = name;
    if (name == "desk-default") return p;
    if (name == "null-signal") {
        p.gen.n_residents = 4000;
        p.gen.ring_radius = 0;
        p.gen.industrial_zones.clear();
        p.gen.peak_shift_hours = 0.0;
        p.gen.leaving_slope = 0.0;
        return p;
    }
    if (name == "paper-scale") {
        p.gen.grid_rows = 88;
        p.gen.grid_cols = 115;
        p.gen.n_residents = 30000;
        p.gen.labeled_fraction = 25000.0 / 30000.0;
        p.gen.downtown_center = {44, 57};
        p.gen.ring_radius = 20;
        p.gen.industrial_zones = {{12, 16}, {12, 98}, {74, 16}, {74, 98}};
        p.model.grid_rows = 88;
        p.model.grid_cols = 115;
        p.model.loc_filter_rows = 5;
        p.model.loc_filter_cols = 5;
        p.model.loc_pool = 8;
        return p;
    }
    throw std::invalid_argument("unknown built-in profile '" + name + "'");
}

RunProfile load_profile(const std::string& name_or_path) {
    const auto names = builtin_profile_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end())
        return builtin_profile(name_or_path);

    const std::filesystem::path path(name_or_path);
    if (!std::filesystem::exists(path))
        throw std::invalid_argument("unknown profile '" + name_or_path +
                                    "': not a built-in name and no such file");
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open profile file: " + name_or_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("malformed profile file " + name_or_path + ": " +
                                 e.what());
    }
    RunProfile p = profile_from_json(j);
    if (!j.contains("name")) p.name = path.stem().string();
    return p;
}

}  // namespace cdcnn::profiles
