#ifndef CDCNN_PROFILES_HPP
#define CDCNN_PROFILES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cdcnn/cnc.hpp"
#include "cdcnn/datagen.hpp"
#include "cdcnn/model.hpp"

#include "json.hpp"

namespace cdcnn::profiles {

struct EvalConfig {
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<std::size_t> label_sizes{2000, 1000, 500, 250};  // descending
    std::vector<std::size_t> days_points{1, 5, 10, 15, 20};
    std::string report_format = "csv";  // "csv" or "json-lines"
    double threshold = 0.5;

    void validate() const;
    bool operator==(const EvalConfig&) const = default;
};

/// A named, self-consistent bundle of generation, architecture, training and
/// evaluation settings: the unit of reproducibility for every command.
struct RunProfile {
    std::string name;
    datagen::GenConfig gen;
    ModelConfig model;
    cnc::TrainConfig train;
    EvalConfig eval;

    void validate() const;
    bool operator==(const RunProfile&) const = default;
};

/// Built-in profiles: "desk-default", "null-signal" (no planted class
/// asymmetry), "paper-scale" (88x115 grid; data generation only).
std::vector<std::string> builtin_profile_names();
RunProfile builtin_profile(const std::string& name);

/// A built-in name, or a path to a JSON profile file.
RunProfile load_profile(const std::string& name_or_path);

// JSON conversions. Parsers reject unknown keys and ill-typed values with
// messages naming the offending key; absent keys keep their defaults.
nlohmann::json to_json(const datagen::GenConfig& c);
nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const cnc::TrainConfig& c);
nlohmann::json to_json(const EvalConfig& c);
nlohmann::json to_json(const RunProfile& p);

datagen::GenConfig gen_config_from_json(const nlohmann::json& j);
ModelConfig model_config_from_json(const nlohmann::json& j);
cnc::TrainConfig train_config_from_json(const nlohmann::json& j);
EvalConfig eval_config_from_json(const nlohmann::json& j);
RunProfile profile_from_json(const nlohmann::json& j);

}  // namespace cdcnn::profiles

#endif
