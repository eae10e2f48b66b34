#ifndef CDCNN_CHECKPOINT_HPP
#define CDCNN_CHECKPOINT_HPP

#include <filesystem>

#include "cdcnn/model.hpp"

#include "json.hpp"

namespace cdcnn {

struct Checkpoint {
    ModelConfig config;
    CDCNNParams params;
    nlohmann::json metadata;  // sidecar content; empty object if absent
};

/// Versioned little-endian binary ("CDCN") holding the config and all
/// parameters in declaration order, plus a JSON sidecar at path + ".json"
/// with the config echo and the given training metadata.
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const CDCNNParams& params, const nlohmann::json& metadata);

/// The binary file is authoritative; the sidecar is read if present.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cdcnn

#endif
