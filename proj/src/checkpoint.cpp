#include "cdcnn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdcnn/profiles.hpp"

#include "binio.hpp"

namespace cdcnn {
namespace {

constexpr char kMagic[4] = {'C', 'D', 'C', 'N'};
constexpr std::uint32_t kVersion = 1;

void write_config(std::ostream& out, const ModelConfig& c) {
    for (std::size_t v : {c.grid_rows, c.grid_cols, c.loc_filters, c.loc_filter_rows,
                          c.loc_filter_cols, c.loc_pool, c.com_filters,
                          c.com_filter_width, c.com_pool, c.fusion_width})
        binio::put_u32(out, static_cast<std::uint32_t>(v));
    binio::put_u8(out, c.use_balancer ? 1 : 0);
}

ModelConfig read_config(std::istream& in) {
    ModelConfig c;
    std::size_t* fields[] = {&c.grid_rows,       &c.grid_cols,
                             &c.loc_filters,     &c.loc_filter_rows,
                             &c.loc_filter_cols, &c.loc_pool,
                             &c.com_filters,     &c.com_filter_width,
                             &c.com_pool,        &c.fusion_width};
    for (std::size_t* f : fields) *f = binio::get_u32(in, "checkpoint config");
    c.use_balancer = binio::get_u8(in, "checkpoint config") != 0;
    return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const CDCNNParams& params, const nlohmann::json& metadata) {
    config.validate();
    const std::vector<double> flat = flatten(params);

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open checkpoint file for writing: " +
                                 path.string());
    binio::put_bytes(out, kMagic, sizeof kMagic);
    binio::put_u32(out, kVersion);
    write_config(out, config);
    binio::put_u64(out, flat.size());
    for (double v : flat) binio::put_f64(out, v);
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
    out.close();

    nlohmann::json sidecar{{"format", "CDCN"},
                           {"format_version", kVersion},
                           {"model", profiles::to_json(config)},
                           {"parameter_count", flat.size()},
                           {"metadata", metadata}};
    const std::filesystem::path side = path.string() + ".json";
    std::ofstream sout(side);
    if (!sout)
        throw std::runtime_error("cannot open checkpoint sidecar for writing: " +
                                 side.string());
    sout << sidecar.dump(2) << "\n";
    if (!sout)
        throw std::runtime_error("failed writing checkpoint sidecar: " + side.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint file: " + path.string());

    const std::string magic = binio::get_bytes(in, sizeof kMagic, "checkpoint header");
    if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("checkpoint header: magic mismatch (not a CDCN file)");
    const std::uint32_t version = binio::get_u32(in, "checkpoint header");
    if (version != kVersion)
        throw std::runtime_error("checkpoint header: unsupported format version " +
                                 std::to_string(version));

    Checkpoint ck;
    ck.config = read_config(in);
    ck.config.validate();
    ck.params = init_cdcnn(ck.config, 0);  // structure only; overwritten below

    const std::uint64_t count = binio::get_u64(in, "checkpoint parameters");
    if (count != param_count(ck.params))
        throw std::runtime_error(
            "checkpoint parameters: count " + std::to_string(count) +
            " does not match the embedded config (expected " +
            std::to_string(param_count(ck.params)) + ")");
    std::vector<double> flat(count);
    for (auto& v : flat) v = binio::get_f64(in, "checkpoint parameters");
    if (in.peek() != std::char_traits<char>::eof())
        throw std::runtime_error("trailing bytes after checkpoint parameters");
    unflatten(ck.params, flat);

    ck.metadata = nlohmann::json::object();
    const std::filesystem::path side = path.string() + ".json";
    if (std::filesystem::exists(side)) {
        std::ifstream sin(side);
        nlohmann::json j;
        try {
            sin >> j;
        } catch (const std::exception& e) {
            throw std::runtime_error("malformed checkpoint sidecar " + side.string() +
                                     ": " + e.what());
        }
        if (j.contains("metadata")) ck.metadata = j.at("metadata");
    }
    return ck;
}

}  // namespace cdcnn
