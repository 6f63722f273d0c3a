#include "imet/nn/checkpoint.hpp"

#include "imet/common/atomic_file.hpp"
#include "imet/common/error.hpp"

#include <bit>
#include <cstdint>

namespace imet::nn {

namespace {

constexpr int kFormatVersion = 1;

void append_le(std::vector<std::byte>& out, double value) {
    const auto bits = std::bit_cast<std::uint64_t>(value);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::byte>((bits >> (8 * i)) & 0xffU));
    }
}

double read_le(const std::string& blob, std::size_t offset) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[offset + i])) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

nlohmann::json layer_manifest(const LayerParams& layer) {
    nlohmann::json j;
    j["kind"] = to_string(layer.kind);
    j["weights_shape"] = layer.weights.shape();
    j["bias_shape"] = layer.bias.shape();
    switch (layer.kind) {
    case LayerKind::conv2d:
        j["kernel"] = {layer.hyper.kernel_h, layer.hyper.kernel_w};
        j["units"] = layer.hyper.units;
        j["activation"] = to_string(layer.hyper.activation);
        break;
    case LayerKind::dense:
        j["units"] = layer.hyper.units;
        j["activation"] = to_string(layer.hyper.activation);
        break;
    case LayerKind::maxpool2d:
        j["window"] = layer.hyper.pool_window;
        break;
    case LayerKind::dropout:
        j["rate"] = layer.hyper.dropout_rate;
        break;
    case LayerKind::flatten:
        break;
    }
    return j;
}

} // namespace

void save_checkpoint(const std::filesystem::path& manifest, const Checkpoint& checkpoint) {
    auto blob_path = manifest;
    blob_path.replace_extension(".bin");

    nlohmann::json j;
    j["format_version"] = kFormatVersion;
    j["blob"] = blob_path.filename().string();
    j["dtype"] = "float64-le";
    j["metadata"] = checkpoint.metadata;
    j["layers"] = nlohmann::json::array();

    std::vector<std::byte> blob;
    for (const auto& layer : checkpoint.layers) {
        layer.validate();
        j["layers"].push_back(layer_manifest(layer));
        for (double v : layer.weights.values()) {
            append_le(blob, v);
        }
        for (double v : layer.bias.values()) {
            append_le(blob, v);
        }
    }
    j["value_count"] = blob.size() / 8;

    write_file_atomic(blob_path, blob);
    write_file_atomic(manifest, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& manifest) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(manifest));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::invalid_input, "checkpoint manifest " + manifest.string() + ": " + e.what());
    }

    Checkpoint checkpoint;
    try {
        if (j.at("format_version").get<int>() != kFormatVersion || j.at("dtype").get<std::string>() != "float64-le") {
            fail(ErrorKind::invalid_input, "unsupported checkpoint format in " + manifest.string());
        }
        const auto blob_path = manifest.parent_path() / j.at("blob").get<std::string>();
        const std::string blob = read_file(blob_path);
        const auto expected = j.at("value_count").get<std::size_t>();
        if (blob.size() != expected * 8) {
            fail(ErrorKind::invalid_input, "checkpoint blob " + blob_path.string() + " has " +
                                               std::to_string(blob.size()) + " bytes, expected " +
                                               std::to_string(expected * 8));
        }
        checkpoint.metadata = j.at("metadata");

        std::size_t offset = 0;
        auto fill = [&](Tensor& t) {
            for (auto& v : t.values()) {
                if (offset + 8 > blob.size()) {
                    fail(ErrorKind::invalid_input, "checkpoint blob shorter than manifest shapes");
                }
                v = read_le(blob, offset);
                offset += 8;
            }
        };
        for (const auto& lj : j.at("layers")) {
            LayerParams layer;
            layer.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
            layer.weights = Tensor(lj.at("weights_shape").get<Shape>());
            layer.bias = Tensor(lj.at("bias_shape").get<Shape>());
            if (layer.kind == LayerKind::conv2d) {
                const auto kernel = lj.at("kernel").get<std::vector<std::size_t>>();
                if (kernel.size() != 2) {
                    fail(ErrorKind::invalid_input, "conv2d kernel entry must have two sizes");
                }
                layer.hyper.kernel_h = kernel[0];
                layer.hyper.kernel_w = kernel[1];
            }
            if (layer.has_parameters()) {
                layer.hyper.units = lj.at("units").get<std::size_t>();
                layer.hyper.activation = activation_from_string(lj.at("activation").get<std::string>());
            }
            if (layer.kind == LayerKind::maxpool2d) {
                layer.hyper.pool_window = lj.at("window").get<std::size_t>();
            }
            if (layer.kind == LayerKind::dropout) {
                layer.hyper.dropout_rate = lj.at("rate").get<double>();
            }
            fill(layer.weights);
            fill(layer.bias);
            layer.validate();
            checkpoint.layers.push_back(std::move(layer));
        }
        if (offset != blob.size()) {
            fail(ErrorKind::invalid_input, "checkpoint blob longer than manifest shapes");
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::invalid_input, "checkpoint manifest " + manifest.string() + ": " + e.what());
    }
    return checkpoint;
}

} // namespace imet::nn
