#pragma once

#include "imet/nn/layers.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <vector>

namespace imet::nn {

/// On-disk model: a JSON manifest (layer kinds, shapes, hyperparameters and
/// caller metadata) next to a flat little-endian float64 blob holding every
/// parameter tensor, weights then bias, in layer order.
struct Checkpoint {
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<LayerParams> layers;
};

/// Writes `<manifest>` and `<manifest stem>.bin` atomically.
void save_checkpoint(const std::filesystem::path& manifest, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& manifest);

} // namespace imet::nn
