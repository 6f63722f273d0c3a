#pragma once

#include "imet/model/cnn.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace imet::experiment {

enum class Technique { equal, weighted, imet, baseline };

std::string_view to_string(Technique technique) noexcept;
Technique technique_from_string(std::string_view name);
/// Row label used in metrics.csv ("IMET", "Equal Class Sampling", ...).
std::string_view display_name(Technique technique) noexcept;

/// Everything a run needs. Unset per-class sizes and budget resolve against
/// the training split: k and m default to the smallest class size, the
/// budget to n_classes times that size.
struct RunConfig {
    Technique technique = Technique::imet;
    std::filesystem::path dataset_path;
    std::filesystem::path output_dir;
    model::TrainConfig train;
    std::optional<std::size_t> m;      // equal sampling: per-class draw
    std::optional<std::size_t> budget; // weighted / IMET: round size
    std::vector<std::size_t> dense_units = model::kDefaultDenseUnits;

    /// Training rounds this technique performs (initial round included).
    int training_rounds() const noexcept;
    void validate() const;

    /// Flat JSON form. `output_dir` is not echoed.
    nlohmann::json to_json() const;
    /// Overlays the keys present in `j` onto `base`; unknown keys are rejected.
    static RunConfig from_json(const nlohmann::json& j, RunConfig base);
    static RunConfig from_json(const nlohmann::json& j);
};

} // namespace imet::experiment
