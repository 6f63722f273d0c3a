#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace imet::sampling {

/// Training-split indices grouped by true class.
struct ClassIndex {
    std::size_t n_classes = 0;
    std::vector<std::vector<std::size_t>> per_class;

    std::size_t total() const noexcept;
    std::size_t min_class_size() const noexcept;
};

enum class Provenance { initial, equal_part, weighted_part };

std::string_view to_string(Provenance provenance) noexcept;

/// The multiset of training indices used for one retraining round.
struct SampleBatch {
    std::vector<std::size_t> indices;
    std::vector<Provenance> provenance; // parallel to indices

    std::size_t size() const noexcept { return indices.size(); }
    bool empty() const noexcept { return indices.empty(); }
    void append(const SampleBatch& other);
    std::size_t count(Provenance which) const noexcept;
};

struct MisclassificationReport {
    std::vector<std::vector<std::size_t>> per_class_misclassified; // m_k
    std::vector<std::size_t> counts;                               // w_k = |m_k|
    std::vector<std::size_t> evaluated_per_class;
    std::vector<double> weights_percent;                           // p_k
    bool uniform_fallback = false;                                 // every evaluated sample was correct
};

struct EvalSubset {
    std::vector<std::size_t> indices;
    std::size_t per_class_m = 0;
};

} // namespace imet::sampling
