#pragma once

#include "imet/common/rng.hpp"
#include "imet/data/dataset.hpp"
#include "imet/model/cnn.hpp"
#include "imet/sampling/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace imet::sampling {

/// Groups sample indices by label. Every class in [0, n_classes) must be present.
ClassIndex partition_by_class(std::span<const int> labels, std::size_t n_classes);

/// m indices from every class, without replacement within a class.
SampleBatch equal_sample(const ClassIndex& index, std::size_t m, RngStream& rng,
                         Provenance provenance = Provenance::equal_part);

/// p_k = 100 * w_k / sum(w). All-zero counts yield the uniform vector 100 / n.
std::vector<double> misclassification_weights(std::span<const std::size_t> counts);

/// Largest-remainder apportionment of `budget` in proportion to `weights`
/// (normalized by their sum). Remainder ties go to the lower class index.
std::vector<std::size_t> apportion_quotas(std::span<const double> weights, std::size_t budget);

/// Builds the report from predictions over `eval_indices` (parallel to `predicted`).
MisclassificationReport misclassification_report(std::span<const std::size_t> eval_indices,
                                                 std::span<const int> true_labels, std::span<const int> predicted,
                                                 std::size_t n_classes);

/// Predicts every evaluated training index with `model` and builds the report.
MisclassificationReport evaluate_misclassifications(const model::CnnModel& model,
                                                    std::span<const std::size_t> eval_indices,
                                                    const data::ImageDataset& dataset);

/// Class k receives quota_k of the budget by largest remainder over p_k.
/// Each quota is drawn without replacement from the misclassified pool m_k,
/// then from the rest of class k; a quota beyond the class size continues
/// with fresh passes over the class.
SampleBatch weighted_sample(const ClassIndex& index, const MisclassificationReport& report, std::size_t budget,
                            RngStream& rng);

/// Half equal, half weighted. The equal part holds floor(ceil(B/2) / n)
/// per class; the weighted part spends floor(B/2). The batch never exceeds
/// the budget and the parts differ in size by less than n.
SampleBatch imet_sample(const ClassIndex& index, const MisclassificationReport& report, std::size_t budget,
                        RngStream& rng);

std::size_t imet_equal_per_class(std::size_t budget, std::size_t n_classes) noexcept;
std::size_t imet_weighted_budget(std::size_t budget) noexcept;

/// min_k |d_k| indices from every class, drawn once per technique run.
EvalSubset build_eval_subset(const ClassIndex& index, RngStream& rng);

struct ClassComposition {
    std::size_t initial = 0;
    std::size_t equal = 0;
    std::size_t weighted = 0;

    std::size_t total() const noexcept { return initial + equal + weighted; }
};

/// Per-class counts of each provenance tag in `batch`.
std::vector<ClassComposition> batch_composition(const SampleBatch& batch, std::span<const int> labels,
                                                std::size_t n_classes);

} // namespace imet::sampling
