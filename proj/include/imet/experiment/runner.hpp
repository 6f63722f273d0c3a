#pragma once

#include "imet/common/rng.hpp"
#include "imet/data/dataset.hpp"
#include "imet/experiment/config.hpp"
#include "imet/metrics/metrics.hpp"
#include "imet/model/cnn.hpp"
#include "imet/sampling/samplers.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace imet::experiment {

/// What a technique run needs from the model: train on a batch of training
/// indices, and predict. Tests substitute scripted learners.
class Learner {
public:
    virtual ~Learner() = default;
    virtual std::vector<double> train(const sampling::SampleBatch& batch, int epochs, RngStream& rng) = 0;
    /// Predicted labels for training-split indices.
    virtual std::vector<int> predict_train(std::span<const std::size_t> train_indices) = 0;
    virtual model::Prediction predict_split(const data::ImageDataset& split) = 0;
    virtual std::size_t parameter_count() const = 0;
};

class CnnLearner final : public Learner {
public:
    CnnLearner(model::CnnModel& model, const data::ImageDataset& train_split, const model::TrainConfig& config)
        : model_(model), train_(train_split), config_(config) {}

    std::vector<double> train(const sampling::SampleBatch& batch, int epochs, RngStream& rng) override;
    std::vector<int> predict_train(std::span<const std::size_t> train_indices) override;
    model::Prediction predict_split(const data::ImageDataset& split) override;
    std::size_t parameter_count() const override { return model_.parameter_count(); }

private:
    model::CnnModel& model_;
    const data::ImageDataset& train_;
    model::TrainConfig config_;
};

struct RoundRecord {
    int round = 0; // 0 is the initial round of weighted / IMET
    std::string kind;
    int epochs = 0;
    std::vector<sampling::ClassComposition> composition;
    std::vector<std::size_t> weighted_quotas; // empty when the round has no weighted part
    std::optional<sampling::MisclassificationReport> misclassification;
    std::vector<double> loss_trace;
    sampling::SampleBatch batch; // not serialized; digest only
    std::uint64_t batch_digest = 0;
};

struct RunReport {
    RunConfig config;
    std::size_t n_classes = 0;
    std::vector<std::size_t> train_class_sizes;
    std::size_t resolved_per_class = 0; // m (equal) or k (weighted / IMET)
    std::size_t resolved_budget = 0;
    std::vector<std::size_t> eval_subset; // IMET only
    std::size_t parameters = 0;
    std::vector<RoundRecord> rounds;
    std::size_t samples_with_duplicates = 0;
    std::size_t samples_unique = 0;
    metrics::MetricsReport test_metrics;
    std::optional<metrics::MetricsReport> validation_metrics;
    double wall_clock_seconds = 0.0;
};

using RoundObserver = std::function<void(const RoundRecord&, int total_rounds)>;

/// Runs the configured technique on normalized splits. Only the training
/// split feeds sampling and training; the test split is evaluated once at
/// the end and the validation split is only reported.
RunReport run_technique(const RunConfig& config, const data::DatasetSplits& data, Learner& learner,
                        const RoundObserver& observer = {});

RunReport run_equal(RunConfig config, const data::DatasetSplits& data, Learner& learner);
RunReport run_weighted(RunConfig config, const data::DatasetSplits& data, Learner& learner);
RunReport run_imet(RunConfig config, const data::DatasetSplits& data, Learner& learner);
RunReport run_baseline(RunConfig config, const data::DatasetSplits& data, Learner& learner);

/// Loads and normalizes `config.dataset_path`, builds the CNN and runs.
struct CompletedRun {
    RunReport report;
    model::CnnModel model;
};
CompletedRun run_from_config(const RunConfig& config, const RoundObserver& observer = {});

/// FNV-1a over the index sequence.
std::uint64_t batch_digest(std::span<const std::size_t> indices) noexcept;

} // namespace imet::experiment
