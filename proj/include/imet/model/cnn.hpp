#pragma once

#include "imet/common/rng.hpp"
#include "imet/data/dataset.hpp"
#include "imet/nn/adam.hpp"
#include "imet/nn/checkpoint.hpp"
#include "imet/nn/stack.hpp"
#include "imet/sampling/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace imet::model {

enum class HeadKind { softmax, sigmoid };

std::string_view to_string(HeadKind kind) noexcept;

struct InputShape {
    std::size_t height = 28;
    std::size_t width = 28;
    std::size_t channels = 1;

    friend bool operator==(const InputShape&, const InputShape&) = default;
};

inline const std::vector<std::size_t> kDefaultDenseUnits{25, 16};

/// conv(32,3x3) -> pool2 -> conv(32,3x3) -> pool2 -> dropout(0.5) -> flatten
/// -> dense stack (ReLU) -> probability head.
///
/// A two-class model has one sigmoid output unit; otherwise the head is a
/// softmax over n_classes units. The optimizer state lives with the model so
/// that successive training rounds continue the same ADAM trajectory.
class CnnModel {
public:
    CnnModel(InputShape input, std::size_t n_classes, nn::LayerStack layers);

    const InputShape& input_shape() const noexcept { return input_; }
    std::size_t n_classes() const noexcept { return n_classes_; }
    HeadKind head_kind() const noexcept { return n_classes_ == 2 ? HeadKind::sigmoid : HeadKind::softmax; }
    std::size_t output_units() const noexcept { return head_kind() == HeadKind::sigmoid ? 1 : n_classes_; }

    const nn::LayerStack& stack() const noexcept { return stack_; }
    nn::LayerStack& stack() noexcept { return stack_; }
    std::size_t parameter_count() const noexcept { return stack_.parameter_count(); }
    /// Width of the flatten layer's output.
    std::size_t flatten_width() const;

    /// Head probabilities: one sigmoid value, or the softmax vector.
    nn::Tensor probabilities(const nn::Tensor& logits) const;

    std::optional<nn::AdamState>& optimizer() noexcept { return optimizer_; }

    nn::Checkpoint to_checkpoint() const;
    static CnnModel from_checkpoint(const nn::Checkpoint& checkpoint);
    void save(const std::filesystem::path& manifest) const { nn::save_checkpoint(manifest, to_checkpoint()); }
    static CnnModel load(const std::filesystem::path& manifest) { return from_checkpoint(nn::load_checkpoint(manifest)); }

private:
    InputShape input_;
    std::size_t n_classes_;
    nn::LayerStack stack_;
    std::optional<nn::AdamState> optimizer_;
};

/// Builds the architecture with He-uniform weights and zero biases.
/// Throws invalid-shape when the input cannot pass two conv+pool stages.
CnnModel build_cnn(std::size_t input_height, std::size_t input_width, std::size_t channels, std::size_t n_classes,
                   std::uint64_t seed, std::span<const std::size_t> dense_units = kDefaultDenseUnits);

struct TrainConfig {
    int epochs_total = 100;
    int n_rep = 5;
    std::size_t initial_per_class_k = 0; // 0: smallest class size
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    std::uint64_t seed = 0;

    void validate(int training_rounds) const;
};

/// Epochs for each of `rounds` training rounds: an even split of the total
/// with the remainder added to the last round.
std::vector<int> split_epochs(int epochs_total, int rounds);

/// Trains on `batch` (indices into `dataset`) for `epochs` passes. The batch
/// order is reshuffled from `rng` every epoch; mini-batch gradients are
/// averaged. Returns the mean training loss of each epoch.
std::vector<double> train_epochs(CnnModel& model, const sampling::SampleBatch& batch,
                                 const data::ImageDataset& dataset, int epochs, const TrainConfig& config,
                                 RngStream& rng);

struct Prediction {
    std::vector<int> labels;
    /// Per-sample class probabilities (two columns {1-p, p} for a sigmoid head).
    std::vector<std::vector<double>> scores;
};

/// Softmax head: argmax with ties to the lowest index. Sigmoid head: label 1 iff score > 0.5.
int label_from_probabilities(HeadKind head, const nn::Tensor& probabilities);

Prediction predict(const CnnModel& model, std::span<const nn::Tensor> images);
Prediction predict(const CnnModel& model, const data::ImageDataset& dataset, std::span<const std::size_t> indices);
Prediction predict(const CnnModel& model, const data::ImageDataset& dataset);

} // namespace imet::model
