#include "imet/model/cnn.hpp"

#include "imet/common/error.hpp"
#include "imet/nn/activations.hpp"
#include "imet/nn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace imet::model {

std::string_view to_string(HeadKind kind) noexcept { return kind == HeadKind::sigmoid ? "sigmoid" : "softmax"; }

CnnModel::CnnModel(InputShape input, std::size_t n_classes, nn::LayerStack layers)
    : input_(input), n_classes_(n_classes), stack_(std::move(layers)) {
    if (n_classes_ < 2) {
        fail(ErrorKind::invalid_config, "a classifier needs at least 2 classes, got " + std::to_string(n_classes_));
    }
    const auto out = stack_.output_shape({input_.channels, input_.height, input_.width});
    if (out != nn::Shape{output_units()}) {
        fail(ErrorKind::invalid_shape, "layer stack produces " + nn::shape_string(out) + " but a " +
                                           std::string(to_string(head_kind())) + " head over " +
                                           std::to_string(n_classes_) + " classes needs [" +
                                           std::to_string(output_units()) + "]");
    }
}

std::size_t CnnModel::flatten_width() const {
    nn::Shape shape{input_.channels, input_.height, input_.width};
    for (const auto& layer : stack_.layers()) {
        if (layer.kind == nn::LayerKind::flatten) {
            return nn::element_count(shape);
        }
        shape = nn::LayerStack(std::vector<nn::LayerParams>{layer}).output_shape(shape);
    }
    fail(ErrorKind::invalid_config, "model has no flatten layer");
}

nn::Tensor CnnModel::probabilities(const nn::Tensor& logits) const {
    if (head_kind() == HeadKind::sigmoid) {
        return nn::Tensor::vector({nn::sigmoid(logits[0])});
    }
    return nn::softmax(logits);
}

nn::Checkpoint CnnModel::to_checkpoint() const {
    nn::Checkpoint checkpoint;
    checkpoint.metadata["input"] = {{"height", input_.height}, {"width", input_.width}, {"channels", input_.channels}};
    checkpoint.metadata["n_classes"] = n_classes_;
    checkpoint.metadata["head"] = to_string(head_kind());
    checkpoint.layers.assign(stack_.layers().begin(), stack_.layers().end());
    return checkpoint;
}

CnnModel CnnModel::from_checkpoint(const nn::Checkpoint& checkpoint) {
    try {
        const auto& meta = checkpoint.metadata;
        InputShape input{meta.at("input").at("height").get<std::size_t>(),
                         meta.at("input").at("width").get<std::size_t>(),
                         meta.at("input").at("channels").get<std::size_t>()};
        CnnModel model(input, meta.at("n_classes").get<std::size_t>(), nn::LayerStack(checkpoint.layers));
        if (meta.at("head").get<std::string>() != to_string(model.head_kind())) {
            fail(ErrorKind::invalid_input, "checkpoint head does not match its class count");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::invalid_input, std::string("checkpoint metadata: ") + e.what());
    }
}

namespace {

void he_uniform(nn::Tensor& weights, std::size_t fan_in, RngStream& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& w : weights.values()) {
        w = rng.uniform(-limit, limit);
    }
}

} // namespace

CnnModel build_cnn(std::size_t input_height, std::size_t input_width, std::size_t channels, std::size_t n_classes,
                   std::uint64_t seed, std::span<const std::size_t> dense_units) {
    constexpr std::size_t kFilters = 32;
    constexpr std::size_t kKernel = 3;
    constexpr std::size_t kPool = 2;
    constexpr double kDropout = 0.5;

    if (n_classes < 2) {
        fail(ErrorKind::invalid_config, "a classifier needs at least 2 classes, got " + std::to_string(n_classes));
    }
    if (channels == 0) {
        fail(ErrorKind::invalid_shape, "input must have at least one channel");
    }
    std::vector<nn::LayerParams> layers{
        nn::LayerParams::conv2d(channels, kFilters, kKernel, kKernel, nn::Activation::relu),
        nn::LayerParams::maxpool2d(kPool),
        nn::LayerParams::conv2d(kFilters, kFilters, kKernel, kKernel, nn::Activation::relu),
        nn::LayerParams::maxpool2d(kPool),
        nn::LayerParams::dropout(kDropout),
        nn::LayerParams::flatten(),
    };
    nn::Shape features;
    try {
        features = nn::LayerStack(layers).output_shape({channels, input_height, input_width});
    } catch (const Error&) {
        fail(ErrorKind::invalid_shape, "input " + std::to_string(input_height) + "x" + std::to_string(input_width) +
                                           " is too small for two conv+pool stages");
    }
    if (features[0] == 0) {
        fail(ErrorKind::invalid_shape, "input collapses to zero features");
    }
    std::size_t width = features[0];
    for (auto units : dense_units) {
        if (units == 0) {
            fail(ErrorKind::invalid_config, "dense layer sizes must be positive");
        }
        layers.push_back(nn::LayerParams::dense(width, units, nn::Activation::relu));
        width = units;
    }
    const std::size_t head_units = n_classes == 2 ? 1 : n_classes;
    layers.push_back(nn::LayerParams::dense(width, head_units, nn::Activation::identity));

    RngStream rng(seed);
    for (auto& layer : layers) {
        if (layer.has_parameters()) {
            std::size_t fan_in = layer.weights.size() / layer.weights.dim(0);
            he_uniform(layer.weights, fan_in, rng);
        }
    }
    return CnnModel({input_height, input_width, channels}, n_classes, nn::LayerStack(std::move(layers)));
}

void TrainConfig::validate(int training_rounds) const {
    if (epochs_total < 1) {
        fail(ErrorKind::invalid_config, "epochs must be positive");
    }
    if (n_rep < 1) {
        fail(ErrorKind::invalid_config, "n_rep must be positive");
    }
    if (training_rounds > epochs_total) {
        fail(ErrorKind::invalid_config, std::to_string(epochs_total) + " epochs cannot cover " +
                                            std::to_string(training_rounds) + " training rounds");
    }
    if (batch_size == 0) {
        fail(ErrorKind::invalid_config, "batch_size must be positive");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        fail(ErrorKind::invalid_config, "learning rate must be positive");
    }
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
        fail(ErrorKind::invalid_config, "weight decay must be non-negative");
    }
}

std::vector<int> split_epochs(int epochs_total, int rounds) {
    if (rounds < 1 || epochs_total < rounds) {
        fail(ErrorKind::invalid_config, std::to_string(epochs_total) + " epochs cannot cover " +
                                            std::to_string(rounds) + " training rounds");
    }
    std::vector<int> epochs(static_cast<std::size_t>(rounds), epochs_total / rounds);
    epochs.back() += epochs_total % rounds;
    return epochs;
}

std::vector<double> train_epochs(CnnModel& model, const sampling::SampleBatch& batch,
                                 const data::ImageDataset& dataset, int epochs, const TrainConfig& config,
                                 RngStream& rng) {
    if (epochs < 1) {
        fail(ErrorKind::invalid_config, "train_epochs needs at least one epoch, got " + std::to_string(epochs));
    }
    if (batch.empty()) {
        fail(ErrorKind::invalid_batch, "training batch is empty");
    }
    if (config.batch_size == 0) {
        fail(ErrorKind::invalid_config, "batch_size must be positive");
    }
    for (auto idx : batch.indices) {
        if (idx >= dataset.size()) {
            fail(ErrorKind::invalid_batch, "batch index " + std::to_string(idx) + " outside dataset of " +
                                               std::to_string(dataset.size()));
        }
    }
    if (dataset.n_classes() != model.n_classes()) {
        fail(ErrorKind::invalid_config, "dataset has " + std::to_string(dataset.n_classes()) + " classes, model " +
                                            std::to_string(model.n_classes()));
    }
    if (InputShape{dataset.height(), dataset.width(), dataset.channels()} != model.input_shape()) {
        fail(ErrorKind::invalid_shape, "dataset image shape does not match the model input");
    }

    auto& stack = model.stack();
    if (!model.optimizer()) {
        model.optimizer() = nn::AdamState::zeros_for(stack.layers(), {config.learning_rate, config.weight_decay});
    }
    auto& adam = *model.optimizer();
    adam.learning_rate = config.learning_rate;
    adam.weight_decay = config.weight_decay;

    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(epochs));
    std::vector<std::size_t> order = batch.indices;
    nn::Gradients grads = nn::Gradients::zeros_for(stack.layers());
    nn::Tape tape;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        RngStream dropout_rng(rng.next_u64());
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            for (auto& g : grads.layers) {
                g.weights.fill(0.0);
                g.bias.fill(0.0);
            }
            for (std::size_t i = start; i < stop; ++i) {
                const auto label = static_cast<std::size_t>(dataset.label(order[i]));
                const nn::Tensor logits = stack.forward(dataset.image(order[i]), nn::Mode::training, dropout_rng, tape);
                const nn::Tensor probs = model.probabilities(logits);
                epoch_loss += nn::cross_entropy_loss(probs, label);
                stack.backward_into(tape, nn::cross_entropy_logit_gradient(probs, label), grads);
            }
            grads.scale(1.0 / static_cast<double>(stop - start));
            nn::adam_step(stack.layers(), grads, adam);
        }
        trace.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return trace;
}

int label_from_probabilities(HeadKind head, const nn::Tensor& probabilities) {
    if (head == HeadKind::sigmoid) {
        return probabilities[0] > 0.5 ? 1 : 0;
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < probabilities.size(); ++k) {
        if (probabilities[k] > probabilities[best]) {
            best = k;
        }
    }
    return static_cast<int>(best);
}

namespace {

void append_prediction(const CnnModel& model, const nn::Tensor& image, Prediction& out) {
    const nn::Tensor probs = model.probabilities(model.stack().forward(image));
    out.labels.push_back(label_from_probabilities(model.head_kind(), probs));
    if (model.head_kind() == HeadKind::sigmoid) {
        out.scores.push_back({1.0 - probs[0], probs[0]});
    } else {
        out.scores.emplace_back(probs.values().begin(), probs.values().end());
    }
}

} // namespace

Prediction predict(const CnnModel& model, std::span<const nn::Tensor> images) {
    const nn::Shape expected{model.input_shape().channels, model.input_shape().height, model.input_shape().width};
    Prediction out;
    for (const auto& image : images) {
        if (image.shape() != expected) {
            fail(ErrorKind::invalid_shape, "image shape " + nn::shape_string(image.shape()) +
                                               " does not match model input " + nn::shape_string(expected));
        }
        append_prediction(model, image, out);
    }
    return out;
}

Prediction predict(const CnnModel& model, const data::ImageDataset& dataset, std::span<const std::size_t> indices) {
    if (InputShape{dataset.height(), dataset.width(), dataset.channels()} != model.input_shape()) {
        fail(ErrorKind::invalid_shape, "dataset image shape does not match the model input");
    }
    Prediction out;
    out.labels.reserve(indices.size());
    out.scores.reserve(indices.size());
    for (auto idx : indices) {
        append_prediction(model, dataset.image(idx), out);
    }
    return out;
}

Prediction predict(const CnnModel& model, const data::ImageDataset& dataset) {
    std::vector<std::size_t> all(dataset.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
    }
    return predict(model, dataset, all);
}

} // namespace imet::model
