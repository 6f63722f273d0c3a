#include "imet/nn/stack.hpp"

#include "imet/common/error.hpp"
#include "imet/nn/activations.hpp"

namespace imet::nn {

Gradients Gradients::zeros_for(std::span<const LayerParams> layers) {
    Gradients grads;
    grads.layers.reserve(layers.size());
    for (const auto& layer : layers) {
        grads.layers.push_back({Tensor::zeros_like(layer.weights), Tensor::zeros_like(layer.bias)});
    }
    return grads;
}

void Gradients::scale(double factor) {
    for (auto& g : layers) {
        for (auto& v : g.weights.values()) {
            v *= factor;
        }
        for (auto& v : g.bias.values()) {
            v *= factor;
        }
    }
}

void Gradients::accumulate(const Gradients& other) {
    if (other.layers.size() != layers.size()) {
        fail(ErrorKind::invalid_shape, "cannot accumulate gradients of different layer counts");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& dst = layers[l];
        const auto& src = other.layers[l];
        if (dst.weights.shape() != src.weights.shape() || dst.bias.shape() != src.bias.shape()) {
            fail(ErrorKind::invalid_shape, "cannot accumulate gradients of different shapes");
        }
        for (std::size_t i = 0; i < dst.weights.size(); ++i) {
            dst.weights[i] += src.weights[i];
        }
        for (std::size_t i = 0; i < dst.bias.size(); ++i) {
            dst.bias[i] += src.bias[i];
        }
    }
}

LayerStack::LayerStack(std::vector<LayerParams> layers) : layers_(std::move(layers)) {
    for (const auto& layer : layers_) {
        layer.validate();
    }
}

std::size_t LayerStack::parameter_count() const noexcept {
    std::size_t total = 0;
    for (const auto& layer : layers_) {
        total += layer.parameter_count();
    }
    return total;
}

Shape LayerStack::output_shape(const Shape& input_shape) const {
    Shape shape = input_shape;
    for (const auto& layer : layers_) {
        switch (layer.kind) {
        case LayerKind::conv2d:
            if (shape.size() != 3 || shape[0] != layer.weights.dim(1) || shape[1] < layer.hyper.kernel_h ||
                shape[2] < layer.hyper.kernel_w) {
                fail(ErrorKind::invalid_shape, "conv2d cannot accept input " + shape_string(shape));
            }
            shape = {layer.weights.dim(0), shape[1] - layer.hyper.kernel_h + 1, shape[2] - layer.hyper.kernel_w + 1};
            break;
        case LayerKind::maxpool2d:
            if (shape.size() != 3 || shape[1] < layer.hyper.pool_window || shape[2] < layer.hyper.pool_window) {
                fail(ErrorKind::invalid_shape, "maxpool2d cannot accept input " + shape_string(shape));
            }
            shape = {shape[0], shape[1] / layer.hyper.pool_window, shape[2] / layer.hyper.pool_window};
            break;
        case LayerKind::dropout:
            break;
        case LayerKind::flatten:
            shape = {element_count(shape)};
            break;
        case LayerKind::dense:
            if (element_count(shape) != layer.weights.dim(1)) {
                fail(ErrorKind::invalid_shape, "dense layer expects " + std::to_string(layer.weights.dim(1)) +
                                                   " inputs, got " + shape_string(shape));
            }
            shape = {layer.weights.dim(0)};
            break;
        }
    }
    return shape;
}

Tensor LayerStack::forward(const Tensor& input, Mode mode, RngStream& rng, Tape& tape) const {
    tape.clear();
    tape.records_.reserve(layers_.size());
    Tensor x = input;
    for (const auto& layer : layers_) {
        Tape::Record record;
        record.input = x;
        switch (layer.kind) {
        case LayerKind::conv2d:
        case LayerKind::dense: {
            Tensor z = layer.kind == LayerKind::conv2d ? conv2d_forward(x, layer) : dense_forward(x, layer);
            if (layer.hyper.activation == Activation::relu) {
                x = relu(z);
                record.pre_activation = std::move(z);
            } else {
                x = std::move(z);
            }
            break;
        }
        case LayerKind::maxpool2d:
            x = maxpool2d_forward(x, layer.hyper.pool_window, &record.argmax);
            break;
        case LayerKind::dropout:
            x = dropout_forward(x, layer.hyper.dropout_rate, mode == Mode::training, rng, &record.dropout_mask);
            break;
        case LayerKind::flatten:
            x = x.reshaped({x.size()});
            break;
        }
        tape.records_.push_back(std::move(record));
    }
    tape.recorded_ = true;
    return x;
}

Tensor LayerStack::forward(const Tensor& input) const {
    Tensor x = input;
    RngStream unused(0);
    for (const auto& layer : layers_) {
        switch (layer.kind) {
        case LayerKind::conv2d:
        case LayerKind::dense:
            x = layer.kind == LayerKind::conv2d ? conv2d_forward(x, layer) : dense_forward(x, layer);
            if (layer.hyper.activation == Activation::relu) {
                x = relu(x);
            }
            break;
        case LayerKind::maxpool2d:
            x = maxpool2d_forward(x, layer.hyper.pool_window);
            break;
        case LayerKind::dropout:
            x = dropout_forward(x, layer.hyper.dropout_rate, false, unused);
            break;
        case LayerKind::flatten:
            x = x.reshaped({x.size()});
            break;
        }
    }
    return x;
}

Gradients LayerStack::backward(const Tape& tape, const Tensor& grad_logits) const {
    Gradients grads = Gradients::zeros_for(layers_);
    backward_into(tape, grad_logits, grads);
    return grads;
}

Tensor LayerStack::backward_into(const Tape& tape, const Tensor& grad_logits, Gradients& grads) const {
    if (!tape.recorded() || tape.records().size() != layers_.size()) {
        fail(ErrorKind::state, "backward called without a recorded forward pass");
    }
    if (grads.layers.size() != layers_.size()) {
        fail(ErrorKind::invalid_shape, "gradient container does not match the layer stack");
    }
    Tensor g = grad_logits;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& layer = layers_[l];
        const auto& record = tape.records()[l];
        switch (layer.kind) {
        case LayerKind::conv2d:
        case LayerKind::dense:
            if (layer.hyper.activation == Activation::relu) {
                g = relu_backward(record.pre_activation, g);
            }
            g = layer.kind == LayerKind::conv2d
                    ? conv2d_backward(record.input, layer, g, grads.layers[l].weights, grads.layers[l].bias)
                    : dense_backward(record.input, layer, g, grads.layers[l].weights, grads.layers[l].bias);
            break;
        case LayerKind::maxpool2d:
            g = maxpool2d_backward(record.input.shape(), g, record.argmax);
            break;
        case LayerKind::dropout:
            g = dropout_backward(g, record.dropout_mask);
            break;
        case LayerKind::flatten:
            g = g.reshaped(record.input.shape());
            break;
        }
    }
    return g;
}

} // namespace imet::nn
