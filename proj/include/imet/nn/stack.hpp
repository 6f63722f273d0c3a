#pragma once

#include "imet/common/rng.hpp"
#include "imet/nn/layers.hpp"

#include <cstddef>
#include <vector>

namespace imet::nn {

enum class Mode { training, inference };

/// Per-layer parameter gradients, aligned with the stack's layers.
/// Parameter-free layers hold empty tensors.
struct ParamGrad {
    Tensor weights;
    Tensor bias;
};

struct Gradients {
    std::vector<ParamGrad> layers;

    static Gradients zeros_for(std::span<const LayerParams> layers);
    void scale(double factor);
    void accumulate(const Gradients& other);
};

/// What one forward pass recorded for its backward pass.
class Tape {
public:
    struct Record {
        Tensor input;
        Tensor pre_activation; // conv/dense output before ReLU
        std::vector<std::size_t> argmax;
        std::vector<double> dropout_mask;
    };

    bool recorded() const noexcept { return recorded_; }
    const std::vector<Record>& records() const noexcept { return records_; }
    void clear() noexcept {
        records_.clear();
        recorded_ = false;
    }

private:
    friend class LayerStack;
    std::vector<Record> records_;
    bool recorded_ = false;
};

/// Ordered layer stack over the fixed layer vocabulary. Produces head logits;
/// the probability head lives with the model.
class LayerStack {
public:
    LayerStack() = default;
    explicit LayerStack(std::vector<LayerParams> layers);

    std::span<LayerParams> layers() noexcept { return layers_; }
    std::span<const LayerParams> layers() const noexcept { return layers_; }
    std::size_t parameter_count() const noexcept;

    /// Output shape for a given input shape; throws invalid-shape when the chain breaks.
    Shape output_shape(const Shape& input_shape) const;

    Tensor forward(const Tensor& input, Mode mode, RngStream& rng, Tape& tape) const;
    Tensor forward(const Tensor& input) const; // inference, no tape

    /// Reverse pass from d(loss)/d(logits). Throws state error if `tape` holds no forward pass.
    Gradients backward(const Tape& tape, const Tensor& grad_logits) const;
    /// Accumulating form; also returns d(loss)/d(input).
    Tensor backward_into(const Tape& tape, const Tensor& grad_logits, Gradients& grads) const;

private:
    std::vector<LayerParams> layers_;
};

} // namespace imet::nn
