#pragma once

#include "imet/nn/layers.hpp"
#include "imet/nn/stack.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace imet::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moments are stored per parameter tensor in layer order (weights then bias
/// for every layer that has parameters).
struct AdamState {
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::uint64_t step_count = 0;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState zeros_for(std::span<const LayerParams> layers, const AdamConfig& config = {});
};

/// Bias-corrected ADAM with decoupled weight decay:
///   theta <- theta - lr * wd * theta, then the adaptive step.
void adam_step(std::span<LayerParams> layers, const Gradients& grads, AdamState& state);

} // namespace imet::nn
