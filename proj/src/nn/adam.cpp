#include "imet/nn/adam.hpp"

#include "imet/common/error.hpp"

#include <cmath>

namespace imet::nn {

AdamState AdamState::zeros_for(std::span<const LayerParams> layers, const AdamConfig& config) {
    AdamState state;
    state.learning_rate = config.learning_rate;
    state.weight_decay = config.weight_decay;
    state.beta1 = config.beta1;
    state.beta2 = config.beta2;
    state.epsilon = config.epsilon;
    for (const auto& layer : layers) {
        if (!layer.has_parameters()) {
            continue;
        }
        for (const Tensor* p : {&layer.weights, &layer.bias}) {
            state.first_moment.push_back(Tensor::zeros_like(*p));
            state.second_moment.push_back(Tensor::zeros_like(*p));
        }
    }
    return state;
}

namespace {

void update_tensor(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, const AdamState& s, double bias1,
                   double bias2) {
    const double decay = s.learning_rate * s.weight_decay;
    for (std::size_t i = 0; i < param.size(); ++i) {
        param[i] -= decay * param[i];
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        param[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
}

} // namespace

void adam_step(std::span<LayerParams> layers, const Gradients& grads, AdamState& state) {
    if (grads.layers.size() != layers.size()) {
        fail(ErrorKind::invalid_shape, "adam_step: gradients cover " + std::to_string(grads.layers.size()) +
                                           " layers, parameters " + std::to_string(layers.size()));
    }
    // Validate everything before touching any parameter.
    std::size_t slot = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (!layers[l].has_parameters()) {
            continue;
        }
        const Tensor* params[] = {&layers[l].weights, &layers[l].bias};
        const Tensor* gs[] = {&grads.layers[l].weights, &grads.layers[l].bias};
        for (int t = 0; t < 2; ++t, ++slot) {
            if (slot >= state.first_moment.size() || gs[t]->shape() != params[t]->shape() ||
                state.first_moment[slot].shape() != params[t]->shape() ||
                state.second_moment[slot].shape() != params[t]->shape()) {
                fail(ErrorKind::invalid_shape, "adam_step: shape mismatch at layer " + std::to_string(l));
            }
        }
    }
    if (slot != state.first_moment.size()) {
        fail(ErrorKind::invalid_shape, "adam_step: optimizer state does not match the parameter set");
    }

    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double bias1 = 1.0 - std::pow(state.beta1, t);
    const double bias2 = 1.0 - std::pow(state.beta2, t);
    slot = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (!layers[l].has_parameters()) {
            continue;
        }
        update_tensor(layers[l].weights, grads.layers[l].weights, state.first_moment[slot],
                      state.second_moment[slot], state, bias1, bias2);
        ++slot;
        update_tensor(layers[l].bias, grads.layers[l].bias, state.first_moment[slot], state.second_moment[slot],
                      state, bias1, bias2);
        ++slot;
    }
}

} // namespace imet::nn
