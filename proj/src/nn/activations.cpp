#include "imet/nn/activations.hpp"
#include "imet/nn/loss.hpp"

#include "imet/common/error.hpp"

#include <algorithm>
#include <cmath>

namespace imet::nn {

Tensor relu(const Tensor& x) {
    Tensor out = Tensor::zeros_like(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] > 0.0 ? x[i] : 0.0;
    }
    return out;
}

Tensor relu_backward(const Tensor& pre_activation, const Tensor& grad_output) {
    if (pre_activation.shape() != grad_output.shape()) {
        fail(ErrorKind::invalid_shape, "relu_backward: gradient shape " + shape_string(grad_output.shape()) +
                                           " != " + shape_string(pre_activation.shape()));
    }
    Tensor out = Tensor::zeros_like(grad_output);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = pre_activation[i] > 0.0 ? grad_output[i] : 0.0;
    }
    return out;
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor softmax(const Tensor& logits) {
    if (logits.rank() != 1 || logits.size() < 2) {
        fail(ErrorKind::invalid_shape, "softmax expects a rank-1 tensor with at least 2 entries, got " +
                                           shape_string(logits.shape()));
    }
    const auto values = logits.values();
    const double max = *std::max_element(values.begin(), values.end());
    Tensor out = Tensor::zeros_like(logits);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - max);
        sum += out[i];
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] /= sum;
    }
    return out;
}

namespace {

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

void check_label(const Tensor& predicted, std::size_t true_label) {
    const std::size_t classes = predicted.size() == 1 ? 2 : predicted.size();
    if (predicted.empty()) {
        fail(ErrorKind::invalid_shape, "cross-entropy: empty prediction");
    }
    if (true_label >= classes) {
        fail(ErrorKind::invalid_label, "cross-entropy: label " + std::to_string(true_label) + " out of range for " +
                                           std::to_string(classes) + " classes");
    }
}

} // namespace

double cross_entropy_loss(const Tensor& predicted, std::size_t true_label) {
    check_label(predicted, true_label);
    if (predicted.size() == 1) {
        const double p1 = predicted[0];
        return -std::log(clamp_probability(true_label == 1 ? p1 : 1.0 - p1));
    }
    return -std::log(clamp_probability(predicted[true_label]));
}

Tensor cross_entropy_logit_gradient(const Tensor& predicted, std::size_t true_label) {
    check_label(predicted, true_label);
    Tensor grad = predicted;
    if (predicted.size() == 1) {
        grad[0] -= true_label == 1 ? 1.0 : 0.0;
    } else {
        grad[true_label] -= 1.0;
    }
    return grad;
}

} // namespace imet::nn
