#pragma once

#include "imet/nn/tensor.hpp"

#include <cstddef>

namespace imet::nn {

inline constexpr double kProbabilityClamp = 1e-12;

/// -log(probability of the true class).
///
/// A single-element `predicted` is a sigmoid output P(label == 1) and
/// `true_label` must be 0 or 1. Otherwise `predicted` is a softmax vector.
/// Probabilities are clamped to [1e-12, 1 - 1e-12] before the log.
double cross_entropy_loss(const Tensor& predicted, std::size_t true_label);

/// Gradient of cross_entropy_loss with respect to the head logits
/// (probability minus one-hot target, for both head kinds).
Tensor cross_entropy_logit_gradient(const Tensor& predicted, std::size_t true_label);

} // namespace imet::nn
