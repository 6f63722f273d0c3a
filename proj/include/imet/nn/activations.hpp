#pragma once

#include "imet/nn/tensor.hpp"

namespace imet::nn {

Tensor relu(const Tensor& x);
/// Passes gradient where the pre-activation was strictly positive.
Tensor relu_backward(const Tensor& pre_activation, const Tensor& grad_output);

/// Logistic function, evaluated without overflow on either tail.
double sigmoid(double x) noexcept;

/// Max-subtracted softmax over a rank-1 tensor.
Tensor softmax(const Tensor& logits);

} // namespace imet::nn
