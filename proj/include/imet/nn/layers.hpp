#pragma once

#include "imet/common/rng.hpp"
#include "imet/nn/tensor.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace imet::nn {

enum class LayerKind { conv2d, maxpool2d, dropout, flatten, dense };
enum class Activation { identity, relu };

std::string_view to_string(LayerKind kind) noexcept;
LayerKind layer_kind_from_string(std::string_view name);
std::string_view to_string(Activation activation) noexcept;
Activation activation_from_string(std::string_view name);

struct LayerHyper {
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t pool_window = 0;
    double dropout_rate = 0.0;
    std::size_t units = 0; // dense/conv output units (channels)
    Activation activation = Activation::identity;

    friend bool operator==(const LayerHyper&, const LayerHyper&) = default;
};

/// One layer of the stack. Conv weights are [out, in, kH, kW]; dense
/// weights are [out, in]. Parameter-free kinds carry empty tensors.
struct LayerParams {
    LayerKind kind = LayerKind::flatten;
    Tensor weights;
    Tensor bias;
    LayerHyper hyper;

    static LayerParams conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h,
                              std::size_t kernel_w, Activation activation);
    static LayerParams maxpool2d(std::size_t window);
    static LayerParams dropout(double rate);
    static LayerParams flatten();
    static LayerParams dense(std::size_t in_units, std::size_t out_units, Activation activation);

    bool has_parameters() const noexcept { return kind == LayerKind::conv2d || kind == LayerKind::dense; }
    std::size_t parameter_count() const noexcept { return weights.size() + bias.size(); }

    /// Checks the weight/bias/hyper consistency; throws invalid-shape or invalid-config.
    void validate() const;

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

// Each *_backward accumulates (+=) into the parameter gradients it is given
// and returns the gradient with respect to the layer input.

Tensor conv2d_forward(const Tensor& input, const LayerParams& layer);
Tensor conv2d_backward(const Tensor& input, const LayerParams& layer, const Tensor& grad_output,
                       Tensor& grad_weights, Tensor& grad_bias);

/// Stride equals window; trailing rows/columns that do not fill a window are dropped.
/// When `argmax` is non-null it receives, per output element, the flat input index of the max.
Tensor maxpool2d_forward(const Tensor& input, std::size_t window, std::vector<std::size_t>* argmax = nullptr);
Tensor maxpool2d_backward(const Shape& input_shape, const Tensor& grad_output, const std::vector<std::size_t>& argmax);

Tensor dense_forward(const Tensor& input, const LayerParams& layer);
Tensor dense_backward(const Tensor& input, const LayerParams& layer, const Tensor& grad_output, Tensor& grad_weights,
                      Tensor& grad_bias);

/// Inverted dropout. In training mode each element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); `mask` receives the
/// per-element multiplier. Inference mode is the identity.
Tensor dropout_forward(const Tensor& input, double rate, bool training, RngStream& rng,
                       std::vector<double>* mask = nullptr);
Tensor dropout_backward(const Tensor& grad_output, const std::vector<double>& mask);

} // namespace imet::nn
