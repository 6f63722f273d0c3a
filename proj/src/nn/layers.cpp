#include "imet/nn/layers.hpp"

#include "imet/common/error.hpp"

#include <string>

namespace imet::nn {

std::string_view to_string(LayerKind kind) noexcept {
    switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::dropout: return "dropout";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
    }
    return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
    for (auto kind : {LayerKind::conv2d, LayerKind::maxpool2d, LayerKind::dropout, LayerKind::flatten,
                      LayerKind::dense}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    fail(ErrorKind::invalid_config, "unknown layer kind '" + std::string(name) + "'");
}

std::string_view to_string(Activation activation) noexcept {
    return activation == Activation::relu ? "relu" : "identity";
}

Activation activation_from_string(std::string_view name) {
    if (name == "relu") {
        return Activation::relu;
    }
    if (name == "identity") {
        return Activation::identity;
    }
    fail(ErrorKind::invalid_config, "unknown activation '" + std::string(name) + "'");
}

LayerParams LayerParams::conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h,
                                std::size_t kernel_w, Activation activation) {
    LayerParams layer;
    layer.kind = LayerKind::conv2d;
    layer.weights = Tensor({out_channels, in_channels, kernel_h, kernel_w});
    layer.bias = Tensor({out_channels});
    layer.hyper.kernel_h = kernel_h;
    layer.hyper.kernel_w = kernel_w;
    layer.hyper.units = out_channels;
    layer.hyper.activation = activation;
    layer.validate();
    return layer;
}

LayerParams LayerParams::maxpool2d(std::size_t window) {
    LayerParams layer;
    layer.kind = LayerKind::maxpool2d;
    layer.hyper.pool_window = window;
    layer.validate();
    return layer;
}

LayerParams LayerParams::dropout(double rate) {
    LayerParams layer;
    layer.kind = LayerKind::dropout;
    layer.hyper.dropout_rate = rate;
    layer.validate();
    return layer;
}

LayerParams LayerParams::flatten() {
    LayerParams layer;
    layer.kind = LayerKind::flatten;
    return layer;
}

LayerParams LayerParams::dense(std::size_t in_units, std::size_t out_units, Activation activation) {
    LayerParams layer;
    layer.kind = LayerKind::dense;
    layer.weights = Tensor({out_units, in_units});
    layer.bias = Tensor({out_units});
    layer.hyper.units = out_units;
    layer.hyper.activation = activation;
    layer.validate();
    return layer;
}

void LayerParams::validate() const {
    switch (kind) {
    case LayerKind::conv2d:
        if (weights.rank() != 4 || weights.dim(0) == 0 || weights.dim(1) == 0 || weights.dim(2) == 0 ||
            weights.dim(3) == 0) {
            fail(ErrorKind::invalid_shape, "conv2d weights must be [out, in, kH, kW], got " +
                                               shape_string(weights.shape()));
        }
        if (bias.shape() != Shape{weights.dim(0)} || hyper.kernel_h != weights.dim(2) ||
            hyper.kernel_w != weights.dim(3) || hyper.units != weights.dim(0)) {
            fail(ErrorKind::invalid_shape, "conv2d bias/hyperparameters inconsistent with weights " +
                                               shape_string(weights.shape()));
        }
        break;
    case LayerKind::dense:
        if (weights.rank() != 2 || weights.dim(0) == 0 || weights.dim(1) == 0) {
            fail(ErrorKind::invalid_shape, "dense weights must be [out, in], got " + shape_string(weights.shape()));
        }
        if (bias.shape() != Shape{weights.dim(0)} || hyper.units != weights.dim(0)) {
            fail(ErrorKind::invalid_shape, "dense bias/units inconsistent with weights " +
                                               shape_string(weights.shape()));
        }
        break;
    case LayerKind::maxpool2d:
        if (hyper.pool_window < 1) {
            fail(ErrorKind::invalid_config, "maxpool2d window must be positive");
        }
        break;
    case LayerKind::dropout:
        if (!(hyper.dropout_rate >= 0.0 && hyper.dropout_rate < 1.0)) {
            fail(ErrorKind::invalid_config, "dropout rate must lie in [0, 1), got " +
                                                std::to_string(hyper.dropout_rate));
        }
        break;
    case LayerKind::flatten:
        break;
    }
    if (!has_parameters() && (!weights.empty() || !bias.empty())) {
        fail(ErrorKind::invalid_shape, std::string(to_string(kind)) + " layer cannot carry parameters");
    }
}

namespace {

void require_chw(const Tensor& input, std::string_view op) {
    if (input.rank() != 3) {
        fail(ErrorKind::invalid_shape, std::string(op) + " expects [C, H, W] input, got " +
                                           shape_string(input.shape()));
    }
}

Shape conv_output_shape(const Tensor& input, const LayerParams& layer) {
    require_chw(input, "conv2d");
    if (layer.kind != LayerKind::conv2d) {
        fail(ErrorKind::invalid_config, "conv2d called with a " + std::string(to_string(layer.kind)) + " layer");
    }
    const std::size_t kh = layer.weights.dim(2);
    const std::size_t kw = layer.weights.dim(3);
    if (input.dim(0) != layer.weights.dim(1)) {
        fail(ErrorKind::invalid_shape, "conv2d input has " + std::to_string(input.dim(0)) +
                                           " channels but kernel expects " + std::to_string(layer.weights.dim(1)));
    }
    if (input.dim(1) < kh || input.dim(2) < kw) {
        fail(ErrorKind::invalid_shape, "conv2d input " + shape_string(input.shape()) + " smaller than kernel " +
                                           shape_string(layer.weights.shape()));
    }
    return {layer.weights.dim(0), input.dim(1) - kh + 1, input.dim(2) - kw + 1};
}

} // namespace

Tensor conv2d_forward(const Tensor& input, const LayerParams& layer) {
    Tensor out(conv_output_shape(input, layer));
    const std::size_t in_c = input.dim(0), in_w = input.dim(2);
    const std::size_t out_c = out.dim(0), out_h = out.dim(1), out_w = out.dim(2);
    const std::size_t kh = layer.weights.dim(2), kw = layer.weights.dim(3);
    const double* w = layer.weights.data();
    const double* in = input.data();
    double* o = out.data();

    for (std::size_t oc = 0; oc < out_c; ++oc) {
        double* plane = o + oc * out_h * out_w;
        for (std::size_t i = 0; i < out_h * out_w; ++i) {
            plane[i] = layer.bias[oc];
        }
        for (std::size_t ic = 0; ic < in_c; ++ic) {
            const double* in_plane = in + ic * input.dim(1) * in_w;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const double k = w[((oc * in_c + ic) * kh + ky) * kw + kx];
                    for (std::size_t y = 0; y < out_h; ++y) {
                        const double* src = in_plane + (y + ky) * in_w + kx;
                        double* dst = plane + y * out_w;
                        for (std::size_t x = 0; x < out_w; ++x) {
                            dst[x] += k * src[x];
                        }
                    }
                }
            }
        }
    }
    return out;
}

Tensor conv2d_backward(const Tensor& input, const LayerParams& layer, const Tensor& grad_output,
                       Tensor& grad_weights, Tensor& grad_bias) {
    const Shape out_shape = conv_output_shape(input, layer);
    if (grad_output.shape() != out_shape || grad_weights.shape() != layer.weights.shape() ||
        grad_bias.shape() != layer.bias.shape()) {
        fail(ErrorKind::invalid_shape, "conv2d_backward: gradient shapes do not match the layer");
    }
    Tensor grad_input = Tensor::zeros_like(input);
    const std::size_t in_c = input.dim(0), in_h = input.dim(1), in_w = input.dim(2);
    const std::size_t out_c = out_shape[0], out_h = out_shape[1], out_w = out_shape[2];
    const std::size_t kh = layer.weights.dim(2), kw = layer.weights.dim(3);
    const double* w = layer.weights.data();
    const double* in = input.data();
    const double* go = grad_output.data();
    double* gw = grad_weights.data();
    double* gi = grad_input.data();

    for (std::size_t oc = 0; oc < out_c; ++oc) {
        const double* g_plane = go + oc * out_h * out_w;
        double bias_sum = 0.0;
        for (std::size_t i = 0; i < out_h * out_w; ++i) {
            bias_sum += g_plane[i];
        }
        grad_bias[oc] += bias_sum;
        for (std::size_t ic = 0; ic < in_c; ++ic) {
            const double* in_plane = in + ic * in_h * in_w;
            double* gi_plane = gi + ic * in_h * in_w;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const std::size_t widx = ((oc * in_c + ic) * kh + ky) * kw + kx;
                    const double k = w[widx];
                    double acc = 0.0;
                    for (std::size_t y = 0; y < out_h; ++y) {
                        const double* src = in_plane + (y + ky) * in_w + kx;
                        double* dst = gi_plane + (y + ky) * in_w + kx;
                        const double* g = g_plane + y * out_w;
                        for (std::size_t x = 0; x < out_w; ++x) {
                            acc += g[x] * src[x];
                            dst[x] += k * g[x];
                        }
                    }
                    gw[widx] += acc;
                }
            }
        }
    }
    return grad_input;
}

Tensor maxpool2d_forward(const Tensor& input, std::size_t window, std::vector<std::size_t>* argmax) {
    require_chw(input, "maxpool2d");
    if (window == 0) {
        fail(ErrorKind::invalid_config, "maxpool2d window must be positive");
    }
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h < window || w < window) {
        fail(ErrorKind::invalid_shape, "maxpool2d input " + shape_string(input.shape()) + " smaller than window " +
                                           std::to_string(window));
    }
    Tensor out({c, h / window, w / window});
    if (argmax != nullptr) {
        argmax->assign(out.size(), 0);
    }
    std::size_t o = 0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t oy = 0; oy < out.dim(1); ++oy) {
            for (std::size_t ox = 0; ox < out.dim(2); ++ox, ++o) {
                std::size_t best = (ch * h + oy * window) * w + ox * window;
                for (std::size_t dy = 0; dy < window; ++dy) {
                    for (std::size_t dx = 0; dx < window; ++dx) {
                        const std::size_t idx = (ch * h + oy * window + dy) * w + ox * window + dx;
                        if (input[idx] > input[best]) {
                            best = idx;
                        }
                    }
                }
                out[o] = input[best];
                if (argmax != nullptr) {
                    (*argmax)[o] = best;
                }
            }
        }
    }
    return out;
}

Tensor maxpool2d_backward(const Shape& input_shape, const Tensor& grad_output, const std::vector<std::size_t>& argmax) {
    if (argmax.size() != grad_output.size()) {
        fail(ErrorKind::invalid_shape, "maxpool2d_backward: argmax record does not match gradient");
    }
    Tensor grad_input(input_shape);
    for (std::size_t i = 0; i < grad_output.size(); ++i) {
        grad_input[argmax[i]] += grad_output[i];
    }
    return grad_input;
}

Tensor dense_forward(const Tensor& input, const LayerParams& layer) {
    if (layer.kind != LayerKind::dense) {
        fail(ErrorKind::invalid_config, "dense called with a " + std::string(to_string(layer.kind)) + " layer");
    }
    const std::size_t out_units = layer.weights.dim(0), in_units = layer.weights.dim(1);
    if (input.size() != in_units) {
        fail(ErrorKind::invalid_shape, "dense layer expects " + std::to_string(in_units) + " inputs, got " +
                                           std::to_string(input.size()));
    }
    Tensor out({out_units});
    const double* w = layer.weights.data();
    const double* x = input.data();
    for (std::size_t o = 0; o < out_units; ++o) {
        double acc = layer.bias[o];
        const double* row = w + o * in_units;
        for (std::size_t i = 0; i < in_units; ++i) {
            acc += row[i] * x[i];
        }
        out[o] = acc;
    }
    return out;
}

Tensor dense_backward(const Tensor& input, const LayerParams& layer, const Tensor& grad_output, Tensor& grad_weights,
                      Tensor& grad_bias) {
    const std::size_t out_units = layer.weights.dim(0), in_units = layer.weights.dim(1);
    if (input.size() != in_units || grad_output.size() != out_units ||
        grad_weights.shape() != layer.weights.shape() || grad_bias.shape() != layer.bias.shape()) {
        fail(ErrorKind::invalid_shape, "dense_backward: shapes do not match the layer");
    }
    Tensor grad_input(input.shape());
    const double* w = layer.weights.data();
    const double* x = input.data();
    double* gw = grad_weights.data();
    double* gi = grad_input.data();
    for (std::size_t o = 0; o < out_units; ++o) {
        const double g = grad_output[o];
        grad_bias[o] += g;
        const double* row = w + o * in_units;
        double* grow = gw + o * in_units;
        for (std::size_t i = 0; i < in_units; ++i) {
            grow[i] += g * x[i];
            gi[i] += g * row[i];
        }
    }
    return grad_input;
}

Tensor dropout_forward(const Tensor& input, double rate, bool training, RngStream& rng, std::vector<double>* mask) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        fail(ErrorKind::invalid_config, "dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) {
        if (mask != nullptr) {
            mask->assign(input.size(), 1.0);
        }
        return input;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor out = Tensor::zeros_like(input);
    if (mask != nullptr) {
        mask->assign(input.size(), 0.0);
    }
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double m = rng.bernoulli(rate) ? 0.0 : keep_scale;
        out[i] = input[i] * m;
        if (mask != nullptr) {
            (*mask)[i] = m;
        }
    }
    return out;
}

Tensor dropout_backward(const Tensor& grad_output, const std::vector<double>& mask) {
    if (mask.size() != grad_output.size()) {
        fail(ErrorKind::invalid_shape, "dropout_backward: mask does not match gradient");
    }
    Tensor grad_input = Tensor::zeros_like(grad_output);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        grad_input[i] = grad_output[i] * mask[i];
    }
    return grad_input;
}

} // namespace imet::nn
