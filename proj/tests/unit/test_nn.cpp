#include "gradcheck.hpp"

#include "imet/common/error.hpp"
#include "imet/common/rng.hpp"
#include "imet/nn/activations.hpp"
#include "imet/nn/adam.hpp"
#include "imet/nn/checkpoint.hpp"
#include "imet/nn/layers.hpp"
#include "imet/nn/loss.hpp"
#include "imet/nn/stack.hpp"
#include "imet/nn/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

using namespace imet;
using namespace imet::nn;

namespace {

void expect_error(ErrorKind kind, const std::function<void()>& f) {
    try {
        f();
        ADD_FAILURE() << "expected " << to_string(kind);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

Tensor grid(std::size_t c, std::size_t h, std::size_t w, std::vector<double> values) {
    return Tensor({c, h, w}, std::move(values));
}

} // namespace

TEST(Tensor, ShapeMustMatchValueCount) {
    expect_error(ErrorKind::invalid_shape, [] { Tensor({2, 3}, std::vector<double>(5)); });
    Tensor t({2, 3}, 1.5);
    EXPECT_EQ(t.size(), 6u);
    EXPECT_EQ(t.reshaped({6}).shape(), (Shape{6}));
    expect_error(ErrorKind::invalid_shape, [&] { (void)t.reshaped({4}); });
}

TEST(Tensor, EmptyShapeHasNoElements) {
    EXPECT_EQ(Tensor(Shape{}).size(), 0u);
    EXPECT_TRUE(Tensor::zeros_like(Tensor()).empty());
    EXPECT_EQ(Tensor(), Tensor(Shape{}));
}

TEST(Relu, ClampsNegatives) {
    EXPECT_EQ(relu(Tensor::vector({-2.0})), Tensor::vector({0.0}));
    EXPECT_EQ(relu(Tensor::vector({3.0})), Tensor::vector({3.0}));
    EXPECT_EQ(relu(Tensor::vector({-1.5, 0.0, 2.5})), Tensor::vector({0.0, 0.0, 2.5}));
}

TEST(Relu, BackwardBlocksDeadUnits) {
    const auto g = relu_backward(Tensor::vector({-1.0, 2.0}), Tensor::vector({5.0, 7.0}));
    EXPECT_EQ(g, Tensor::vector({0.0, 7.0}));
}

TEST(Sigmoid, KnownValues) {
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    EXPECT_NEAR(sigmoid(std::log(3.0)), 0.75, 1e-15);
    const double tail = sigmoid(-50.0);
    EXPECT_GT(tail, 0.0);
    EXPECT_LT(tail, 1e-20);
    EXPECT_LE(sigmoid(50.0), 1.0);
    EXPECT_GT(sigmoid(1000.0), 0.0);
    EXPECT_GT(sigmoid(-1000.0) + 1.0, 0.0);
}

TEST(Sigmoid, Monotone) {
    double prev = 0.0;
    for (double x = -30.0; x <= 30.0; x += 0.25) {
        const double s = sigmoid(x);
        EXPECT_GT(s, prev);
        EXPECT_LT(s, 1.0 + 1e-16);
        prev = s;
    }
}

TEST(Softmax, KnownValues) {
    const auto u = softmax(Tensor::vector({0, 0, 0, 0}));
    for (double v : u.values()) EXPECT_DOUBLE_EQ(v, 0.25);

    const auto p = softmax(Tensor::vector({std::log(2.0), 0, 0}));
    EXPECT_NEAR(p[0], 0.5, 1e-15);
    EXPECT_NEAR(p[1], 0.25, 1e-15);
    EXPECT_NEAR(p[2], 0.25, 1e-15);

    const auto big = softmax(Tensor::vector({1000, 0}));
    EXPECT_TRUE(big.all_finite());
    EXPECT_NEAR(big[0], 1.0, 1e-15);
    EXPECT_NEAR(big[1], 0.0, 1e-15);
}

TEST(Softmax, SumsToOneForLargeLogits) {
    RngStream rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        Tensor z({2 + rng.uniform_index(8)});
        for (auto& v : z.values()) v = rng.uniform(-1e3, 1e3);
        const auto p = softmax(z);
        const double sum = std::accumulate(p.values().begin(), p.values().end(), 0.0);
        EXPECT_NEAR(sum, 1.0, 1e-6);
        for (double v : p.values()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Softmax, NeedsAtLeastTwoLogits) {
    expect_error(ErrorKind::invalid_shape, [] { (void)softmax(Tensor::vector({1.0})); });
}

TEST(Conv2d, OutputShapeIsValidCorrelation) {
    auto layer = LayerParams::conv2d(1, 1, 3, 3, Activation::identity);
    EXPECT_EQ(conv2d_forward(Tensor({1, 5, 5}), layer).shape(), (Shape{1, 3, 3}));
    auto wide = LayerParams::conv2d(2, 4, 2, 3, Activation::identity);
    EXPECT_EQ(conv2d_forward(Tensor({2, 7, 6}), wide).shape(), (Shape{4, 6, 4}));
}

TEST(Conv2d, ScalarKernelScales) {
    auto layer = LayerParams::conv2d(1, 1, 1, 1, Activation::identity);
    layer.weights[0] = 2.0;
    const auto out = conv2d_forward(grid(1, 2, 2, {1, 2, 3, 4}), layer);
    EXPECT_EQ(out, grid(1, 2, 2, {2, 4, 6, 8}));
}

TEST(Conv2d, WindowDotProducts) {
    auto layer = LayerParams::conv2d(1, 1, 2, 2, Activation::identity);
    layer.weights.fill(1.0);
    const auto out = conv2d_forward(Tensor({1, 3, 3}, 1.0), layer);
    EXPECT_EQ(out, Tensor({1, 2, 2}, 4.0));
}

TEST(Conv2d, IsCrossCorrelationWithBias) {
    // kernel [[1,2],[3,4]] over [[1,2,3],[4,5,6],[7,8,9]], bias 0.5
    auto layer = LayerParams::conv2d(1, 1, 2, 2, Activation::identity);
    layer.weights = Tensor({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    layer.bias[0] = 0.5;
    const auto out = conv2d_forward(grid(1, 3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9}), layer);
    EXPECT_EQ(out, grid(1, 2, 2, {37.5, 47.5, 67.5, 77.5}));
}

TEST(Conv2d, RejectsChannelMismatchAndSmallInput) {
    auto layer = LayerParams::conv2d(2, 1, 3, 3, Activation::identity);
    expect_error(ErrorKind::invalid_shape, [&] { (void)conv2d_forward(Tensor({1, 5, 5}), layer); });
    expect_error(ErrorKind::invalid_shape, [&] { (void)conv2d_forward(Tensor({2, 2, 5}), layer); });
}

TEST(MaxPool, ModelShapeChain) {
    EXPECT_EQ(maxpool2d_forward(Tensor({32, 26, 26}), 2).shape(), (Shape{32, 13, 13}));
    EXPECT_EQ(maxpool2d_forward(Tensor({32, 11, 11}), 2).shape(), (Shape{32, 5, 5}));
}

TEST(MaxPool, SingleWindowAndArgmax) {
    std::vector<std::size_t> argmax;
    const auto out = maxpool2d_forward(grid(1, 2, 2, {1, 2, 3, 4}), 2, &argmax);
    EXPECT_EQ(out, grid(1, 1, 1, {4}));
    ASSERT_EQ(argmax.size(), 1u);
    EXPECT_EQ(argmax[0], 3u);
    const auto back = maxpool2d_backward({1, 2, 2}, grid(1, 1, 1, {2.5}), argmax);
    EXPECT_EQ(back, grid(1, 2, 2, {0, 0, 0, 2.5}));
}

TEST(MaxPool, RejectsTooSmall) {
    expect_error(ErrorKind::invalid_shape, [] { (void)maxpool2d_forward(Tensor({1, 1, 4}), 2); });
    expect_error(ErrorKind::invalid_shape, [] { (void)maxpool2d_forward(Tensor({1, 4, 1}), 2); });
}

TEST(Dense, KnownMaps) {
    auto identity = LayerParams::dense(3, 3, Activation::identity);
    identity.weights = Tensor({3, 3}, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
    const auto x = Tensor::vector({0.3, -2.0, 7.0});
    EXPECT_EQ(dense_forward(x, identity), x);

    auto sum = LayerParams::dense(2, 1, Activation::identity);
    sum.weights = Tensor({1, 2}, std::vector<double>{1, 1});
    sum.bias[0] = 0.5;
    EXPECT_EQ(dense_forward(Tensor::vector({2, 3}), sum), Tensor::vector({5.5}));

    auto constant = LayerParams::dense(2, 2, Activation::identity);
    constant.bias = Tensor::vector({-1.25, 4.0});
    EXPECT_EQ(dense_forward(Tensor::vector({9, -9}), constant), constant.bias);
}

TEST(Dense, RejectsLengthMismatch) {
    auto layer = LayerParams::dense(3, 2, Activation::identity);
    expect_error(ErrorKind::invalid_shape, [&] { (void)dense_forward(Tensor::vector({1, 2}), layer); });
}

TEST(Dense, BackwardIsOuterProduct) {
    // L = 0.5 * ||W x + b - t||^2 with W 2x2: dL/dW = (y - t) x^T, dL/db = y - t
    auto layer = LayerParams::dense(2, 2, Activation::identity);
    layer.weights = Tensor({2, 2}, std::vector<double>{1, 2, 3, 4});
    layer.bias = Tensor::vector({0.5, -0.5});
    const auto x = Tensor::vector({1.0, -1.0});
    const auto t = Tensor::vector({0.0, 1.0});
    const auto y = dense_forward(x, layer); // [-0.5, -1.5]
    const auto residual = Tensor::vector({y[0] - t[0], y[1] - t[1]});
    Tensor gw({2, 2}), gb({2});
    const auto gx = dense_backward(x, layer, residual, gw, gb);
    EXPECT_EQ(gw, Tensor({2, 2}, std::vector<double>{-0.5, 0.5, -2.5, 2.5}));
    EXPECT_EQ(gb, residual);
    // W^T r = [1*-0.5 + 3*-2.5, 2*-0.5 + 4*-2.5]
    EXPECT_EQ(gx, Tensor::vector({-8.0, -11.0}));
}

TEST(Dropout, InferenceAndZeroRateAreIdentity) {
    RngStream rng(3);
    Tensor x({2, 3, 3});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i) - 4.0;
    EXPECT_EQ(dropout_forward(x, 0.5, false, rng), x);
    EXPECT_EQ(dropout_forward(x, 0.9, false, rng), x);
    EXPECT_EQ(dropout_forward(x, 0.0, true, rng), x);
}

TEST(Dropout, PreservesExpectation) {
    RngStream rng(5);
    const Tensor ones({10000}, 1.0);
    const auto out = dropout_forward(ones, 0.5, true, rng);
    const double mean = std::accumulate(out.values().begin(), out.values().end(), 0.0) / 10000.0;
    EXPECT_GE(mean, 0.95);
    EXPECT_LE(mean, 1.05);
    for (double v : out.values()) EXPECT_TRUE(v == 0.0 || v == 2.0);
}

TEST(Dropout, RejectsRateOfOne) {
    RngStream rng(1);
    expect_error(ErrorKind::invalid_config, [&] { (void)dropout_forward(Tensor({3}), 1.0, true, rng); });
    expect_error(ErrorKind::invalid_config, [&] { (void)dropout_forward(Tensor({3}), -0.1, true, rng); });
    expect_error(ErrorKind::invalid_config, [] { (void)LayerParams::dropout(1.0); });
}

TEST(CrossEntropy, KnownValues) {
    EXPECT_NEAR(cross_entropy_loss(Tensor::vector({1, 0, 0, 0}), 0), 0.0, 1e-11);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(cross_entropy_loss(Tensor::vector({0.25, 0.25, 0.25, 0.25}), k), std::log(4.0), 1e-15);
    }
    EXPECT_NEAR(cross_entropy_loss(Tensor::vector({0.5}), 1), std::log(2.0), 1e-15);
    EXPECT_NEAR(cross_entropy_loss(Tensor::vector({0.8}), 0), -std::log(0.2), 1e-15);
}

TEST(CrossEntropy, ClampsZeroProbability) {
    const double loss = cross_entropy_loss(Tensor::vector({0, 1}), 0);
    EXPECT_NEAR(loss, -std::log(kProbabilityClamp), 1e-9);
    EXPECT_TRUE(std::isfinite(loss));
}

TEST(CrossEntropy, RejectsOutOfRangeLabel) {
    expect_error(ErrorKind::invalid_label, [] { (void)cross_entropy_loss(Tensor::vector({0.5, 0.5}), 2); });
    expect_error(ErrorKind::invalid_label, [] { (void)cross_entropy_loss(Tensor::vector({0.5}), 2); });
}

TEST(Stack, BackwardWithoutForwardIsStateError) {
    LayerStack stack({LayerParams::dense(2, 2, Activation::relu)});
    Tape tape;
    expect_error(ErrorKind::state, [&] { (void)stack.backward(tape, Tensor::vector({1, 1})); });
}

TEST(Stack, ParameterFreeLayersHaveEmptyGradients) {
    LayerStack stack({LayerParams::maxpool2d(2), LayerParams::flatten(), LayerParams::dense(4, 1, Activation::identity)});
    RngStream rng(1);
    Tape tape;
    Tensor x({1, 4, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    (void)stack.forward(x, Mode::training, rng, tape);
    const auto grads = stack.backward(tape, Tensor::vector({1.0}));
    EXPECT_TRUE(grads.layers[0].weights.empty());
    EXPECT_TRUE(grads.layers[1].weights.empty());
    EXPECT_EQ(grads.layers[2].weights.shape(), (Shape{1, 4}));
    EXPECT_EQ(grads.layers[2].bias.shape(), (Shape{1}));
}

TEST(Stack, ForwardBackwardDeterministic) {
    std::vector<LayerParams> layers{LayerParams::conv2d(1, 2, 3, 3, Activation::relu), LayerParams::maxpool2d(2),
                                    LayerParams::dropout(0.5), LayerParams::flatten(),
                                    LayerParams::dense(8, 3, Activation::identity)};
    RngStream init(9);
    for (auto& l : layers) {
        for (auto& v : l.weights.values()) v = init.uniform(-1, 1);
    }
    LayerStack stack(layers);
    Tensor x({1, 6, 6});
    for (auto& v : x.values()) v = init.uniform01();
    auto run = [&] {
        RngStream rng(42);
        Tape tape;
        const auto out = stack.forward(x, Mode::training, rng, tape);
        return std::make_pair(out, stack.backward(tape, Tensor::vector({0.3, -0.2, 0.1})));
    };
    const auto a = run();
    const auto b = run();
    EXPECT_EQ(a.first, b.first);
    for (std::size_t l = 0; l < a.second.layers.size(); ++l) {
        EXPECT_EQ(a.second.layers[l].weights, b.second.layers[l].weights);
        EXPECT_EQ(a.second.layers[l].bias, b.second.layers[l].bias);
    }
}

TEST(GradientCheck, EveryLayerKindMatchesFiniteDifferences) {
    for (const auto& kind : oracle::gradient_check_kinds()) {
        const auto result = oracle::gradient_check(kind, 20, 1234);
        EXPECT_EQ(result.trials, 20) << kind;
        EXPECT_GT(result.coordinates, 0u) << kind;
        EXPECT_LT(result.max_relative_error, 1e-3) << kind;
    }
}

TEST(Adam, ZeroGradientWithoutDecayIsFixedPoint) {
    std::vector<LayerParams> layers{LayerParams::dense(3, 2, Activation::identity)};
    layers[0].weights = Tensor({2, 3}, std::vector<double>{1, -2, 3, 0.5, 0.25, -1});
    const auto before = layers[0];
    auto state = AdamState::zeros_for(layers, {.learning_rate = 1e-3, .weight_decay = 0.0});
    const auto grads = Gradients::zeros_for(layers);
    adam_step(layers, grads, state);
    EXPECT_EQ(layers[0], before);
    EXPECT_EQ(state.step_count, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    std::vector<LayerParams> layers{LayerParams::dense(1, 1, Activation::identity)};
    auto state = AdamState::zeros_for(layers, {.learning_rate = 1e-3, .weight_decay = 0.0});
    auto grads = Gradients::zeros_for(layers);
    grads.layers[0].weights[0] = 0.5;
    adam_step(layers, grads, state);
    // m_hat = g, v_hat = g^2: step = lr * g / (|g| + eps)
    EXPECT_NEAR(layers[0].weights[0], -1e-3 * 0.5 / (0.5 + 1e-8), 1e-18);
    EXPECT_EQ(layers[0].bias[0], 0.0);
}

TEST(Adam, DecoupledDecayShrinksBeforeAdaptiveStep) {
    std::vector<LayerParams> layers{LayerParams::dense(1, 1, Activation::identity)};
    layers[0].weights[0] = 2.0;
    auto state = AdamState::zeros_for(layers, {.learning_rate = 1e-2, .weight_decay = 0.5});
    adam_step(layers, Gradients::zeros_for(layers), state);
    EXPECT_DOUBLE_EQ(layers[0].weights[0], 2.0 - 1e-2 * 0.5 * 2.0);
}

TEST(Adam, StepCountAndMomentShapes) {
    std::vector<LayerParams> layers{LayerParams::conv2d(1, 2, 3, 3, Activation::relu), LayerParams::maxpool2d(2),
                                    LayerParams::dense(4, 2, Activation::identity)};
    auto state = AdamState::zeros_for(layers);
    ASSERT_EQ(state.first_moment.size(), 4u);
    EXPECT_EQ(state.first_moment[0].shape(), layers[0].weights.shape());
    EXPECT_EQ(state.second_moment[3].shape(), layers[2].bias.shape());
    for (std::uint64_t i = 1; i <= 3; ++i) {
        adam_step(layers, Gradients::zeros_for(layers), state);
        EXPECT_EQ(state.step_count, i);
    }
}

TEST(Adam, ShapeMismatchRejected) {
    std::vector<LayerParams> layers{LayerParams::dense(2, 2, Activation::identity)};
    auto state = AdamState::zeros_for(layers);
    auto grads = Gradients::zeros_for(layers);
    grads.layers[0].weights = Tensor({3, 2});
    expect_error(ErrorKind::invalid_shape, [&] { adam_step(layers, grads, state); });
    EXPECT_EQ(state.step_count, 0u);
}

TEST(Adam, DecreasesConvexQuadratic) {
    // f(theta) = (theta - 3)^2 from several starting points
    for (double start : {-5.0, 0.0, 2.9, 10.0}) {
        std::vector<LayerParams> layers{LayerParams::dense(1, 1, Activation::identity)};
        layers[0].weights[0] = start;
        auto state = AdamState::zeros_for(layers, {.learning_rate = 1e-3, .weight_decay = 0.0});
        auto grads = Gradients::zeros_for(layers);
        const double before = (start - 3) * (start - 3);
        grads.layers[0].weights[0] = 2 * (start - 3);
        adam_step(layers, grads, state);
        const double after = (layers[0].weights[0] - 3) * (layers[0].weights[0] - 3);
        EXPECT_LT(after, before) << start;
    }
}

TEST(Adam, Deterministic) {
    auto run = [] {
        std::vector<LayerParams> layers{LayerParams::dense(2, 2, Activation::identity)};
        layers[0].weights = Tensor({2, 2}, std::vector<double>{0.1, 0.2, 0.3, 0.4});
        auto state = AdamState::zeros_for(layers);
        auto grads = Gradients::zeros_for(layers);
        grads.layers[0].weights = Tensor({2, 2}, std::vector<double>{0.5, -0.25, 1e-3, 7.0});
        for (int i = 0; i < 5; ++i) adam_step(layers, grads, state);
        return layers[0];
    };
    EXPECT_EQ(run(), run());
}

TEST(Checkpoint, RoundTripsExactly) {
    Checkpoint ckpt;
    ckpt.metadata = {{"note", "roundtrip"}};
    ckpt.layers = {LayerParams::conv2d(1, 2, 3, 3, Activation::relu), LayerParams::maxpool2d(2),
                   LayerParams::dropout(0.5), LayerParams::flatten(), LayerParams::dense(8, 3, Activation::identity)};
    RngStream rng(77);
    for (auto& l : ckpt.layers) {
        for (auto& v : l.weights.values()) v = rng.uniform(-1, 1) / 3.0;
        for (auto& v : l.bias.values()) v = rng.uniform(-1, 1) * 1e-300;
    }
    const auto dir = std::filesystem::temp_directory_path() / "imet_ckpt_test";
    std::filesystem::remove_all(dir);
    save_checkpoint(dir / "m.json", ckpt);
    EXPECT_TRUE(std::filesystem::exists(dir / "m.bin"));
    const auto loaded = load_checkpoint(dir / "m.json");
    EXPECT_EQ(loaded.metadata, ckpt.metadata);
    EXPECT_EQ(loaded.layers, ckpt.layers);
    std::filesystem::remove_all(dir);
}

TEST(Checkpoint, TruncatedBlobRejected) {
    Checkpoint ckpt;
    ckpt.layers = {LayerParams::dense(2, 2, Activation::relu)};
    const auto dir = std::filesystem::temp_directory_path() / "imet_ckpt_trunc";
    std::filesystem::remove_all(dir);
    save_checkpoint(dir / "m.json", ckpt);
    std::filesystem::resize_file(dir / "m.bin", 8);
    expect_error(ErrorKind::invalid_input, [&] { (void)load_checkpoint(dir / "m.json"); });
    std::filesystem::remove_all(dir);
}
