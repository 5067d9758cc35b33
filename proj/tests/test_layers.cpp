#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "rulkit/errors.hpp"
#include "rulkit/layers.hpp"
#include "rulkit/rng.hpp"
#include "rulkit/tensor.hpp"

using namespace rulkit;

namespace {

// Overwrites a layer's parameters; tests hand-set exact weights.
void set_dense(DenseLayer& layer, const std::vector<double>& w, const std::vector<double>& b) {
    layer.params().weights.value.data = w;
    layer.params().biases.value.data = b;
}

}  // namespace

TEST_CASE("tensor shape/data invariant") {
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), ConfigError);
    const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.numel() == 6);
    CHECK(t.at(1, 2) == 6.0);
}

TEST_CASE("tensor ensure_finite rejects NaN and Inf") {
    Tensor t = Tensor::vector1d({1.0, 2.0});
    CHECK_NOTHROW(t.ensure_finite("test"));
    t.at(1) = std::nan("");
    CHECK_THROWS_AS(t.ensure_finite("test"), NumericalError);
    t.at(1) = INFINITY;
    CHECK_THROWS_AS(t.ensure_finite("test"), NumericalError);
}

TEST_CASE("concat joins and splits at n") {
    const Tensor a = Tensor::vector1d({1, 2});
    const Tensor b = Tensor::vector1d({3});
    const Tensor joined = concat1d(a, b);
    CHECK(joined.data == std::vector<double>{1, 2, 3});

    // empty left operand
    const Tensor empty = Tensor::vector1d({});
    const Tensor right = concat1d(empty, Tensor::vector1d({5}));
    CHECK(right.data == std::vector<double>{5});

    // gradient split is the inverse
    Tensor ga, gb;
    split1d(Tensor::vector1d({10, 20, 30}), 2, ga, gb);
    CHECK(ga.data == std::vector<double>{10, 20});
    CHECK(gb.data == std::vector<double>{30});

    const Tensor rank2 = Tensor::zeros({1, 1});
    CHECK_THROWS_AS(concat1d(rank2, b), ConfigError);
}

TEST_CASE("dense forward matches hand-computed examples") {
    Rng rng(1);
    DenseLayer layer(2, 2, Activation::identity, rng);
    set_dense(layer, {1, 0, 0, 1}, {0, 0});
    const Tensor x = Tensor::vector1d({3, -1});
    CHECK(layer.forward(x).data == std::vector<double>{3, -1});

    DenseLayer relu_layer(2, 2, Activation::relu, rng);
    set_dense(relu_layer, {1, 0, 0, 1}, {0, 0});
    CHECK(relu_layer.forward(x).data == std::vector<double>{3, 0});

    DenseLayer affine(2, 2, Activation::identity, rng);
    set_dense(affine, {1, 2, 0, 1}, {1, 1});
    CHECK(affine.forward(Tensor::vector1d({1, 1})).data == std::vector<double>{4, 2});
}

TEST_CASE("dense rejects shape mismatch naming both shapes") {
    Rng rng(1);
    DenseLayer layer(3, 2, Activation::identity, rng);
    try {
        layer.forward(Tensor::vector1d({1, 2}));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2]") != std::string::npos);
        CHECK(msg.find("[2, 3]") != std::string::npos);
    }
}

TEST_CASE("dense bias gradient of sum(out) is ones") {
    Rng rng(7);
    DenseLayer layer(3, 2, Activation::identity, rng);
    layer.forward(Tensor::vector1d({0.5, -0.25, 2.0}));
    layer.backward(Tensor::vector1d({1, 1}));
    CHECK(layer.params().biases.grad.data == std::vector<double>{1, 1});
}

TEST_CASE("backward before forward is a usage error") {
    Rng rng(3);
    DenseLayer dense(2, 2, Activation::relu, rng);
    CHECK_THROWS_AS(dense.backward(Tensor::vector1d({1, 1})), UsageError);
    Conv1dLayer conv(1, 1, 3, rng);
    CHECK_THROWS_AS(conv.backward(Tensor::zeros({3, 1})), UsageError);
    MaxPool1dLayer pool(2);
    CHECK_THROWS_AS(pool.backward(Tensor::zeros({1, 1})), UsageError);
    LstmLayer lstm(1, 2, rng);
    CHECK_THROWS_AS(lstm.backward(Tensor::zeros({1, 2})), UsageError);
}

TEST_CASE("conv1d forward: identity kernel, box kernel, zero input") {
    Rng rng(1);
    Conv1dLayer layer(1, 1, 3, rng);
    layer.params().weights.value.data = {0, 1, 0};
    layer.params().biases.value.data = {0};
    const Tensor x({3, 1}, {1, 2, 3});
    CHECK(layer.forward(x).data == std::vector<double>{1, 2, 3});

    layer.params().weights.value.data = {1, 1, 1};
    CHECK(layer.forward(x).data == std::vector<double>{3, 6, 5});

    layer.params().biases.value.data = {0.75};
    const Tensor zeros = Tensor::zeros({4, 1});
    CHECK(layer.forward(zeros).data == std::vector<double>(4, 0.75));
}

TEST_CASE("conv1d rejects even kernels") {
    Rng rng(1);
    CHECK_THROWS_AS(Conv1dLayer(1, 4, 2, rng), ConfigError);
}

TEST_CASE("maxpool forward: windowed maxima with floor semantics") {
    MaxPool1dLayer pool2(2);
    CHECK(pool2.forward(Tensor({4, 1}, {1, 3, 2, 5})).data == std::vector<double>{3, 5});
    CHECK(pool2.forward(Tensor({3, 1}, {1, 2, 3})).data == std::vector<double>{2});

    MaxPool1dLayer pool1(1);
    CHECK(pool1.forward(Tensor({1, 1}, {7})).data == std::vector<double>{7});

    MaxPool1dLayer pool4(4);
    CHECK_THROWS_AS(pool4.forward(Tensor({3, 1}, {1, 2, 3})), ConfigError);
}

TEST_CASE("maxpool backward routes to the first argmax only and conserves gradient") {
    MaxPool1dLayer pool(3);
    // tie between positions 0 and 2: first occurrence wins
    Tensor x({6, 1}, {4, 1, 4, 0, 9, 9});
    pool.forward(x);
    const Tensor grad_in = pool.backward(Tensor({2, 1}, {5, 7}));
    CHECK(grad_in.data == std::vector<double>{5, 0, 0, 0, 7, 0});

    double in_sum = 0.0;
    for (double g : grad_in.data) {
        in_sum += g;
    }
    CHECK(in_sum == 12.0);  // equals the output gradient sum
}

TEST_CASE("lstm with all-zero parameters is a fixed point at zero") {
    Rng rng(11);
    LstmLayer layer(1, 3, rng);
    layer.input_params().weights.value.fill(0.0);
    layer.input_params().biases.value.fill(0.0);
    layer.recurrent_params().weights.value.fill(0.0);
    const Tensor seq({4, 1}, {0.3, -0.8, 1.5, 0.05});
    const Tensor out = layer.forward(seq);
    for (double v : out.data) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("lstm single step matches hand-evaluated gate equations") {
    Rng rng(2);
    LstmLayer layer(1, 1, rng);
    // z = wx * x + b per gate, no recurrence on the first step
    layer.input_params().weights.value.data = {0.5, -0.3, 0.8, 0.2};  // i, f, g, o rows
    layer.input_params().biases.value.data = {0.1, 1.0, -0.2, 0.05};
    layer.recurrent_params().weights.value.data = {0.7, 0.4, -0.6, 0.9};

    const double x = 0.6;
    const auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double gate_i = sigmoid(0.5 * x + 0.1);
    const double gate_g = std::tanh(0.8 * x - 0.2);
    const double gate_o = sigmoid(0.2 * x + 0.05);
    const double cell = gate_i * gate_g;  // f * c_prev vanishes (c_prev = 0)
    const double expected = gate_o * std::tanh(cell);

    const Tensor out = layer.forward(Tensor({1, 1}, {x}));
    CHECK(out.at(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("lstm with zero recurrent weights saturates monotonically") {
    Rng rng(4);
    LstmLayer layer(1, 1, rng);
    layer.input_params().weights.value.data = {0.9, 0.2, 1.1, 0.7};
    layer.input_params().biases.value.data = {0.0, 0.5, 0.0, 0.0};
    layer.recurrent_params().weights.value.fill(0.0);

    // identical steps: gates constant, cell follows a geometric recurrence
    const Tensor seq({6, 1}, std::vector<double>(6, 0.8));
    const Tensor out = layer.forward(seq);
    for (std::size_t t = 1; t < 6; ++t) {
        CHECK(out.at(t, 0) > out.at(t - 1, 0));
    }
}

TEST_CASE("lstm hidden outputs stay inside (-1, 1)") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        LstmLayer layer(2, 4, rng);
        // exaggerated weights to push toward saturation
        for (double& w : layer.input_params().weights.value.data) {
            w = rng.uniform(-40.0, 40.0);
        }
        Tensor seq = Tensor::zeros({5, 2});
        for (double& v : seq.data) {
            v = rng.uniform(-3.0, 3.0);
        }
        const Tensor out = layer.forward(seq);
        for (double v : out.data) {
            CHECK(std::abs(v) < 1.0);
        }
    }
}

TEST_CASE("lstm rejects empty sequences") {
    Rng rng(5);
    LstmLayer layer(1, 2, rng);
    CHECK_THROWS_AS(layer.forward(Tensor::zeros({0, 1})), DataError);
}

TEST_CASE("lstm stack returns final hidden of the last layer") {
    Rng rng(6);
    LstmStack stack(1, {4, 3, 2}, rng);
    const Tensor seq({3, 1}, {0.1, 0.2, 0.3});
    const Tensor out = stack.forward(seq);
    CHECK(out.shape == std::vector<std::size_t>{2});
}

TEST_CASE("deterministic construction and forward under a fixed seed") {
    const Tensor x = Tensor::vector1d({0.2, -0.4, 0.6});
    Rng rng_a(42);
    Rng rng_b(42);
    DenseLayer a(3, 5, Activation::tanh, rng_a);
    DenseLayer b(3, 5, Activation::tanh, rng_b);
    const Tensor ya = a.forward(x);
    const Tensor yb = b.forward(x);
    CHECK(ya.data == yb.data);  // bit-identical
}
