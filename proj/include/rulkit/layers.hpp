#pragma once

#include <cstddef>
#include <vector>

#include "rulkit/rng.hpp"
#include "rulkit/tensor.hpp"

namespace rulkit {

/// One trainable tensor plus its gradient accumulator (identical shape).
/// Values change only through an explicit optimizer step.
struct ParamTensor {
    Tensor value;
    Tensor grad;

    explicit ParamTensor(Tensor v) : value(std::move(v)), grad(Tensor::zeros(value.shape)) {}
    void zero_grad() { grad.fill(0.0); }
};

/// Weight/bias pair of a layer, per-layer gradient accumulators included.
struct LayerParams {
    ParamTensor weights;
    ParamTensor biases;

    LayerParams(Tensor w, Tensor b) : weights(std::move(w)), biases(std::move(b)) {}
    void zero_grads() {
        weights.zero_grad();
        biases.zero_grad();
    }
};

enum class Activation { identity, relu, tanh };

// Layer forward passes take a `record` flag: training passes record the tape
// needed by backward, inference passes (record = false) leave the layer
// untouched and are safe to run concurrently on a shared trained model.

/// y = activation(W x + b), W is [n_out, n_in].
class DenseLayer {
public:
    DenseLayer(std::size_t n_in, std::size_t n_out, Activation act, Rng& rng);

    Tensor forward(const Tensor& input, bool record = true) const;
    Tensor backward(const Tensor& grad_out);

    LayerParams& params() { return params_; }
    const LayerParams& params() const { return params_; }
    std::size_t input_size() const { return n_in_; }
    std::size_t output_size() const { return n_out_; }

private:
    std::size_t n_in_;
    std::size_t n_out_;
    Activation act_;
    LayerParams params_;
    mutable Tensor input_cache_;
    mutable Tensor preact_cache_;
    mutable bool has_forward_ = false;
};

/// 1-d cross-correlation with zero-padded borders ("same" padding):
/// [len, ch_in] -> [len, ch_out]. Kernel must be odd. Filters are
/// [ch_out, ch_in, kernel].
class Conv1dLayer {
public:
    Conv1dLayer(std::size_t ch_in, std::size_t ch_out, std::size_t kernel, Rng& rng);

    Tensor forward(const Tensor& input, bool record = true) const;
    Tensor backward(const Tensor& grad_out);

    LayerParams& params() { return params_; }
    const LayerParams& params() const { return params_; }
    std::size_t out_channels() const { return ch_out_; }

private:
    std::size_t ch_in_;
    std::size_t ch_out_;
    std::size_t kernel_;
    LayerParams params_;
    mutable Tensor input_cache_;
    mutable bool has_forward_ = false;
};

/// Non-overlapping window maxima along the length axis, trailing remainder
/// dropped: [len, ch] -> [len/pool, ch]. Argmax indices are retained for the
/// backward routing; ties break to the lowest index.
class MaxPool1dLayer {
public:
    explicit MaxPool1dLayer(std::size_t pool) : pool_(pool) {}

    Tensor forward(const Tensor& input, bool record = true) const;
    Tensor backward(const Tensor& grad_out);

private:
    std::size_t pool_;
    mutable std::vector<std::size_t> argmax_;
    mutable std::vector<std::size_t> input_shape_;
    mutable bool has_forward_ = false;
};

/// Single LSTM layer over a full sequence: [steps, n_in] -> [steps, cells].
/// Gate blocks in the 4H dimension are ordered input, forget, candidate,
/// output. States start at zero; forget-gate bias initialized to 1.
class LstmLayer {
public:
    LstmLayer(std::size_t n_in, std::size_t cells, Rng& rng);

    Tensor forward(const Tensor& sequence, bool record = true) const;
    Tensor backward(const Tensor& grad_hidden_seq);

    LayerParams& input_params() { return input_params_; }
    LayerParams& recurrent_params() { return recurrent_params_; }
    const LayerParams& input_params() const { return input_params_; }
    const LayerParams& recurrent_params() const { return recurrent_params_; }
    std::size_t cells() const { return cells_; }

private:
    std::size_t n_in_;
    std::size_t cells_;
    LayerParams input_params_;      // weights [4H, n_in], biases [4H]
    LayerParams recurrent_params_;  // weights [4H, H], biases unused (empty)

    // Per-step caches for backpropagation through time.
    struct StepCache {
        Tensor x;
        Tensor gate_i, gate_f, gate_g, gate_o;
        Tensor cell, cell_tanh;
        Tensor hidden_prev, cell_prev;
    };
    mutable std::vector<StepCache> steps_;
    mutable bool has_forward_ = false;
};

/// Stacked LSTM layers; forward returns the final hidden state of the last
/// layer, backward takes its gradient and returns the input-sequence gradient.
class LstmStack {
public:
    LstmStack(std::size_t n_in, const std::vector<std::size_t>& cell_counts, Rng& rng);

    Tensor forward(const Tensor& sequence, bool record = true) const;
    Tensor backward(const Tensor& grad_final_hidden);

    std::vector<LstmLayer>& layers() { return layers_; }
    const std::vector<LstmLayer>& layers() const { return layers_; }
    std::size_t output_size() const { return layers_.back().cells(); }

private:
    std::vector<LstmLayer> layers_;
    mutable std::size_t steps_cache_ = 0;
    mutable bool has_forward_ = false;
};

}  // namespace rulkit
