#include "rulkit/layers.hpp"

#include <cmath>
#include <string>

#include "rulkit/errors.hpp"

namespace rulkit {

namespace {

double apply_activation(Activation act, double z) {
    switch (act) {
        case Activation::relu:
            return z > 0.0 ? z : 0.0;
        case Activation::tanh:
            return std::tanh(z);
        case Activation::identity:
            return z;
    }
    return z;
}

// Derivative in terms of the pre-activation value.
double activation_grad(Activation act, double z) {
    switch (act) {
        case Activation::relu:
            return z > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::identity:
            return 1.0;
    }
    return 1.0;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) {
        v = rng.uniform(-bound, bound);
    }
    return t;
}

Tensor scaled_uniform(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) {
        v = rng.uniform(-bound, bound);
    }
    return t;
}

}  // namespace

// ---- Dense ----

DenseLayer::DenseLayer(std::size_t n_in, std::size_t n_out, Activation act, Rng& rng)
    : n_in_(n_in),
      n_out_(n_out),
      act_(act),
      params_(glorot_uniform({n_out, n_in}, n_in, n_out, rng), Tensor::zeros({n_out})) {
    if (n_in == 0 || n_out == 0) {
        throw ConfigError("dense: zero-sized layer (" + std::to_string(n_in) + " -> " +
                          std::to_string(n_out) + ")");
    }
}

Tensor DenseLayer::forward(const Tensor& input, bool record) const {
    if (input.rank() != 1 || input.numel() != n_in_) {
        throw ConfigError("dense forward: input shape " + input.shape_str() +
                          " does not match weight shape " + params_.weights.value.shape_str());
    }
    const Tensor& w = params_.weights.value;
    const Tensor& b = params_.biases.value;
    Tensor preact = Tensor::zeros({n_out_});
    for (std::size_t o = 0; o < n_out_; ++o) {
        double acc = b.at(o);
        for (std::size_t i = 0; i < n_in_; ++i) {
            acc += w.at(o, i) * input.at(i);
        }
        preact.at(o) = acc;
    }
    if (record) {
        input_cache_ = input;
        preact_cache_ = preact;
        has_forward_ = true;
    }

    Tensor out = Tensor::zeros({n_out_});
    for (std::size_t o = 0; o < n_out_; ++o) {
        out.at(o) = apply_activation(act_, preact.at(o));
    }
    out.ensure_finite("dense forward");
    return out;
}

Tensor DenseLayer::backward(const Tensor& grad_out) {
    if (!has_forward_) {
        throw UsageError("dense backward: no recorded forward pass");
    }
    if (grad_out.rank() != 1 || grad_out.numel() != n_out_) {
        throw ConfigError("dense backward: gradient shape " + grad_out.shape_str() +
                          " does not match output size " + std::to_string(n_out_));
    }
    const Tensor& w = params_.weights.value;
    Tensor grad_in = Tensor::zeros({n_in_});
    for (std::size_t o = 0; o < n_out_; ++o) {
        const double dz = grad_out.at(o) * activation_grad(act_, preact_cache_.at(o));
        params_.biases.grad.at(o) += dz;
        for (std::size_t i = 0; i < n_in_; ++i) {
            params_.weights.grad.at(o, i) += dz * input_cache_.at(i);
            grad_in.at(i) += w.at(o, i) * dz;
        }
    }
    grad_in.ensure_finite("dense backward");
    return grad_in;
}

// ---- Conv1d ----

Conv1dLayer::Conv1dLayer(std::size_t ch_in, std::size_t ch_out, std::size_t kernel, Rng& rng)
    : ch_in_(ch_in),
      ch_out_(ch_out),
      kernel_(kernel),
      params_(glorot_uniform({ch_out, ch_in, kernel}, ch_in * kernel, ch_out * kernel, rng),
              Tensor::zeros({ch_out})) {
    if (kernel % 2 == 0) {
        throw ConfigError("conv1d: kernel size must be odd for same padding, got " +
                          std::to_string(kernel));
    }
    if (ch_in == 0 || ch_out == 0) {
        throw ConfigError("conv1d: zero channel count");
    }
}

Tensor Conv1dLayer::forward(const Tensor& input, bool record) const {
    if (input.rank() != 2 || input.shape[1] != ch_in_) {
        throw ConfigError("conv1d forward: input shape " + input.shape_str() +
                          " does not match filter shape " + params_.weights.value.shape_str());
    }
    const std::size_t len = input.shape[0];
    const std::size_t off = kernel_ / 2;
    const Tensor& w = params_.weights.value;
    const Tensor& b = params_.biases.value;

    Tensor out = Tensor::zeros({len, ch_out_});
    for (std::size_t p = 0; p < len; ++p) {
        for (std::size_t co = 0; co < ch_out_; ++co) {
            double acc = b.at(co);
            for (std::size_t j = 0; j < kernel_; ++j) {
                // zero padding outside [0, len)
                const std::ptrdiff_t q =
                    static_cast<std::ptrdiff_t>(p + j) - static_cast<std::ptrdiff_t>(off);
                if (q < 0 || q >= static_cast<std::ptrdiff_t>(len)) {
                    continue;
                }
                for (std::size_t ci = 0; ci < ch_in_; ++ci) {
                    acc += input.at(static_cast<std::size_t>(q), ci) * w.at(co, ci, j);
                }
            }
            out.at(p, co) = acc;
        }
    }
    if (record) {
        input_cache_ = input;
        has_forward_ = true;
    }
    out.ensure_finite("conv1d forward");
    return out;
}

Tensor Conv1dLayer::backward(const Tensor& grad_out) {
    if (!has_forward_) {
        throw UsageError("conv1d backward: no recorded forward pass");
    }
    const std::size_t len = input_cache_.shape[0];
    if (grad_out.rank() != 2 || grad_out.shape[0] != len || grad_out.shape[1] != ch_out_) {
        throw ConfigError("conv1d backward: gradient shape " + grad_out.shape_str() +
                          " does not match output shape [" + std::to_string(len) + ", " +
                          std::to_string(ch_out_) + "]");
    }
    const std::size_t off = kernel_ / 2;
    const Tensor& w = params_.weights.value;

    Tensor grad_in = Tensor::zeros(input_cache_.shape);
    for (std::size_t p = 0; p < len; ++p) {
        for (std::size_t co = 0; co < ch_out_; ++co) {
            const double g = grad_out.at(p, co);
            if (g == 0.0) {
                continue;
            }
            params_.biases.grad.at(co) += g;
            for (std::size_t j = 0; j < kernel_; ++j) {
                const std::ptrdiff_t q =
                    static_cast<std::ptrdiff_t>(p + j) - static_cast<std::ptrdiff_t>(off);
                if (q < 0 || q >= static_cast<std::ptrdiff_t>(len)) {
                    continue;
                }
                for (std::size_t ci = 0; ci < ch_in_; ++ci) {
                    params_.weights.grad.at(co, ci, j) +=
                        g * input_cache_.at(static_cast<std::size_t>(q), ci);
                    grad_in.at(static_cast<std::size_t>(q), ci) += g * w.at(co, ci, j);
                }
            }
        }
    }
    grad_in.ensure_finite("conv1d backward");
    return grad_in;
}

// ---- MaxPool1d ----

Tensor MaxPool1dLayer::forward(const Tensor& input, bool record) const {
    if (input.rank() != 2) {
        throw ConfigError("maxpool1d forward: expected rank-2 input, got " + input.shape_str());
    }
    const std::size_t len = input.shape[0];
    const std::size_t ch = input.shape[1];
    if (pool_ == 0 || len < pool_) {
        throw ConfigError("maxpool1d forward: input length " + std::to_string(len) +
                          " shorter than pool size " + std::to_string(pool_));
    }
    const std::size_t out_len = len / pool_;

    Tensor out = Tensor::zeros({out_len, ch});
    std::vector<std::size_t> argmax(out_len * ch, 0);
    for (std::size_t wdx = 0; wdx < out_len; ++wdx) {
        for (std::size_t c = 0; c < ch; ++c) {
            std::size_t best = wdx * pool_;
            double best_v = input.at(best, c);
            for (std::size_t i = 1; i < pool_; ++i) {
                const std::size_t idx = wdx * pool_ + i;
                const double v = input.at(idx, c);
                // strict > keeps the first occurrence on ties
                if (v > best_v) {
                    best_v = v;
                    best = idx;
                }
            }
            out.at(wdx, c) = best_v;
            argmax[wdx * ch + c] = best;
        }
    }
    if (record) {
        argmax_ = std::move(argmax);
        input_shape_ = input.shape;
        has_forward_ = true;
    }
    out.ensure_finite("maxpool1d forward");
    return out;
}

Tensor MaxPool1dLayer::backward(const Tensor& grad_out) {
    if (!has_forward_) {
        throw UsageError("maxpool1d backward: no recorded forward pass");
    }
    const std::size_t ch = input_shape_[1];
    const std::size_t out_len = input_shape_[0] / pool_;
    if (grad_out.rank() != 2 || grad_out.shape[0] != out_len || grad_out.shape[1] != ch) {
        throw ConfigError("maxpool1d backward: gradient shape " + grad_out.shape_str() +
                          " does not match output shape [" + std::to_string(out_len) + ", " +
                          std::to_string(ch) + "]");
    }
    Tensor grad_in = Tensor::zeros(input_shape_);
    for (std::size_t wdx = 0; wdx < out_len; ++wdx) {
        for (std::size_t c = 0; c < ch; ++c) {
            grad_in.at(argmax_[wdx * ch + c], c) += grad_out.at(wdx, c);
        }
    }
    return grad_in;
}

// ---- LSTM ----

LstmLayer::LstmLayer(std::size_t n_in, std::size_t cells, Rng& rng)
    : n_in_(n_in),
      cells_(cells),
      input_params_(scaled_uniform({4 * cells, n_in}, n_in, rng), Tensor::zeros({4 * cells})),
      recurrent_params_(scaled_uniform({4 * cells, cells}, cells, rng), Tensor::zeros({0})) {
    if (n_in == 0 || cells == 0) {
        throw ConfigError("lstm: zero-sized layer");
    }
    // Forget-gate bias starts at 1 so early training does not flush the cell.
    for (std::size_t h = 0; h < cells_; ++h) {
        input_params_.biases.value.at(cells_ + h) = 1.0;
    }
}

Tensor LstmLayer::forward(const Tensor& sequence, bool record) const {
    if (sequence.rank() != 2) {
        throw ConfigError("lstm forward: expected rank-2 sequence, got " + sequence.shape_str());
    }
    if (sequence.shape[0] == 0) {
        throw DataError("lstm forward: empty sequence");
    }
    if (sequence.shape[1] != n_in_) {
        throw ConfigError("lstm forward: feature count " + std::to_string(sequence.shape[1]) +
                          " does not match input weights " +
                          input_params_.weights.value.shape_str());
    }
    const std::size_t steps = sequence.shape[0];
    const std::size_t H = cells_;
    const Tensor& wx = input_params_.weights.value;
    const Tensor& wh = recurrent_params_.weights.value;
    const Tensor& b = input_params_.biases.value;

    std::vector<StepCache> caches;
    if (record) {
        caches.reserve(steps);
    }

    Tensor hidden = Tensor::zeros({H});
    Tensor cell = Tensor::zeros({H});
    Tensor out = Tensor::zeros({steps, H});

    for (std::size_t t = 0; t < steps; ++t) {
        StepCache sc;
        sc.hidden_prev = hidden;
        sc.cell_prev = cell;
        sc.x = Tensor::zeros({n_in_});
        for (std::size_t i = 0; i < n_in_; ++i) {
            sc.x.at(i) = sequence.at(t, i);
        }

        // z = Wx x + Wh h_prev + b, gate blocks [i | f | g | o]
        std::vector<double> z(4 * H, 0.0);
        for (std::size_t r = 0; r < 4 * H; ++r) {
            double acc = b.at(r);
            for (std::size_t i = 0; i < n_in_; ++i) {
                acc += wx.at(r, i) * sc.x.at(i);
            }
            for (std::size_t h = 0; h < H; ++h) {
                acc += wh.at(r, h) * hidden.at(h);
            }
            z[r] = acc;
        }

        sc.gate_i = Tensor::zeros({H});
        sc.gate_f = Tensor::zeros({H});
        sc.gate_g = Tensor::zeros({H});
        sc.gate_o = Tensor::zeros({H});
        sc.cell = Tensor::zeros({H});
        sc.cell_tanh = Tensor::zeros({H});

        for (std::size_t h = 0; h < H; ++h) {
            const double gi = sigmoid(z[h]);
            const double gf = sigmoid(z[H + h]);
            const double gg = std::tanh(z[2 * H + h]);
            const double go = sigmoid(z[3 * H + h]);
            const double c_new = gf * cell.at(h) + gi * gg;
            const double c_tanh = std::tanh(c_new);
            sc.gate_i.at(h) = gi;
            sc.gate_f.at(h) = gf;
            sc.gate_g.at(h) = gg;
            sc.gate_o.at(h) = go;
            sc.cell.at(h) = c_new;
            sc.cell_tanh.at(h) = c_tanh;
            cell.at(h) = c_new;
            hidden.at(h) = go * c_tanh;
            out.at(t, h) = hidden.at(h);
        }
        if (record) {
            caches.push_back(std::move(sc));
        }
    }
    if (record) {
        steps_ = std::move(caches);
        has_forward_ = true;
    }
    out.ensure_finite("lstm forward");
    return out;
}

Tensor LstmLayer::backward(const Tensor& grad_hidden_seq) {
    if (!has_forward_) {
        throw UsageError("lstm backward: no recorded forward pass");
    }
    const std::size_t steps = steps_.size();
    const std::size_t H = cells_;
    if (grad_hidden_seq.rank() != 2 || grad_hidden_seq.shape[0] != steps ||
        grad_hidden_seq.shape[1] != H) {
        throw ConfigError("lstm backward: gradient shape " + grad_hidden_seq.shape_str() +
                          " does not match hidden sequence [" + std::to_string(steps) + ", " +
                          std::to_string(H) + "]");
    }
    const Tensor& wx = input_params_.weights.value;
    const Tensor& wh = recurrent_params_.weights.value;

    Tensor grad_seq = Tensor::zeros({steps, n_in_});
    std::vector<double> dh_next(H, 0.0);
    std::vector<double> dc_next(H, 0.0);
    std::vector<double> dz(4 * H, 0.0);

    for (std::size_t ti = steps; ti-- > 0;) {
        const StepCache& sc = steps_[ti];
        for (std::size_t h = 0; h < H; ++h) {
            const double dh = grad_hidden_seq.at(ti, h) + dh_next[h];
            const double go = sc.gate_o.at(h);
            const double ct = sc.cell_tanh.at(h);
            const double d_o = dh * ct;
            const double dc = dh * go * (1.0 - ct * ct) + dc_next[h];
            const double gi = sc.gate_i.at(h);
            const double gf = sc.gate_f.at(h);
            const double gg = sc.gate_g.at(h);
            const double d_i = dc * gg;
            const double d_f = dc * sc.cell_prev.at(h);
            const double d_g = dc * gi;
            dc_next[h] = dc * gf;
            dz[h] = d_i * gi * (1.0 - gi);
            dz[H + h] = d_f * gf * (1.0 - gf);
            dz[2 * H + h] = d_g * (1.0 - gg * gg);
            dz[3 * H + h] = d_o * go * (1.0 - go);
        }

        for (std::size_t h = 0; h < H; ++h) {
            dh_next[h] = 0.0;
        }
        for (std::size_t r = 0; r < 4 * H; ++r) {
            const double d = dz[r];
            if (d == 0.0) {
                continue;
            }
            input_params_.biases.grad.at(r) += d;
            for (std::size_t i = 0; i < n_in_; ++i) {
                input_params_.weights.grad.at(r, i) += d * sc.x.at(i);
                grad_seq.at(ti, i) += wx.at(r, i) * d;
            }
            for (std::size_t h = 0; h < H; ++h) {
                recurrent_params_.weights.grad.at(r, h) += d * sc.hidden_prev.at(h);
                dh_next[h] += wh.at(r, h) * d;
            }
        }
    }
    grad_seq.ensure_finite("lstm backward");
    return grad_seq;
}

// ---- LstmStack ----

LstmStack::LstmStack(std::size_t n_in, const std::vector<std::size_t>& cell_counts, Rng& rng) {
    if (cell_counts.empty()) {
        throw ConfigError("lstm stack: no layers specified");
    }
    std::size_t in = n_in;
    layers_.reserve(cell_counts.size());
    for (std::size_t cells : cell_counts) {
        layers_.emplace_back(in, cells, rng);
        in = cells;
    }
}

Tensor LstmStack::forward(const Tensor& sequence, bool record) const {
    Tensor current = sequence;
    for (const LstmLayer& layer : layers_) {
        current = layer.forward(current, record);
    }
    const std::size_t steps = current.shape[0];
    if (record) {
        steps_cache_ = steps;
        has_forward_ = true;
    }

    const std::size_t H = layers_.back().cells();
    Tensor final_hidden = Tensor::zeros({H});
    for (std::size_t h = 0; h < H; ++h) {
        final_hidden.at(h) = current.at(steps - 1, h);
    }
    return final_hidden;
}

Tensor LstmStack::backward(const Tensor& grad_final_hidden) {
    if (!has_forward_) {
        throw UsageError("lstm stack backward: no recorded forward pass");
    }
    const std::size_t H = layers_.back().cells();
    if (grad_final_hidden.rank() != 1 || grad_final_hidden.numel() != H) {
        throw ConfigError("lstm stack backward: gradient shape " + grad_final_hidden.shape_str() +
                          " does not match final hidden size " + std::to_string(H));
    }
    // Only the last step of the last layer feeds downstream.
    Tensor grad = Tensor::zeros({steps_cache_, H});
    for (std::size_t h = 0; h < H; ++h) {
        grad.at(steps_cache_ - 1, h) = grad_final_hidden.at(h);
    }
    for (std::size_t li = layers_.size(); li-- > 0;) {
        grad = layers_[li].backward(grad);
    }
    return grad;
}

}  // namespace rulkit
