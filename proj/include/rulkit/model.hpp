#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rulkit/dataset.hpp"
#include "rulkit/layers.hpp"
#include "rulkit/optimizer.hpp"

namespace rulkit {

enum class ModelVariant { hybrid, cnn_only, lstm_only, mlp };

std::string variant_name(ModelVariant variant);
ModelVariant variant_from_name(const std::string& name);

/// Declarative layer graph. The default hybrid wiring is
///   conditions [6,1] -> conv(f0,k3,same) -> pool2 -> conv(f1) -> pool2
///                    -> conv(f2) -> flatten
///   power window [3,1] -> LSTM c0 -> c1 -> c2 (final hidden)
///   concat -> dense(head, relu) -> dense(1, identity)
/// with filters 32/32/16 and cells 40/20/10. Pooling sits after every conv
/// layer except the last; a length-6 input does not survive a third halving.
struct ModelSpec {
    ModelVariant variant = ModelVariant::hybrid;
    std::vector<std::size_t> conv_filters = {32, 32, 16};
    std::size_t conv_kernel = 3;
    std::size_t pool_size = 2;
    std::vector<std::size_t> lstm_cells = {40, 20, 10};
    std::size_t head_width = 64;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError naming the offending stage
    std::size_t flatten_width() const;
    std::size_t head_input_width() const;
};

struct TrainConfig {
    std::size_t epochs = 500;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::size_t patience = 50;
    // Fraction of the train split held out for early stopping; 0 disables
    // validation and runs all epochs.
    double validation_fraction = 0.1;

    void validate() const;
};

struct EpochStats {
    double train_mse = 0.0;
    double val_mse = 0.0;  // NaN when no validation split
};

struct TrainResult {
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;  // 1-based; 0 when no epoch ran
    double best_val_mse = 0.0;
    bool aborted_nan = false;
};

class Model {
public:
    static Model build(const ModelSpec& spec);

    const ModelSpec& spec() const { return spec_; }

    bool has_stats() const { return has_stats_; }
    const NormalizationStats& stats() const;
    void set_stats(const NormalizationStats& stats);

    /// Raw network output for a normalized sample. Training passes record
    /// the backward tape; inference passes are const-safe and shareable.
    double forward(const NormalizedSample& sample, bool record) const;
    void backward(double grad_output);

    /// Denormalized prediction in hours, clamped below at 0.
    double predict_rul_h(const NormalizedSample& sample) const;

    /// Batch prediction from raw samples; `stats` must fingerprint-match the
    /// stats the model was trained with.
    std::vector<double> predict_rul_h(const std::vector<Sample>& samples,
                                      const NormalizationStats& stats) const;

    std::vector<ParamTensor*> parameters();
    std::size_t parameter_count() const;
    std::vector<double> snapshot_parameters() const;
    void restore_parameters(const std::vector<double>& flat);

private:
    explicit Model(const ModelSpec& spec);

    ModelSpec spec_;
    bool has_stats_ = false;
    NormalizationStats stats_;

    std::vector<Conv1dLayer> convs_;
    std::vector<MaxPool1dLayer> pools_;
    std::optional<LstmStack> lstm_;
    std::optional<DenseLayer> head_hidden_;
    std::optional<DenseLayer> head_output_;

    bool uses_cnn_branch() const;
    bool uses_lstm_branch() const;
    Tensor conv_branch_forward(const Tensor& cond_seq, bool record) const;
    void conv_branch_backward(const Tensor& grad_flat);
    mutable std::vector<std::size_t> conv_out_shape_;
};

/// Minimizes MSE on the normalized RUL with seeded shuffling; returns the
/// per-epoch loss history. On a non-finite loss or gradient the run aborts
/// and the model keeps the best parameters seen so far.
TrainResult train_model(Model& model, const SplitDataset& data, const TrainConfig& config);

struct CheckpointMeta {
    std::size_t epochs_trained = 0;
    std::size_t best_epoch = 0;
    double final_train_mse = 0.0;
    double final_val_mse = 0.0;
    bool aborted_nan = false;
};

void save_checkpoint(const Model& model, const CheckpointMeta& meta, const std::string& path);
Model load_checkpoint(const std::string& path, CheckpointMeta* meta_out = nullptr);

constexpr int kCheckpointFormatVersion = 1;

}  // namespace rulkit
