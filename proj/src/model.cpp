#include "rulkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rulkit/errors.hpp"
#include "rulkit/rng.hpp"

namespace rulkit {

namespace {

constexpr std::size_t kWindowSteps = static_cast<std::size_t>(kWindowSize);

double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

std::string variant_name(ModelVariant variant) {
    switch (variant) {
        case ModelVariant::hybrid:
            return "hybrid";
        case ModelVariant::cnn_only:
            return "cnn_only";
        case ModelVariant::lstm_only:
            return "lstm_only";
        case ModelVariant::mlp:
            return "mlp";
    }
    return "hybrid";
}

ModelVariant variant_from_name(const std::string& name) {
    if (name == "hybrid") {
        return ModelVariant::hybrid;
    }
    if (name == "cnn_only") {
        return ModelVariant::cnn_only;
    }
    if (name == "lstm_only") {
        return ModelVariant::lstm_only;
    }
    if (name == "mlp") {
        return ModelVariant::mlp;
    }
    throw ConfigError("unknown model variant '" + name +
                      "' (expected hybrid, cnn_only, lstm_only or mlp)");
}

void ModelSpec::validate() const {
    if (head_width == 0) {
        throw ConfigError("model spec: head width must be positive");
    }
    const bool needs_cnn = variant == ModelVariant::hybrid || variant == ModelVariant::cnn_only;
    const bool needs_lstm = variant == ModelVariant::hybrid || variant == ModelVariant::lstm_only;
    if (needs_cnn) {
        if (conv_filters.empty()) {
            throw ConfigError("model spec: conv branch requires at least one filter count");
        }
        for (std::size_t f : conv_filters) {
            if (f == 0) {
                throw ConfigError("model spec: conv branch has a zero filter count");
            }
        }
        if (conv_kernel % 2 == 0 || conv_kernel == 0) {
            throw ConfigError("model spec: conv kernel must be odd, got " +
                              std::to_string(conv_kernel));
        }
        if (pool_size == 0) {
            throw ConfigError("model spec: pool size must be positive");
        }
        // shape arithmetic over the fixed-length condition sequence
        std::size_t len = kConditionCount;
        for (std::size_t li = 0; li + 1 < conv_filters.size(); ++li) {
            if (len < pool_size) {
                throw ConfigError("model spec: conv stage " + std::to_string(li + 1) +
                                  " leaves length " + std::to_string(len) +
                                  ", too short for pool size " + std::to_string(pool_size));
            }
            len /= pool_size;
        }
        if (len == 0) {
            throw ConfigError("model spec: pooling annihilates the condition sequence");
        }
    }
    if (needs_lstm) {
        if (lstm_cells.empty()) {
            throw ConfigError("model spec: lstm branch requires at least one cell count");
        }
        for (std::size_t c : lstm_cells) {
            if (c == 0) {
                throw ConfigError("model spec: lstm branch has a zero cell count");
            }
        }
    }
}

std::size_t ModelSpec::flatten_width() const {
    std::size_t len = kConditionCount;
    for (std::size_t li = 0; li + 1 < conv_filters.size(); ++li) {
        len /= pool_size;
    }
    return len * conv_filters.back();
}

std::size_t ModelSpec::head_input_width() const {
    switch (variant) {
        case ModelVariant::hybrid:
            return flatten_width() + lstm_cells.back();
        case ModelVariant::cnn_only:
            return flatten_width();
        case ModelVariant::lstm_only:
            return lstm_cells.back();
        case ModelVariant::mlp:
            return kWindowSteps + kConditionCount;
    }
    return 0;
}

bool Model::uses_cnn_branch() const {
    return spec_.variant == ModelVariant::hybrid || spec_.variant == ModelVariant::cnn_only;
}

bool Model::uses_lstm_branch() const {
    return spec_.variant == ModelVariant::hybrid || spec_.variant == ModelVariant::lstm_only;
}

Model::Model(const ModelSpec& spec) : spec_(spec) {
    Rng rng(mix_seed(spec.seed, 0x696e6974ULL));  // "init"
    if (uses_cnn_branch()) {
        std::size_t ch = 1;
        for (std::size_t li = 0; li < spec_.conv_filters.size(); ++li) {
            convs_.emplace_back(ch, spec_.conv_filters[li], spec_.conv_kernel, rng);
            ch = spec_.conv_filters[li];
            if (li + 1 < spec_.conv_filters.size()) {
                pools_.emplace_back(spec_.pool_size);
            }
        }
    }
    if (uses_lstm_branch()) {
        lstm_.emplace(1, spec_.lstm_cells, rng);
    }
    head_hidden_.emplace(spec_.head_input_width(), spec_.head_width, Activation::relu, rng);
    head_output_.emplace(spec_.head_width, 1, Activation::identity, rng);
}

Model Model::build(const ModelSpec& spec) {
    spec.validate();
    return Model(spec);
}

const NormalizationStats& Model::stats() const {
    if (!has_stats_) {
        throw UsageError("model: normalization stats not set (train or load first)");
    }
    return stats_;
}

void Model::set_stats(const NormalizationStats& stats) {
    stats_ = stats;
    has_stats_ = true;
}

Tensor Model::conv_branch_forward(const Tensor& cond_seq, bool record) const {
    Tensor current = cond_seq;
    for (std::size_t li = 0; li < convs_.size(); ++li) {
        current = convs_[li].forward(current, record);
        if (li < pools_.size()) {
            current = pools_[li].forward(current, record);
        }
    }
    if (record) {
        conv_out_shape_ = current.shape;
    }
    // flatten [len, ch] row-major
    return Tensor::vector1d(std::move(current.data));
}

void Model::conv_branch_backward(const Tensor& grad_flat) {
    Tensor grad(conv_out_shape_, grad_flat.data);
    for (std::size_t li = convs_.size(); li-- > 0;) {
        // pools sit after every conv except the last
        if (li < pools_.size() && li + 1 < convs_.size()) {
            grad = pools_[li].backward(grad);
        }
        grad = convs_[li].backward(grad);
    }
}

double Model::forward(const NormalizedSample& sample, bool record) const {
    Tensor fused;
    switch (spec_.variant) {
        case ModelVariant::hybrid: {
            Tensor cond_seq({kConditionCount, 1},
                            {sample.conditions.begin(), sample.conditions.end()});
            Tensor flat = conv_branch_forward(cond_seq, record);
            Tensor window_seq({kWindowSteps, 1}, {sample.window.begin(), sample.window.end()});
            Tensor hidden = lstm_->forward(window_seq, record);
            fused = concat1d(flat, hidden);
            break;
        }
        case ModelVariant::cnn_only: {
            Tensor cond_seq({kConditionCount, 1},
                            {sample.conditions.begin(), sample.conditions.end()});
            fused = conv_branch_forward(cond_seq, record);
            break;
        }
        case ModelVariant::lstm_only: {
            Tensor window_seq({kWindowSteps, 1}, {sample.window.begin(), sample.window.end()});
            fused = lstm_->forward(window_seq, record);
            break;
        }
        case ModelVariant::mlp: {
            Tensor window = Tensor::vector1d({sample.window.begin(), sample.window.end()});
            Tensor cond = Tensor::vector1d({sample.conditions.begin(), sample.conditions.end()});
            fused = concat1d(window, cond);
            break;
        }
    }
    const Tensor hidden = head_hidden_->forward(fused, record);
    const Tensor out = head_output_->forward(hidden, record);
    return out.at(0);
}

void Model::backward(double grad_output) {
    Tensor grad_out = Tensor::vector1d({grad_output});
    Tensor grad_hidden = head_output_->backward(grad_out);
    Tensor grad_fused = head_hidden_->backward(grad_hidden);

    switch (spec_.variant) {
        case ModelVariant::hybrid: {
            Tensor grad_flat;
            Tensor grad_lstm;
            split1d(grad_fused, spec_.flatten_width(), grad_flat, grad_lstm);
            conv_branch_backward(grad_flat);
            lstm_->backward(grad_lstm);
            break;
        }
        case ModelVariant::cnn_only:
            conv_branch_backward(grad_fused);
            break;
        case ModelVariant::lstm_only:
            lstm_->backward(grad_fused);
            break;
        case ModelVariant::mlp:
            break;  // input gradients are not consumed
    }
}

double Model::predict_rul_h(const NormalizedSample& sample) const {
    const double raw = forward(sample, false);
    const double hours = raw * stats().rul_cap_h;
    return std::max(hours, 0.0);
}

std::vector<double> Model::predict_rul_h(const std::vector<Sample>& samples,
                                         const NormalizationStats& stats_in) const {
    if (stats_in.fingerprint() != stats().fingerprint()) {
        throw UsageError("model: normalization stats do not match the checkpoint's stats");
    }
    std::vector<double> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) {
        out.push_back(predict_rul_h(apply_normalize(s, stats_)));
    }
    return out;
}

std::vector<ParamTensor*> Model::parameters() {
    // Canonical checkpoint order: conv layers (weights, biases), lstm layers
    // (input weights, input biases, recurrent weights), head layers.
    std::vector<ParamTensor*> params;
    for (Conv1dLayer& conv : convs_) {
        params.push_back(&conv.params().weights);
        params.push_back(&conv.params().biases);
    }
    if (lstm_) {
        for (LstmLayer& layer : lstm_->layers()) {
            params.push_back(&layer.input_params().weights);
            params.push_back(&layer.input_params().biases);
            params.push_back(&layer.recurrent_params().weights);
        }
    }
    params.push_back(&head_hidden_->params().weights);
    params.push_back(&head_hidden_->params().biases);
    params.push_back(&head_output_->params().weights);
    params.push_back(&head_output_->params().biases);
    return params;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const ParamTensor* p : const_cast<Model*>(this)->parameters()) {
        n += p->value.numel();
    }
    return n;
}

std::vector<double> Model::snapshot_parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const ParamTensor* p : const_cast<Model*>(this)->parameters()) {
        flat.insert(flat.end(), p->value.data.begin(), p->value.data.end());
    }
    return flat;
}

void Model::restore_parameters(const std::vector<double>& flat) {
    std::size_t offset = 0;
    for (ParamTensor* p : parameters()) {
        if (offset + p->value.numel() > flat.size()) {
            throw UsageError("model: parameter snapshot too short");
        }
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                  flat.begin() + static_cast<std::ptrdiff_t>(offset + p->value.numel()),
                  p->value.data.begin());
        offset += p->value.numel();
    }
    if (offset != flat.size()) {
        throw UsageError("model: parameter snapshot has " + std::to_string(flat.size()) +
                         " values, expected " + std::to_string(offset));
    }
}

void TrainConfig::validate() const {
    if (batch_size == 0) {
        throw ConfigError("train config: batch_size must be positive");
    }
    if (!(learning_rate > 0.0)) {
        throw ConfigError("train config: learning_rate must be positive");
    }
    if (validation_fraction < 0.0 || validation_fraction >= 0.5) {
        throw ConfigError("train config: validation_fraction must be in [0, 0.5)");
    }
    if (validation_fraction > 0.0 && patience == 0) {
        throw ConfigError("train config: patience must be positive when validating");
    }
}

TrainResult train_model(Model& model, const SplitDataset& data, const TrainConfig& config) {
    config.validate();
    if (data.train.empty()) {
        throw UsageError("train: empty training split");
    }
    model.set_stats(data.stats);

    std::vector<NormalizedSample> all;
    all.reserve(data.train.size());
    for (const Sample& s : data.train) {
        all.push_back(apply_normalize(s, data.stats));
    }

    // Deterministic validation carve-out, then per-epoch shuffles, all from
    // the model seed.
    std::vector<std::size_t> indices(all.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        indices[i] = i;
    }
    std::vector<std::size_t> val_indices;
    if (config.validation_fraction > 0.0 && all.size() >= 2) {
        Rng carve_rng(mix_seed(model.spec().seed, 0x76616cULL));  // "val"
        carve_rng.shuffle(indices);
        std::size_t k = static_cast<std::size_t>(
            std::llround(config.validation_fraction * static_cast<double>(all.size())));
        k = std::clamp<std::size_t>(k, 1, all.size() - 1);
        val_indices.assign(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(k));
        indices.erase(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(k));
    }
    const bool has_val = !val_indices.empty();

    Optimizer optimizer(config.optimizer, config.learning_rate);
    const std::vector<ParamTensor*> params = model.parameters();
    Rng shuffle_rng(mix_seed(model.spec().seed, 0x65706f6368ULL));  // "epoch"

    TrainResult result;
    result.best_val_mse = quiet_nan();
    std::vector<double> best_params = model.snapshot_parameters();
    double best_monitor = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    auto eval_mse = [&](const std::vector<std::size_t>& idx) {
        double acc = 0.0;
        for (std::size_t i : idx) {
            const double err = model.forward(all[i], false) - all[i].target;
            acc += err * err;
        }
        return acc / static_cast<double>(idx.size());
    };

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(indices);
        double epoch_sq_sum = 0.0;
        bool aborted = false;
        for (std::size_t start = 0; start < indices.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, indices.size());
            const double batch_n = static_cast<double>(end - start);
            optimizer.zero_grads(params);
            try {
                for (std::size_t bi = start; bi < end; ++bi) {
                    const NormalizedSample& s = all[indices[bi]];
                    const double out = model.forward(s, true);
                    const double err = out - s.target;
                    if (!std::isfinite(err)) {
                        throw NumericalError("train: non-finite loss at epoch " +
                                             std::to_string(epoch));
                    }
                    epoch_sq_sum += err * err;
                    model.backward(2.0 * err / batch_n);
                }
                optimizer.step(params);
            } catch (const NumericalError&) {
                aborted = true;
                break;
            }
        }
        if (aborted) {
            result.aborted_nan = true;
            break;
        }

        EpochStats stats;
        stats.train_mse = epoch_sq_sum / static_cast<double>(indices.size());
        stats.val_mse = has_val ? eval_mse(val_indices) : quiet_nan();
        result.history.push_back(stats);

        const double monitor = has_val ? stats.val_mse : stats.train_mse;
        if (monitor < best_monitor) {
            best_monitor = monitor;
            best_params = model.snapshot_parameters();
            result.best_epoch = epoch;
            result.best_val_mse = monitor;
            since_best = 0;
        } else {
            ++since_best;
            if (has_val && since_best >= config.patience) {
                break;
            }
        }
    }

    // Keep the best parameters seen; with validation disabled the monitor is
    // the train loss, still protecting against a late divergence or NaN abort.
    model.restore_parameters(best_params);
    return result;
}

// ---- checkpoint serialization ----

namespace {

std::string hex_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

double parse_hex_double(const std::string& s, const std::string& field) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || (end != nullptr && *end != '\0')) {
        throw ParseError("checkpoint: field '" + field + "': invalid number '" + s + "'");
    }
    return v;
}

std::string sizes_to_string(const std::vector<std::size_t>& v) {
    std::ostringstream out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
            out << " ";
        }
        out << v[i];
    }
    return out.str();
}

std::vector<std::size_t> sizes_from_string(const std::string& s, const std::string& field) {
    std::vector<std::size_t> out;
    std::istringstream in(s);
    long long v = 0;
    while (in >> v) {
        if (v <= 0) {
            throw ParseError("checkpoint: field '" + field + "': non-positive size");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) {
        throw ParseError("checkpoint: field '" + field + "': empty size list");
    }
    return out;
}

}  // namespace

void save_checkpoint(const Model& model, const CheckpointMeta& meta, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write checkpoint " + path);
    }
    const ModelSpec& spec = model.spec();
    const NormalizationStats& stats = model.stats();

    out << "rulkit-checkpoint\n";
    out << "format_version " << kCheckpointFormatVersion << "\n";
    out << "variant " << variant_name(spec.variant) << "\n";
    out << "conv_filters " << sizes_to_string(spec.conv_filters) << "\n";
    out << "conv_kernel " << spec.conv_kernel << "\n";
    out << "pool_size " << spec.pool_size << "\n";
    out << "lstm_cells " << sizes_to_string(spec.lstm_cells) << "\n";
    out << "head_width " << spec.head_width << "\n";
    out << "seed " << spec.seed << "\n";
    out << "epochs_trained " << meta.epochs_trained << "\n";
    out << "best_epoch " << meta.best_epoch << "\n";
    out << "final_train_mse " << hex_double(meta.final_train_mse) << "\n";
    out << "final_val_mse " << hex_double(meta.final_val_mse) << "\n";
    out << "aborted_nan " << (meta.aborted_nan ? 1 : 0) << "\n";
    out << "stats_power " << hex_double(stats.power.min) << " " << hex_double(stats.power.max)
        << "\n";
    for (std::size_t f = 0; f < kConditionCount; ++f) {
        out << "stats_cond" << f << " " << hex_double(stats.conditions[f].min) << " "
            << hex_double(stats.conditions[f].max) << "\n";
    }
    out << "stats_rul_cap " << hex_double(stats.rul_cap_h) << "\n";

    const std::vector<double> flat = model.snapshot_parameters();
    out << "param_count " << flat.size() << "\n";
    for (double v : flat) {
        out << hex_double(v) << "\n";
    }
    if (!out) {
        throw IoError("write failure on checkpoint " + path);
    }
}

Model load_checkpoint(const std::string& path, CheckpointMeta* meta_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint " + path);
    }
    std::string line;
    if (!std::getline(in, line) || line != "rulkit-checkpoint") {
        throw ParseError("checkpoint " + path + ": missing magic header line");
    }

    std::map<std::string, std::string> fields;
    std::size_t param_count = 0;
    bool saw_param_count = false;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const std::size_t space = line.find(' ');
        const std::string key = line.substr(0, space);
        const std::string value = space == std::string::npos ? "" : line.substr(space + 1);
        if (key == "param_count") {
            param_count = static_cast<std::size_t>(
                std::strtoull(value.c_str(), nullptr, 10));
            saw_param_count = true;
            break;
        }
        fields[key] = value;
    }
    if (!saw_param_count) {
        throw ParseError("checkpoint " + path + ": missing field 'param_count'");
    }

    auto require = [&](const std::string& key) -> const std::string& {
        const auto it = fields.find(key);
        if (it == fields.end()) {
            throw ParseError("checkpoint " + path + ": missing field '" + key + "'");
        }
        return it->second;
    };

    const int version = static_cast<int>(std::strtol(require("format_version").c_str(), nullptr, 10));
    if (version != kCheckpointFormatVersion) {
        throw ParseError("checkpoint " + path + ": unsupported format_version " +
                         std::to_string(version) + " (this build reads version " +
                         std::to_string(kCheckpointFormatVersion) + ")");
    }

    ModelSpec spec;
    spec.variant = variant_from_name(require("variant"));
    spec.conv_filters = sizes_from_string(require("conv_filters"), "conv_filters");
    spec.conv_kernel = sizes_from_string(require("conv_kernel"), "conv_kernel")[0];
    spec.pool_size = sizes_from_string(require("pool_size"), "pool_size")[0];
    spec.lstm_cells = sizes_from_string(require("lstm_cells"), "lstm_cells");
    spec.head_width = sizes_from_string(require("head_width"), "head_width")[0];
    spec.seed = std::strtoull(require("seed").c_str(), nullptr, 10);

    NormalizationStats stats;
    auto parse_range = [&](const std::string& key) {
        std::istringstream rin(require(key));
        std::string lo;
        std::string hi;
        if (!(rin >> lo >> hi)) {
            throw ParseError("checkpoint " + path + ": field '" + key + "' needs two values");
        }
        return FeatureRange{parse_hex_double(lo, key), parse_hex_double(hi, key)};
    };
    stats.power = parse_range("stats_power");
    for (std::size_t f = 0; f < kConditionCount; ++f) {
        stats.conditions[f] = parse_range("stats_cond" + std::to_string(f));
    }
    stats.rul_cap_h = parse_hex_double(require("stats_rul_cap"), "stats_rul_cap");

    CheckpointMeta meta;
    meta.epochs_trained = std::strtoull(require("epochs_trained").c_str(), nullptr, 10);
    meta.best_epoch = std::strtoull(require("best_epoch").c_str(), nullptr, 10);
    meta.final_train_mse = parse_hex_double(require("final_train_mse"), "final_train_mse");
    meta.final_val_mse = parse_hex_double(require("final_val_mse"), "final_val_mse");
    meta.aborted_nan = require("aborted_nan") == "1";

    Model model = Model::build(spec);
    if (param_count != model.parameter_count()) {
        throw ParseError("checkpoint " + path + ": param_count " + std::to_string(param_count) +
                         " does not match the declared architecture (" +
                         std::to_string(model.parameter_count()) + " parameters)");
    }
    std::vector<double> flat;
    flat.reserve(param_count);
    while (flat.size() < param_count && std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        flat.push_back(parse_hex_double(line, "parameter " + std::to_string(flat.size())));
    }
    if (flat.size() != param_count) {
        throw ParseError("checkpoint " + path + ": truncated parameter block (got " +
                         std::to_string(flat.size()) + " of " + std::to_string(param_count) +
                         " values)");
    }
    model.restore_parameters(flat);
    model.set_stats(stats);
    if (meta_out != nullptr) {
        *meta_out = meta;
    }
    return model;
}

}  // namespace rulkit
