#pragma once

#include <cstdint>
#include <vector>

#include "rulkit/layers.hpp"

namespace rulkit {

enum class OptimizerKind { sgd, adam };

/// In-place gradient-descent update over an ordered parameter list.
/// Adam keeps bias-corrected first/second moments (beta1 0.9, beta2 0.999,
/// eps 1e-8). A non-finite gradient aborts the step with a diagnostic.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate);

    void step(const std::vector<ParamTensor*>& params);
    void zero_grads(const std::vector<ParamTensor*>& params);

    OptimizerKind kind() const { return kind_; }
    std::int64_t steps_taken() const { return step_count_; }

private:
    OptimizerKind kind_;
    double lr_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    std::int64_t step_count_ = 0;
    std::vector<std::vector<double>> moment1_;
    std::vector<std::vector<double>> moment2_;
};

}  // namespace rulkit
