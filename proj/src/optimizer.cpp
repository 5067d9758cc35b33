#include "rulkit/optimizer.hpp"

#include <cmath>
#include <string>

#include "rulkit/errors.hpp"

namespace rulkit {

Optimizer::Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {
    if (!(learning_rate > 0.0)) {
        throw ConfigError("optimizer: learning rate must be positive, got " +
                          std::to_string(learning_rate));
    }
}

void Optimizer::step(const std::vector<ParamTensor*>& params) {
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        for (double g : params[pi]->grad.data) {
            if (!std::isfinite(g)) {
                throw NumericalError("optimizer step " + std::to_string(step_count_ + 1) +
                                     ": non-finite gradient in parameter tensor " +
                                     std::to_string(pi) + " of shape " +
                                     params[pi]->grad.shape_str());
            }
        }
    }

    if (kind_ == OptimizerKind::sgd) {
        ++step_count_;
        for (ParamTensor* p : params) {
            for (std::size_t i = 0; i < p->value.numel(); ++i) {
                p->value.at(i) -= lr_ * p->grad.at(i);
            }
        }
        return;
    }

    // Adam
    if (moment1_.empty()) {
        moment1_.resize(params.size());
        moment2_.resize(params.size());
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            moment1_[pi].assign(params[pi]->value.numel(), 0.0);
            moment2_[pi].assign(params[pi]->value.numel(), 0.0);
        }
    }
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double corr1 = 1.0 - std::pow(beta1_, t);
    const double corr2 = 1.0 - std::pow(beta2_, t);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        ParamTensor* p = params[pi];
        std::vector<double>& m = moment1_[pi];
        std::vector<double>& v = moment2_[pi];
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            const double g = p->grad.at(i);
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
            const double m_hat = m[i] / corr1;
            const double v_hat = v[i] / corr2;
            p->value.at(i) -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }
}

void Optimizer::zero_grads(const std::vector<ParamTensor*>& params) {
    for (ParamTensor* p : params) {
        p->zero_grad();
    }
}

}  // namespace rulkit
