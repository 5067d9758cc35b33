#include "rulkit/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "rulkit/errors.hpp"

namespace rulkit {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        n *= e;
    }
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
    if (shape_product(shape) != data.size()) {
        throw ConfigError("tensor: shape " + shape_str() + " does not match data length " +
                          std::to_string(data.size()));
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape_in) {
    const std::size_t n = shape_product(shape_in);
    return Tensor(std::move(shape_in), std::vector<double>(n, 0.0));
}

Tensor Tensor::vector1d(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

void Tensor::fill(double value) {
    for (double& v : data) {
        v = value;
    }
}

void Tensor::ensure_finite(const char* context) const {
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw NumericalError(std::string(context) + ": non-finite value in tensor of shape " +
                                 shape_str());
        }
    }
}

std::string Tensor::shape_str() const {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            out << ", ";
        }
        out << shape[i];
    }
    out << "]";
    return out.str();
}

Tensor concat1d(const Tensor& a, const Tensor& b) {
    if (a.rank() != 1 || b.rank() != 1) {
        throw ConfigError("concat: expects rank-1 operands, got " + a.shape_str() + " and " +
                          b.shape_str());
    }
    std::vector<double> out;
    out.reserve(a.numel() + b.numel());
    out.insert(out.end(), a.data.begin(), a.data.end());
    out.insert(out.end(), b.data.begin(), b.data.end());
    return Tensor::vector1d(std::move(out));
}

void split1d(const Tensor& grad, std::size_t n, Tensor& grad_a, Tensor& grad_b) {
    if (grad.rank() != 1 || n > grad.numel()) {
        throw ConfigError("concat backward: cannot split gradient " + grad.shape_str() + " at " +
                          std::to_string(n));
    }
    grad_a = Tensor::vector1d(std::vector<double>(grad.data.begin(), grad.data.begin() + static_cast<std::ptrdiff_t>(n)));
    grad_b = Tensor::vector1d(std::vector<double>(grad.data.begin() + static_cast<std::ptrdiff_t>(n), grad.data.end()));
}

}  // namespace rulkit
