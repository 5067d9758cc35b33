#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rulkit {

/// Dense n-d array of doubles, row-major. The engine's sole value carrier
/// for both forward signals and gradients.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in);

    static Tensor zeros(std::vector<std::size_t> shape_in);
    static Tensor vector1d(std::vector<double> values);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    bool empty() const { return data.empty(); }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }

    // 2-d: [rows, cols]
    double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    // 3-d: [d0, d1, d2]
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    void fill(double value);

    /// Throws NumericalError naming `context` if any entry is NaN/Inf.
    void ensure_finite(const char* context) const;

    std::string shape_str() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

/// a followed by b; both rank-1.
Tensor concat1d(const Tensor& a, const Tensor& b);

/// Splits a rank-1 gradient at index n (inverse of concat1d).
void split1d(const Tensor& grad, std::size_t n, Tensor& grad_a, Tensor& grad_b);

}  // namespace rulkit
