#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "scod/rng.hpp"

namespace scod {

// Dense row-major N-d array of doubles. Carrier for images, feature maps,
// weights and gradients.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
        : shape(std::move(s)), data(count(shape), fill) {}

    static Tensor from(std::vector<std::size_t> s, std::vector<double> values) {
        Tensor t;
        t.shape = std::move(s);
        if (count(t.shape) != values.size())
            throw std::invalid_argument("Tensor::from: " + std::to_string(values.size()) +
                                        " values for shape " + shape_str(t.shape));
        t.data = std::move(values);
        return t;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    double& operator()(std::size_t i) { return data[i]; }
    double operator()(std::size_t i) const { return data[i]; }

    double& operator()(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;

    std::string shape_string() const { return shape_str(shape); }

    static std::size_t count(const std::vector<std::size_t>& s);
    static std::string shape_str(const std::vector<std::size_t>& s);
};

// Uniform init in [lo, hi) from a seeded generator.
Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi, Rng& rng);

// Glorot-style init: uniform in +/- sqrt(6 / (fan_in + fan_out)).
Tensor glorot_tensor(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                     Rng& rng);

} // namespace scod
