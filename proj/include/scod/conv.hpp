#pragma once

#include <string>
#include <vector>

#include "scod/tensor.hpp"

namespace scod {

// Convolution geometry. Cross-correlation semantics (no kernel flip),
// stride and zero padding explicit.
struct ConvSpec {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel = 1; // odd
    std::size_t stride = 1;
    std::size_t padding = 0;

    // floor((I + 2*padding - kernel)/stride) + 1; throws if < 1
    std::size_t out_extent(std::size_t in) const;
    void validate() const;
};

// input [N,H,W], weights [M,N,k,k], bias [M] -> [M,OH,OW]
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec);

struct ConvGrads {
    Tensor grad_input;
    Tensor grad_weights;
    Tensor grad_bias;
};

// Exact analytic gradients of conv2d_forward.
ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream,
                          const ConvSpec& spec);

Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& upstream);

struct MaxPoolResult {
    Tensor output;
    // flat input index of the winning element per output element
    // (ties: first in window scan order)
    std::vector<std::size_t> argmax;
};

// input [C,H,W]; floor semantics by default, ceil_mode clips the last
// window to the valid region instead of dropping it.
MaxPoolResult maxpool_forward(const Tensor& input, std::size_t k, std::size_t s,
                              bool ceil_mode = false);
Tensor maxpool_backward(const MaxPoolResult& pool, const std::vector<std::size_t>& input_shape,
                        const Tensor& upstream);

// softmax along axis 0 of [C,...] (per spatial site)
Tensor softmax_channels(const Tensor& input);
// softmax along the last axis of [R,C] (per row)
Tensor softmax_rows(const Tensor& input);

// String-dispatched activation: kind in {"relu", "softmax", "maxpool"};
// maxpool takes k and s. Unknown kind is rejected.
Tensor activation_forward(const Tensor& input, const std::string& kind, std::size_t k = 0,
                          std::size_t s = 0);

// weights - lr * grads, elementwise. Rejects shape mismatch and
// non-finite gradients.
Tensor sgd_step(const Tensor& weights, const Tensor& grads, double lr);

} // namespace scod
