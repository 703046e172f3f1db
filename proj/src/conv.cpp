#include "scod/conv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scod {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace

std::size_t ConvSpec::out_extent(std::size_t in) const {
    validate();
    const std::size_t padded = in + 2 * padding;
    require(padded >= kernel, "ConvSpec: input extent " + std::to_string(in) + " + 2*padding " +
                                  std::to_string(padding) + " smaller than kernel " +
                                  std::to_string(kernel));
    return (padded - kernel) / stride + 1;
}

void ConvSpec::validate() const {
    require(in_channels >= 1, "ConvSpec: in_channels must be >= 1");
    require(out_channels >= 1, "ConvSpec: out_channels must be >= 1");
    require(kernel >= 1 && kernel % 2 == 1,
            "ConvSpec: kernel must be odd and positive, got " + std::to_string(kernel));
    require(stride >= 1, "ConvSpec: stride must be >= 1");
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec) {
    spec.validate();
    require(input.rank() == 3, "conv2d_forward: input rank " + std::to_string(input.rank()) +
                                   ", expected 3 (channels x H x W)");
    require(input.shape[0] == spec.in_channels,
            "conv2d_forward: input channels " + std::to_string(input.shape[0]) +
                " != spec.in_channels " + std::to_string(spec.in_channels));
    require(weights.rank() == 4 && weights.shape[0] == spec.out_channels &&
                weights.shape[1] == spec.in_channels && weights.shape[2] == spec.kernel &&
                weights.shape[3] == spec.kernel,
            "conv2d_forward: weights shape " + weights.shape_string() + " != expected [" +
                std::to_string(spec.out_channels) + "x" + std::to_string(spec.in_channels) + "x" +
                std::to_string(spec.kernel) + "x" + std::to_string(spec.kernel) + "]");
    require(bias.rank() == 1 && bias.shape[0] == spec.out_channels,
            "conv2d_forward: bias shape " + bias.shape_string() + " != [" +
                std::to_string(spec.out_channels) + "]");

    const std::size_t N = spec.in_channels, M = spec.out_channels, k = spec.kernel;
    const std::size_t H = input.shape[1], W = input.shape[2];
    const std::size_t OH = spec.out_extent(H), OW = spec.out_extent(W);
    const long pad = static_cast<long>(spec.padding);
    const long st = static_cast<long>(spec.stride);

    Tensor out({M, OH, OW});
    for (std::size_t m = 0; m < M; ++m) {
        double* om = &out.data[m * OH * OW];
        const double b = bias.data[m];
        for (std::size_t i = 0; i < OH * OW; ++i) om[i] = b;
        for (std::size_t n = 0; n < N; ++n) {
            const double* in = &input.data[n * H * W];
            const double* wmn = &weights.data[((m * N + n) * k) * k];
            for (std::size_t ky = 0; ky < k; ++ky) {
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const double w = wmn[ky * k + kx];
                    for (std::size_t oy = 0; oy < OH; ++oy) {
                        const long iy = static_cast<long>(oy) * st + static_cast<long>(ky) - pad;
                        if (iy < 0 || iy >= static_cast<long>(H)) continue;
                        const double* row = in + static_cast<std::size_t>(iy) * W;
                        double* orow = om + oy * OW;
                        for (std::size_t ox = 0; ox < OW; ++ox) {
                            const long ix =
                                static_cast<long>(ox) * st + static_cast<long>(kx) - pad;
                            if (ix < 0 || ix >= static_cast<long>(W)) continue;
                            orow[ox] += w * row[static_cast<std::size_t>(ix)];
                        }
                    }
                }
            }
        }
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream,
                          const ConvSpec& spec) {
    spec.validate();
    require(input.rank() == 3 && input.shape[0] == spec.in_channels,
            "conv2d_backward: input shape " + input.shape_string() + " inconsistent with spec");
    require(weights.rank() == 4 && weights.shape[0] == spec.out_channels &&
                weights.shape[1] == spec.in_channels && weights.shape[2] == spec.kernel &&
                weights.shape[3] == spec.kernel,
            "conv2d_backward: weights shape " + weights.shape_string() +
                " inconsistent with spec");
    const std::size_t N = spec.in_channels, M = spec.out_channels, k = spec.kernel;
    const std::size_t H = input.shape[1], W = input.shape[2];
    const std::size_t OH = spec.out_extent(H), OW = spec.out_extent(W);
    require(upstream.rank() == 3 && upstream.shape[0] == M && upstream.shape[1] == OH &&
                upstream.shape[2] == OW,
            "conv2d_backward: upstream shape " + upstream.shape_string() + " != expected [" +
                std::to_string(M) + "x" + std::to_string(OH) + "x" + std::to_string(OW) + "]");

    const long pad = static_cast<long>(spec.padding);
    const long st = static_cast<long>(spec.stride);

    ConvGrads g;
    g.grad_input = Tensor({N, H, W});
    g.grad_weights = Tensor({M, N, k, k});
    g.grad_bias = Tensor({M});

    for (std::size_t m = 0; m < M; ++m) {
        const double* um = &upstream.data[m * OH * OW];
        double gb = 0.0;
        for (std::size_t i = 0; i < OH * OW; ++i) gb += um[i];
        g.grad_bias.data[m] = gb;

        for (std::size_t n = 0; n < N; ++n) {
            const double* in = &input.data[n * H * W];
            double* gin = &g.grad_input.data[n * H * W];
            const double* wmn = &weights.data[((m * N + n) * k) * k];
            double* gwmn = &g.grad_weights.data[((m * N + n) * k) * k];
            for (std::size_t ky = 0; ky < k; ++ky) {
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const double w = wmn[ky * k + kx];
                    double gw = 0.0;
                    for (std::size_t oy = 0; oy < OH; ++oy) {
                        const long iy = static_cast<long>(oy) * st + static_cast<long>(ky) - pad;
                        if (iy < 0 || iy >= static_cast<long>(H)) continue;
                        const double* row = in + static_cast<std::size_t>(iy) * W;
                        double* grow = gin + static_cast<std::size_t>(iy) * W;
                        const double* urow = um + oy * OW;
                        for (std::size_t ox = 0; ox < OW; ++ox) {
                            const long ix =
                                static_cast<long>(ox) * st + static_cast<long>(kx) - pad;
                            if (ix < 0 || ix >= static_cast<long>(W)) continue;
                            const double u = urow[ox];
                            gw += u * row[static_cast<std::size_t>(ix)];
                            grow[static_cast<std::size_t>(ix)] += u * w;
                        }
                    }
                    gwmn[ky * k + kx] += gw;
                }
            }
        }
    }
    return g;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
    require(input.same_shape(upstream), "relu_backward: shape mismatch, input " +
                                            input.shape_string() + " vs upstream " +
                                            upstream.shape_string());
    Tensor out = upstream;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        if (input.data[i] <= 0.0) out.data[i] = 0.0;
    return out;
}

MaxPoolResult maxpool_forward(const Tensor& input, std::size_t k, std::size_t s, bool ceil_mode) {
    require(input.rank() == 3, "maxpool: input rank " + std::to_string(input.rank()) +
                                   ", expected 3 (channels x H x W)");
    require(k >= 1 && s >= 1, "maxpool: k and s must be >= 1");
    const std::size_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
    require(H >= k && W >= k, "maxpool: window " + std::to_string(k) + " larger than input " +
                                  input.shape_string());
    auto extent = [&](std::size_t in) {
        const std::size_t fl = (in - k) / s + 1;
        if (!ceil_mode) return fl;
        return (in - k + s - 1) / s + 1; // last window clipped to valid region
    };
    const std::size_t OH = extent(H), OW = extent(W);

    MaxPoolResult r;
    r.output = Tensor({C, OH, OW});
    r.argmax.resize(C * OH * OW);
    for (std::size_t c = 0; c < C; ++c) {
        const double* in = &input.data[c * H * W];
        for (std::size_t oy = 0; oy < OH; ++oy) {
            const std::size_t y0 = oy * s;
            const std::size_t y1 = std::min(y0 + k, H);
            for (std::size_t ox = 0; ox < OW; ++ox) {
                const std::size_t x0 = ox * s;
                const std::size_t x1 = std::min(x0 + k, W);
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_idx = y0 * W + x0;
                for (std::size_t y = y0; y < y1; ++y)
                    for (std::size_t x = x0; x < x1; ++x) {
                        const double v = in[y * W + x];
                        if (v > best) {
                            best = v;
                            best_idx = y * W + x;
                        }
                    }
                const std::size_t o = (c * OH + oy) * OW + ox;
                r.output.data[o] = best;
                r.argmax[o] = c * H * W + best_idx;
            }
        }
    }
    return r;
}

Tensor maxpool_backward(const MaxPoolResult& pool, const std::vector<std::size_t>& input_shape,
                        const Tensor& upstream) {
    require(upstream.same_shape(pool.output), "maxpool_backward: upstream shape " +
                                                  upstream.shape_string() + " != pooled shape " +
                                                  pool.output.shape_string());
    Tensor g(input_shape);
    for (std::size_t i = 0; i < pool.argmax.size(); ++i) g.data[pool.argmax[i]] += upstream.data[i];
    return g;
}

Tensor softmax_channels(const Tensor& input) {
    require(input.rank() >= 1, "softmax_channels: need a channel axis");
    const std::size_t C = input.shape[0];
    const std::size_t sites = input.numel() / C;
    Tensor out = input;
    for (std::size_t p = 0; p < sites; ++p) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < C; ++c) mx = std::max(mx, input.data[c * sites + p]);
        double sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            const double e = std::exp(input.data[c * sites + p] - mx);
            out.data[c * sites + p] = e;
            sum += e;
        }
        for (std::size_t c = 0; c < C; ++c) out.data[c * sites + p] /= sum;
    }
    return out;
}

Tensor softmax_rows(const Tensor& input) {
    require(input.rank() == 2, "softmax_rows: input rank " + std::to_string(input.rank()) +
                                   ", expected 2");
    const std::size_t R = input.shape[0], C = input.shape[1];
    Tensor out = input;
    for (std::size_t r = 0; r < R; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < C; ++c) mx = std::max(mx, input(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            const double e = std::exp(input(r, c) - mx);
            out(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < C; ++c) out(r, c) /= sum;
    }
    return out;
}

Tensor activation_forward(const Tensor& input, const std::string& kind, std::size_t k,
                          std::size_t s) {
    if (kind == "relu") return relu_forward(input);
    if (kind == "softmax") return softmax_channels(input);
    if (kind == "maxpool") {
        require(k >= 1 && s >= 1, "activation_forward: maxpool needs k and s");
        return maxpool_forward(input, k, s).output;
    }
    throw std::invalid_argument("activation_forward: unknown kind '" + kind + "'");
}

Tensor sgd_step(const Tensor& weights, const Tensor& grads, double lr) {
    require(weights.same_shape(grads), "sgd_step: weights " + weights.shape_string() +
                                           " vs grads " + grads.shape_string());
    require(lr >= 0.0, "sgd_step: negative learning rate");
    for (std::size_t i = 0; i < grads.data.size(); ++i)
        if (!std::isfinite(grads.data[i]))
            throw std::invalid_argument("sgd_step: non-finite gradient at flat index " +
                                        std::to_string(i));
    Tensor out = weights;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= lr * grads.data[i];
    return out;
}

} // namespace scod
