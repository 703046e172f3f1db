#include "scod/spiking.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "scod/rng.hpp"

namespace scod {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace

std::size_t SpikeTrain::spike_count(std::size_t n) const {
    std::size_t c = 0;
    for (std::size_t t = 0; t < timesteps; ++t) c += get(n, t);
    return c;
}

std::size_t SpikeTrain::total_spikes() const {
    std::size_t c = 0;
    for (std::uint8_t e : events) c += e;
    return c;
}

double SpikeTrain::decode_rate(std::size_t n) const {
    return static_cast<double>(spike_count(n)) / static_cast<double>(timesteps);
}

std::vector<std::size_t> SpikeTrain::firing_times(std::size_t n) const {
    std::vector<std::size_t> times;
    for (std::size_t t = 0; t < timesteps; ++t)
        if (get(n, t)) times.push_back(t);
    return times;
}

SpikeTrain encode_rate(const Tensor& values, std::size_t timesteps, RateCoding mode,
                       std::uint64_t seed) {
    require(timesteps >= 1, "encode_rate: timesteps must be >= 1");
    for (std::size_t i = 0; i < values.data.size(); ++i) {
        const double v = values.data[i];
        require(v >= 0.0 && v <= 1.0, "encode_rate: value " + std::to_string(v) +
                                          " at flat index " + std::to_string(i) +
                                          " outside [0,1]");
    }
    SpikeTrain train(values.numel(), timesteps);
    if (mode == RateCoding::Periodic) {
        for (std::size_t n = 0; n < train.neurons; ++n) {
            const double v = values.data[n];
            for (std::size_t t = 0; t < timesteps; ++t) {
                const double a = std::floor(static_cast<double>(t) * v);
                const double b = std::floor(static_cast<double>(t + 1) * v);
                if (b > a) train.set(n, t, 1);
            }
        }
    } else {
        Rng rng(seed);
        for (std::size_t n = 0; n < train.neurons; ++n) {
            const double v = values.data[n];
            for (std::size_t t = 0; t < timesteps; ++t)
                if (rng.uniform() < v) train.set(n, t, 1);
        }
    }
    return train;
}

LifState LifState::make(std::size_t neurons, double v_th, std::size_t inputs, double tau) {
    require(v_th > 0.0, "LifState: v_th must be positive");
    require(tau > 0.0, "LifState: tau must be positive");
    LifState s;
    s.membrane.assign(neurons, 0.0);
    s.v_th = v_th;
    s.trace.assign(inputs, 0.0);
    s.tau = tau;
    return s;
}

std::vector<std::uint8_t> lif_step(LifState& state, const std::vector<double>& input_current) {
    require(input_current.size() == state.membrane.size(),
            "lif_step: input size " + std::to_string(input_current.size()) + " != neuron count " +
                std::to_string(state.membrane.size()));
    std::vector<std::uint8_t> spikes(state.membrane.size(), 0);
    for (std::size_t j = 0; j < state.membrane.size(); ++j) {
        require(std::isfinite(input_current[j]),
                "lif_step: non-finite input at neuron " + std::to_string(j));
        state.membrane[j] += input_current[j];
        if (state.membrane[j] >= state.v_th) {
            spikes[j] = 1;
            state.membrane[j] -= state.v_th;
        }
    }
    return spikes;
}

void lif_trace_step(LifState& state, const std::vector<std::uint8_t>& input_spikes) {
    require(input_spikes.size() == state.trace.size(),
            "lif_trace_step: spike count " + std::to_string(input_spikes.size()) +
                " != trace count " + std::to_string(state.trace.size()));
    const double decay = std::exp(-1.0 / state.tau);
    for (std::size_t i = 0; i < state.trace.size(); ++i)
        state.trace[i] = state.trace[i] * decay + static_cast<double>(input_spikes[i]);
}

Tensor spike_traces(const SpikeTrain& input, double tau) {
    require(tau > 0.0, "spike_traces: tau must be positive");
    const double decay = std::exp(-1.0 / tau);
    Tensor traces({input.neurons, input.timesteps});
    for (std::size_t n = 0; n < input.neurons; ++n) {
        double s = 0.0;
        for (std::size_t t = 0; t < input.timesteps; ++t) {
            s = s * decay + static_cast<double>(input.get(n, t));
            traces(n, t) = s;
        }
    }
    return traces;
}

SpikingConvResult spiking_conv_forward(const SpikeTrain& input_spikes,
                                       const std::vector<std::size_t>& input_shape,
                                       const Tensor& weights, const ConvSpec& spec, double v_th) {
    spec.validate();
    require(v_th > 0.0, "spiking_conv_forward: v_th must be positive");
    require(input_shape.size() == 3, "spiking_conv_forward: input shape must be channels x H x W");
    const std::size_t N = input_shape[0], H = input_shape[1], W = input_shape[2];
    require(N == spec.in_channels, "spiking_conv_forward: input channels " + std::to_string(N) +
                                       " != spec.in_channels " +
                                       std::to_string(spec.in_channels));
    require(input_spikes.neurons == N * H * W,
            "spiking_conv_forward: train has " + std::to_string(input_spikes.neurons) +
                " neurons, shape implies " + std::to_string(N * H * W));
    const std::size_t M = spec.out_channels, k = spec.kernel;
    require(weights.rank() == 4 && weights.shape[0] == M && weights.shape[1] == N &&
                weights.shape[2] == k && weights.shape[3] == k,
            "spiking_conv_forward: weights shape " + weights.shape_string() +
                " inconsistent with spec");
    const std::size_t OH = spec.out_extent(H), OW = spec.out_extent(W);
    const long pad = static_cast<long>(spec.padding);
    const long st = static_cast<long>(spec.stride);
    const std::size_t T = input_spikes.timesteps;

    SpikingConvResult r;
    r.output = SpikeTrain(M * OH * OW, T);
    r.membrane.assign(M * OH * OW, 0.0);

    // Per step: event-driven accumulation (only spiking presynaptic sites
    // contribute), then threshold/soft-reset.
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t y = 0; y < H; ++y) {
                for (std::size_t x = 0; x < W; ++x) {
                    if (!input_spikes.get((n * H + y) * W + x, t)) continue;
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        const long oy_num = static_cast<long>(y) + pad - static_cast<long>(ky);
                        if (oy_num < 0 || oy_num % st != 0) continue;
                        const std::size_t oy = static_cast<std::size_t>(oy_num / st);
                        if (oy >= OH) continue;
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const long ox_num = static_cast<long>(x) + pad - static_cast<long>(kx);
                            if (ox_num < 0 || ox_num % st != 0) continue;
                            const std::size_t ox = static_cast<std::size_t>(ox_num / st);
                            if (ox >= OW) continue;
                            for (std::size_t m = 0; m < M; ++m)
                                r.membrane[(m * OH + oy) * OW + ox] +=
                                    weights(m, n, ky, kx);
                        }
                    }
                }
            }
        }
        for (std::size_t j = 0; j < r.membrane.size(); ++j) {
            if (r.membrane[j] >= v_th) {
                r.output.set(j, t, 1);
                r.membrane[j] -= v_th;
            }
        }
    }
    r.activity = static_cast<double>(r.output.total_spikes()) /
                 static_cast<double>(M * OH * OW * T);
    return r;
}

Tensor spike_train_update(const Tensor& weights, const SpikeTrain& target,
                          const SpikeTrain& output, const Tensor& traces, double lr) {
    require(lr >= 0.0, "spike_train_update: lr must be non-negative");
    require(target.timesteps == output.timesteps && target.timesteps == traces.shape.back(),
            "spike_train_update: train lengths differ (target " +
                std::to_string(target.timesteps) + ", output " + std::to_string(output.timesteps) +
                ", traces " + std::to_string(traces.shape.back()) + ")");
    require(target.neurons == output.neurons, "spike_train_update: target has " +
                                                  std::to_string(target.neurons) +
                                                  " neurons, output " +
                                                  std::to_string(output.neurons));
    require(traces.rank() == 2, "spike_train_update: traces must be inputs x timesteps");
    const std::size_t I = traces.shape[0];
    const std::size_t T = traces.shape[1];
    const std::size_t J = target.neurons;

    const bool flat = weights.rank() == 1;
    require((flat && J == 1 && weights.shape[0] == I) ||
                (weights.rank() == 2 && weights.shape[0] == J && weights.shape[1] == I),
            "spike_train_update: weights " + weights.shape_string() + " inconsistent with " +
                std::to_string(J) + " neurons x " + std::to_string(I) + " inputs");

    Tensor out = weights;
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t i = 0; i < I; ++i) {
            double acc = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                const double err = static_cast<double>(target.get(j, t)) -
                                   static_cast<double>(output.get(j, t));
                acc += err * traces(i, t);
            }
            out.data[j * I + i] += lr * acc;
        }
    }
    return out;
}

Tensor spiking_conv_update(const Tensor& weights, const SpikeTrain& target,
                           const SpikeTrain& output, const Tensor& input_traces,
                           const std::vector<std::size_t>& input_shape, const ConvSpec& spec,
                           double lr) {
    spec.validate();
    require(input_shape.size() == 3, "spiking_conv_update: input shape must be channels x H x W");
    const std::size_t N = input_shape[0], H = input_shape[1], W = input_shape[2];
    const std::size_t M = spec.out_channels, k = spec.kernel;
    const std::size_t OH = spec.out_extent(H), OW = spec.out_extent(W);
    require(target.neurons == M * OH * OW && output.neurons == M * OH * OW,
            "spiking_conv_update: trains must cover the output map (" +
                std::to_string(M * OH * OW) + " neurons)");
    require(target.timesteps == output.timesteps &&
                target.timesteps == input_traces.shape.back(),
            "spiking_conv_update: train lengths differ");
    require(input_traces.rank() == 2 && input_traces.shape[0] == N * H * W,
            "spiking_conv_update: traces must be input sites x timesteps");
    const std::size_t T = target.timesteps;
    const long pad = static_cast<long>(spec.padding);
    const long st = static_cast<long>(spec.stride);

    // average over the spatial positions sharing each weight, so the rule
    // reduces to the per-synapse form on a 1x1 output map
    const double site_norm = 1.0 / static_cast<double>(OH * OW);

    Tensor out = weights;
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t oy = 0; oy < OH; ++oy) {
            for (std::size_t ox = 0; ox < OW; ++ox) {
                const std::size_t j = (m * OH + oy) * OW + ox;
                // skip sites with identical trains
                bool differs = false;
                for (std::size_t t = 0; t < T; ++t)
                    if (target.get(j, t) != output.get(j, t)) {
                        differs = true;
                        break;
                    }
                if (!differs) continue;
                for (std::size_t n = 0; n < N; ++n) {
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        const long iy = static_cast<long>(oy) * st + static_cast<long>(ky) - pad;
                        if (iy < 0 || iy >= static_cast<long>(H)) continue;
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const long ix =
                                static_cast<long>(ox) * st + static_cast<long>(kx) - pad;
                            if (ix < 0 || ix >= static_cast<long>(W)) continue;
                            const std::size_t i =
                                (n * H + static_cast<std::size_t>(iy)) * W +
                                static_cast<std::size_t>(ix);
                            double acc = 0.0;
                            for (std::size_t t = 0; t < T; ++t) {
                                const double err = static_cast<double>(target.get(j, t)) -
                                                   static_cast<double>(output.get(j, t));
                                acc += err * input_traces(i, t);
                            }
                            out(m, n, ky, kx) += lr * site_norm * acc;
                        }
                    }
                }
            }
        }
    }
    return out;
}

} // namespace scod
