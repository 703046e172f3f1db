#pragma once

#include <cstdint>
#include <vector>

#include "scod/conv.hpp"
#include "scod/tensor.hpp"

namespace scod {

// Binary spike raster, neurons x timesteps, row-major per neuron.
struct SpikeTrain {
    std::size_t neurons = 0;
    std::size_t timesteps = 0;
    std::vector<std::uint8_t> events; // 0 or 1

    SpikeTrain() = default;
    SpikeTrain(std::size_t n, std::size_t t) : neurons(n), timesteps(t), events(n * t, 0) {}

    std::uint8_t get(std::size_t n, std::size_t t) const { return events[n * timesteps + t]; }
    void set(std::size_t n, std::size_t t, std::uint8_t v) { events[n * timesteps + t] = v; }

    std::size_t spike_count(std::size_t n) const;
    std::size_t total_spikes() const;
    // spikes / timesteps for one neuron
    double decode_rate(std::size_t n) const;
    // firing times of one neuron, ascending
    std::vector<std::size_t> firing_times(std::size_t n) const;
};

enum class RateCoding { Periodic, Stochastic };

// Encode values in [0,1] as spike trains over T steps. Periodic mode is
// deterministic: value v fires at steps where floor((t+1)*v) > floor(t*v),
// so the spike count is exactly floor(T*v). Stochastic mode fires i.i.d.
// Bernoulli(v) per step from the seed.
SpikeTrain encode_rate(const Tensor& values, std::size_t timesteps, RateCoding mode,
                       std::uint64_t seed = 0);

// Integrate-and-fire state: membrane potentials plus the low-pass input
// trace used by the spike-train weight update.
struct LifState {
    std::vector<double> membrane;
    double v_th = 1.0;
    std::vector<double> trace; // one per input line
    double tau = 5.0;          // trace decay timeconstant, in steps

    static LifState make(std::size_t neurons, double v_th, std::size_t inputs = 0,
                         double tau = 5.0);
};

// One step: P += input; where P >= v_th emit a spike and soft-reset
// (P -= v_th). At most one spike per neuron per step.
std::vector<std::uint8_t> lif_step(LifState& state, const std::vector<double>& input_current);

// Advance the input traces one step: trace = trace*exp(-1/tau) + spike.
void lif_trace_step(LifState& state, const std::vector<std::uint8_t>& input_spikes);

// Exponential traces of a whole train: [neurons x T] tensor with
// trace(n,t) = trace(n,t-1)*exp(-1/tau) + spike(n,t).
Tensor spike_traces(const SpikeTrain& input, double tau);

struct SpikingConvResult {
    SpikeTrain output;            // M*OH*OW neurons
    double activity = 0.0;        // total output spikes / (M*OH*OW*T)
    std::vector<double> membrane; // final membrane values, for bookkeeping checks
};

// Spiking convolution: at each step the postsynaptic membrane accumulates
// the weights of presynaptic sites that spiked at that step, then
// fire/soft-reset applies. Membranes start at zero on every invocation.
SpikingConvResult spiking_conv_forward(const SpikeTrain& input_spikes,
                                       const std::vector<std::size_t>& input_shape,
                                       const Tensor& weights, const ConvSpec& spec, double v_th);

// Supervised spike-train update:
//   W(j,i) += lr * sum_t (S_d(j,t) - S_j(j,t)) * trace(i,t)
// weights may be [I] (single neuron) or [J x I]; traces is [I x T].
Tensor spike_train_update(const Tensor& weights, const SpikeTrain& target,
                          const SpikeTrain& output, const Tensor& traces, double lr);

// Convolutional form of the same rule: error trains live on the output map
// [M x OH x OW], traces on the input map [N x H x W]; each shared weight
// accumulates over all spatial positions it touches.
Tensor spiking_conv_update(const Tensor& weights, const SpikeTrain& target,
                           const SpikeTrain& output, const Tensor& input_traces,
                           const std::vector<std::size_t>& input_shape, const ConvSpec& spec,
                           double lr);

} // namespace scod
